#pragma once

// Minimal RFC 4180 reader/writer: quoted fields, doubled quotes, LF or CRLF.

#include <string>
#include <string_view>
#include <vector>

namespace malweb::csv {

using Row = std::vector<std::string>;

std::vector<Row> parse(std::string_view body);
std::string quote(std::string_view field);
std::string format_row(const Row& row);

}  // namespace malweb::csv
