#pragma once

// Slow, independent recomputations used to cross-check the library.

#include <string>
#include <vector>

#include "malweb/host_pdns.hpp"
#include "malweb/matrix.hpp"
#include "malweb/models.hpp"
#include "malweb/url_lexical.hpp"

namespace malweb::testing {

double entropy_oracle(const std::string& s);

/// Regex search for a dotted quad with octets <= 255.
bool ipv4_substring_oracle(const std::string& s);

struct HandParts {
  std::string hostname;
  std::vector<std::string> subdomains;
  std::string sld;
  std::string suffix;
  bool is_ip = false;
  std::size_t tld_count = 0;
};

/// Lexical features from the URL string and a hand decomposition.
LexicalFeatures lexical_oracle(const std::string& url, const HandParts& parts);

/// O(n^2) counts over the records.
PdnsFeatures pdns_oracle(const std::vector<PassiveDnsRecord>& records, const AsnSet& suspicious,
                         const AsnSet& false_positive);

/// Tries every feature and midpoint; Gini, x < t goes left.
Split exhaustive_tree_split(const Matrix& x, const std::vector<int>& y, std::size_t n_classes);

struct StumpOracle {
  int feature = -1;  // -1: the root stays a leaf
  double threshold = 0.0;
  double gain = 0.0;
  double left_value = 0.0;  // learning rate applied; the root value when unsplit
  double right_value = 0.0;
};

/// First boosting round of a softmax GBT from zero margins, one stump per class.
std::vector<StumpOracle> exhaustive_gbt_stumps(const Matrix& x, const std::vector<int>& y, std::size_t n_classes,
                                 double lambda, double min_child_weight, double gamma, double learning_rate);

}  // namespace malweb::testing
