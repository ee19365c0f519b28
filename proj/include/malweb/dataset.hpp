#pragma once

// Canonical feature schema, matrix assembly from samples, CSV persistence
// and fold planning.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "malweb/content_features.hpp"
#include "malweb/host_pdns.hpp"
#include "malweb/matrix.hpp"
#include "malweb/sample.hpp"
#include "malweb/url_lexical.hpp"

namespace malweb {

/// Nested feature subsets ordered by acquisition cost. HostAll is the
/// "all features" level; Embedding columns sit outside the nesting.
enum class Cascade { Base = 0, C1, C2, C3, HostAll, Embedding };

enum class FeatureKind { Numeric, Boolean, Categorical };

std::string_view cascade_name(Cascade c);
/// Accepts base, c1, c2, c3, all (case-insensitive).
std::optional<Cascade> parse_cascade(std::string_view s);

struct FeatureSpec {
  std::string name;
  Cascade cascade = Cascade::Base;
  FeatureKind kind = FeatureKind::Numeric;
  std::string title;
  bool operator==(const FeatureSpec&) const = default;
};

class FeatureSchema {
 public:
  static constexpr std::string_view kVersion = "v1";

  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureSpec> features);

  const std::vector<FeatureSpec>& features() const noexcept { return features_; }
  std::size_t size() const noexcept { return features_.size(); }
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;
  const FeatureSpec& operator[](std::size_t i) const { return features_.at(i); }

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<FeatureSpec> features_;
};

/// The canonical v1 schema (no embedding columns).
const FeatureSchema& schema();

/// Features whose cascade is at or below `level`. Embedding selects the
/// full schema plus any Embedding columns it carries.
FeatureSchema cascade_subset(const FeatureSchema& schema, Cascade level);

/// Everything the extractors need besides the sample itself.
struct ExtractionResources {
  PublicSuffixList suffixes;
  ScanLists lists = ScanLists::defaults();
  TldPricing pricing;
  AsnSet suspicious_asns;
  AsnSet false_positive_asns;
};

/// Per-sample extraction in canonical-schema order. Categorical slots hold
/// NaN in `values` and their raw string in `categorical`.
struct ExtractedRow {
  std::vector<double> values;
  std::map<std::size_t, std::string> categorical;
  std::vector<std::string> warnings;
};

ExtractedRow extract_row(const LabeledSample& sample, const ExtractionResources& res);

/// Categorical value -> relative frequency in the fitting data; unseen -> 0.
class FrequencyEncoder {
 public:
  void fit(const std::vector<std::string>& values);
  double encode(std::string_view value) const;
  const std::map<std::string, double, std::less<>>& table() const noexcept { return table_; }
  void set_table(std::map<std::string, double, std::less<>> table) { table_ = std::move(table); }

 private:
  std::map<std::string, double, std::less<>> table_;
};

struct FeatureMatrix {
  FeatureSchema schema;
  Matrix values;
  std::vector<Label> labels;
  std::map<std::string, FrequencyEncoder> encoders;
  std::vector<std::string> urls;
  std::vector<std::string> warnings;
};

/// Runs every extractor over `samples`, frequency-encodes categoricals and
/// keeps the columns of `target`. `jobs` > 1 extracts in parallel; the
/// result does not depend on it.
FeatureMatrix assemble(const std::vector<LabeledSample>& samples, const FeatureSchema& target,
                       const ExtractionResources& res, unsigned jobs = 1);

/// Writes `path` (features + "label") and the sidecar `path + ".meta.json"`.
void write_csv(const FeatureMatrix& m, const std::string& path);
/// Header must equal a cascade subset of the canonical schema followed by
/// "label"; otherwise SchemaMismatch. The sidecar is optional.
FeatureMatrix read_csv(const std::string& path);
/// Same, with an explicit expected header (without "label").
FeatureMatrix read_csv(const std::string& path, const std::vector<std::string>& expected);

std::string sidecar_path(const std::string& csv_path);

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;
  bool stratified = false;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  std::vector<std::size_t> train_indices(std::size_t fold) const;
  std::vector<std::size_t> test_indices(std::size_t fold) const;
};

/// Per-class shuffled round-robin: per-class fold counts differ by at most 1.
/// Throws InvalidArgument ("InvalidK") when k < 2 or k > n.
FoldPlan stratified_kfold(const std::vector<Label>& labels, std::size_t k, std::uint64_t seed);
FoldPlan stratified_kfold(const std::vector<int>& labels, std::size_t k, std::uint64_t seed);
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed);

}  // namespace malweb
