#include "malweb/cli.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "malweb/acquisition.hpp"
#include "malweb/dataset.hpp"
#include "malweb/embeddings.hpp"
#include "malweb/evaluation.hpp"
#include "malweb/text.hpp"

#ifndef MALWEB_DEFAULT_DATA_DIR
#define MALWEB_DEFAULT_DATA_DIR "data"
#endif

namespace malweb::cli {

namespace fs = std::filesystem;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

class PartialFailure : public Error {
 public:
  using Error::Error;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string digest(const nlohmann::json& j) { return sha256_hex(j.dump()); }

void write_manifest(const std::string& dir, RunManifest m) {
  m.created_at = utc_now();
  std::error_code ec;
  fs::create_directories(dir, ec);
  text::write_file_atomic((fs::path(dir) / "manifest.json").string(), m.to_json().dump(2) + "\n");
}

std::string dir_of(const std::string& file) {
  const fs::path p = fs::path(file).parent_path();
  return p.empty() ? "." : p.string();
}

nlohmann::json read_json_file(const std::string& path) {
  try {
    return nlohmann::json::parse(text::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  } catch (const IoError& e) {
    throw UsageError(e.what());
  }
}

// ---- shared resources -------------------------------------------------------

struct ResourcePaths {
  std::string data_dir = default_data_dir();
  std::string psl, pricing, suspicious_asns, fp_asns, scan_lists;

  std::string pick(const std::string& flag, const char* file) const {
    if (!flag.empty()) return flag;
    const fs::path p = fs::path(data_dir) / file;
    return fs::exists(p) ? p.string() : std::string();
  }

  void add_flags(CLI::App* app) {
    app->add_option("--data-dir", data_dir, "Directory holding the default lookup tables");
    app->add_option("--psl", psl, "Public suffix list (publicsuffix.org format)");
    app->add_option("--pricing", pricing, "TLD pricing CSV");
    app->add_option("--suspicious-asns", suspicious_asns, "Suspicious ASN list");
    app->add_option("--fp-asns", fp_asns, "False-positive ASN list");
    app->add_option("--scan-lists", scan_lists, "JavaScript/CSS scan lists (JSON)");
  }

  ExtractionResources load(std::map<std::string, std::string>& inputs, std::vector<std::string>& warnings) const {
    ExtractionResources r;
    if (auto p = pick(psl, "public_suffix_list.dat"); !p.empty()) {
      r.suffixes = PublicSuffixList::from_file(p);
      inputs["psl"] = p;
    } else {
      warnings.push_back("no public suffix list; TLD features fall back to the last host label");
    }
    if (auto p = pick(pricing, "tld_pricing.csv"); !p.empty()) {
      r.pricing = TldPricing::from_file(p);
      inputs["pricing"] = p;
    }
    if (auto p = pick(suspicious_asns, "suspicious_asns.txt"); !p.empty()) {
      r.suspicious_asns = load_asn_list(p);
      inputs["suspicious_asns"] = p;
    }
    if (auto p = pick(fp_asns, "false_positive_asns.txt"); !p.empty()) {
      r.false_positive_asns = load_asn_list(p);
      inputs["false_positive_asns"] = p;
    }
    if (auto p = pick(scan_lists, "scan_lists.json"); !p.empty()) {
      r.lists = ScanLists::from_file(p);
      inputs["scan_lists"] = p;
    }
    return r;
  }
};

// ---- fetch -----------------------------------------------------------------

struct FetchArgs {
  std::string urls, labels, cache = "cache", config, replay, label_map;
  unsigned jobs = 0;
  ResourcePaths res;
};

int cmd_fetch(const FetchArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "fetch";
  man.schema_version = std::string(FeatureSchema::kVersion);
  man.inputs = {{"urls", a.urls}, {"labels", a.labels}};

  AcquisitionConfig cfg;
  try {
    cfg = a.config.empty() ? AcquisitionConfig::defaults() : AcquisitionConfig::from_json(read_json_file(a.config));
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  if (a.jobs > 0) cfg.max_concurrency = a.jobs;
  if (!a.config.empty()) man.inputs["config"] = a.config;

  LabelMapper mapper = LabelMapper::defaults();
  if (!a.label_map.empty()) {
    try {
      mapper = LabelMapper::from_file(a.label_map);
    } catch (const ParseError& e) {
      throw UsageError(e.what());
    }
    man.inputs["label_map"] = a.label_map;
  }

  const auto urls = text::read_list_file(a.urls);
  const auto raw_labels = text::read_list_file(a.labels);
  if (urls.empty()) throw ParseError(a.urls + ": no URLs");
  if (urls.size() != raw_labels.size())
    throw ParseError("fetch: " + std::to_string(urls.size()) + " URLs but " + std::to_string(raw_labels.size()) +
                     " labels");

  std::vector<std::pair<std::string, Label>> items;
  for (std::size_t i = 0; i < urls.size(); ++i) {
    try {
      items.emplace_back(urls[i], mapper.normalize(raw_labels[i]));
    } catch (const UnknownLabel& e) {
      const std::string w = "row " + std::to_string(i + 1) + ": " + e.what() + ", skipped";
      err << "warning: " << w << "\n";
      man.warnings.push_back(w);
    }
  }
  if (items.empty()) throw ParseError("fetch: no rows with a known label");

  std::shared_ptr<HttpTransport> transport;
  std::shared_ptr<Resolver> resolver;
  if (!a.replay.empty()) {
    const nlohmann::json j = read_json_file(a.replay);
    const std::string base = dir_of(a.replay);
    auto st = std::make_shared<StaticResolver>();
    if (j.is_object()) {
      transport = ReplayTransport::from_json(j.value("http", nlohmann::json::array()), base);
      if (auto it = j.find("dns"); it != j.end())
        for (const auto& [host, ips] : it->items()) st->set(host, ips.get<std::vector<std::string>>());
    } else {
      transport = ReplayTransport::from_json(j, base);
    }
    resolver = st;
    man.inputs["replay"] = a.replay;
  } else {
    transport = std::make_shared<NetTransport>();
    resolver = std::make_shared<SystemResolver>();
  }

  PublicSuffixList suffixes;
  if (auto p = a.res.pick(a.res.psl, "public_suffix_list.dat"); !p.empty()) suffixes = PublicSuffixList::from_file(p);

  auto cache = std::make_shared<SampleCache>(a.cache);
  Acquirer acq(cfg, transport, resolver, cache, std::move(suffixes));
  std::vector<std::string> provider_names;
  for (const auto& [p, _] : cfg.providers) provider_names.emplace_back(provider_name(p));

  std::map<std::string, std::size_t> failures;
  std::size_t ok = 0, done = 0;
  const auto samples = acq.build_all(items, [&](std::size_t i, const LabeledSample& s) {
    ++done;
    std::size_t failed_providers = 0;
    for (const auto& note : s.annotations) {
      const std::string source = note.substr(0, note.find(':'));
      ++failures[source];
      for (const auto& pn : provider_names)
        if (source == pn) ++failed_providers;
    }
    const bool success = !s.page.html.empty() || failed_providers < provider_names.size();
    if (success) ++ok;
    out << "[" << done << "/" << items.size() << "] " << items[i].first << ": "
        << (success ? "ok" : "failed") << (s.annotations.empty() ? "" : " (" + std::to_string(s.annotations.size()) + " source errors)")
        << "\n";
  });

  out << "fetched " << ok << "/" << samples.size() << " samples into " << a.cache << "\n";
  for (const auto& [source, count] : failures) out << "  " << source << " failures: " << count << "\n";

  man.outputs["cache"] = a.cache;
  man.timings["total"] = since(t0);
  nlohmann::json cj = {{"fetch", cfg.fetch.to_json()}, {"max_concurrency", cfg.max_concurrency}};
  for (const auto& [p, cc] : cfg.providers)
    cj["providers"][std::string(provider_name(p))] = {{"base_url", cc.base_url},
                                                       {"rate_per_s", cc.rate_per_s},
                                                       {"burst", cc.burst},
                                                       {"timeout_s", cc.timeout_s},
                                                       {"max_attempts", cc.retry.max_attempts}};
  man.config_digest = digest(cj);
  for (const auto& [source, count] : failures) man.warnings.push_back(source + ": " + std::to_string(count) + " failures");
  write_manifest(a.cache, man);
  if (ok == 0) throw PartialFailure("fetch: no sample succeeded");
  return kOk;
}

// ---- assemble ----------------------------------------------------------------

struct AssembleArgs {
  std::string cache = "cache", out_csv, cascade = "all";
  unsigned jobs = 1;
  ResourcePaths res;
};

int cmd_assemble(const AssembleArgs& a, std::ostream& out, std::ostream& err) {
  const auto t0 = Clock::now();
  const auto level = parse_cascade(a.cascade);
  if (!level || *level == Cascade::Embedding) throw UsageError("--cascade: expected base, c1, c2, c3 or all");

  RunManifest man;
  man.command = "assemble";
  man.schema_version = std::string(FeatureSchema::kVersion);
  man.inputs["cache"] = a.cache;
  ExtractionResources res = a.res.load(man.inputs, man.warnings);

  SampleCache cache(a.cache);
  auto t_load = Clock::now();
  const auto samples = cache.load_all();
  man.timings["load"] = since(t_load);
  if (samples.empty()) throw ParseError("assemble: cache '" + a.cache + "' holds no samples");

  auto t_extract = Clock::now();
  const FeatureSchema target = cascade_subset(schema(), *level);
  FeatureMatrix m = assemble(samples, target, res, std::max(a.jobs, 1u));
  man.timings["extract"] = since(t_extract);
  write_csv(m, a.out_csv);

  std::set<std::string> distinct(m.warnings.begin(), m.warnings.end());
  if (!m.warnings.empty()) err << "warning: " << m.warnings.size() << " extraction warnings (" << distinct.size() << " distinct)\n";
  for (const auto& w : distinct) man.warnings.push_back(w);
  out << "wrote " << m.values.rows() << " rows x " << target.size() << " features (" << cascade_name(*level)
      << ") to " << a.out_csv << "\n";

  man.outputs = {{"csv", a.out_csv}, {"sidecar", sidecar_path(a.out_csv)}};
  man.timings["total"] = since(t0);
  man.config_digest = digest({{"cascade", cascade_name(*level)}, {"inputs", man.inputs}});
  write_manifest(dir_of(a.out_csv), man);
  return kOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string csv, model, config, embeddings, reduce, out_dir;
  std::size_t folds = 10;
  bool stratified = false;
  std::uint64_t seed = 42;
  unsigned jobs = 1;
  std::size_t top = 10;
  std::size_t charngram_dim = 64;
  // Which flags were given explicitly, so they override the config file.
  bool model_set = false, folds_set = false, stratified_set = false, seed_set = false, reduce_set = false,
       embeddings_set = false;
};

std::string detect_cascade(const FeatureSchema& s) {
  for (Cascade c : {Cascade::Base, Cascade::C1, Cascade::C2, Cascade::C3, Cascade::HostAll})
    if (cascade_subset(schema(), c).names() == s.names()) return std::string(cascade_name(c));
  return "custom";
}

int cmd_train(TrainArgs a, std::ostream& out, std::ostream&) {
  const auto t0 = Clock::now();
  RunManifest man;
  man.command = "train";
  man.schema_version = std::string(FeatureSchema::kVersion);
  man.inputs["csv"] = a.csv;

  // Config file first, flags on top.
  ModelSpec spec;
  std::vector<std::string> problems;
  if (!a.config.empty()) {
    nlohmann::json j = read_json_file(a.config);
    man.inputs["config"] = a.config;
    if (!j.is_object()) throw InvalidConfig({"config must be a JSON object"});
    if (auto it = j.find("train"); it != j.end()) {
      const nlohmann::json t = *it;
      j.erase("train");
      for (const auto& [k, v] : t.items()) {
        try {
          if (k == "folds") { if (!a.folds_set) a.folds = v.get<std::size_t>(); }
          else if (k == "stratified") { if (!a.stratified_set) a.stratified = v.get<bool>(); }
          else if (k == "reduce") { if (!a.reduce_set) a.reduce = v.get<std::string>(); }
          else if (k == "embeddings") { if (!a.embeddings_set) a.embeddings = v.get<std::string>(); }
          else problems.push_back("train." + k + ": unknown key");
        } catch (const nlohmann::json::exception&) {
          problems.push_back("train." + k + ": wrong type");
        }
      }
    }
    if (a.seed_set) j.erase("seed");
    if (a.model_set) j.erase("model");
    try {
      spec = parse_model_config(j);
    } catch (const InvalidConfig& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
    if (!a.seed_set && j.contains("seed") && j["seed"].is_number_unsigned()) a.seed = j["seed"].get<std::uint64_t>();
  }
  if (a.model_set) {
    if (auto k = parse_model_kind(a.model)) spec.kind = *k;
    else problems.push_back("--model: expected logreg, rf or gbt");
  }
  spec.set_seed(a.seed);
  ReductionSpec reduction;
  try {
    reduction = ReductionSpec::parse(a.reduce.empty() ? "none" : a.reduce);
  } catch (const InvalidArgument& e) {
    problems.push_back(e.what());
  }
  if (a.folds < 2) problems.push_back("--folds: must be >= 2");
  for (auto& p : spec.validate())
    if (std::find(problems.begin(), problems.end(), p) == problems.end()) problems.push_back(p);
  if (!problems.empty()) throw InvalidConfig(std::move(problems));
  man.seed = a.seed;

  auto t_load = Clock::now();
  FeatureMatrix m = read_csv(a.csv);
  if (m.values.rows() == 0) throw ParseError(a.csv + ": no rows");
  CvData data;
  data.features = m.values;
  data.feature_names = m.schema.names();
  for (const auto& f : m.schema.features()) data.feature_titles.push_back(f.title.empty() ? f.name : f.title);
  for (Label l : m.labels) data.labels.push_back(static_cast<int>(l));
  data.n_classes = kLabelCount;

  std::string emb_source = "none";
  if (!a.embeddings.empty()) {
    if (m.urls.size() != m.labels.size())
      throw ParseError("--embeddings: " + sidecar_path(a.csv) + " with row URLs is required to join embeddings");
    const std::size_t n = m.urls.size();
    if (a.embeddings == "charngram") {
      data.embeddings = Matrix(n, a.charngram_dim);
      for (std::size_t i = 0; i < n; ++i) {
        const auto v = char_ngram_embedding(m.urls[i], a.charngram_dim, 3);
        for (std::size_t j = 0; j < v.size(); ++j) data.embeddings(i, j) = v[j];
      }
      emb_source = "charngram";
    } else {
      const EmbeddingTable table = import_embeddings(a.embeddings);
      data.embeddings = Matrix(n, table.dim);
      std::size_t missing = 0;
      for (std::size_t i = 0; i < n; ++i) {
        auto it = table.rows.find(m.urls[i]);
        if (it == table.rows.end()) {
          ++missing;
          continue;
        }
        for (std::size_t j = 0; j < table.dim; ++j) data.embeddings(i, j) = it->second[j];
      }
      if (missing > 0)
        throw ParseError("--embeddings: " + std::to_string(missing) + " of " + std::to_string(n) +
                         " URLs have no embedding row in " + a.embeddings);
      emb_source = a.embeddings;
      man.inputs["embeddings"] = a.embeddings;
    }
  } else if (reduction.kind != ReductionKind::None) {
    throw InvalidConfig({"--reduce needs --embeddings"});
  }
  man.timings["load"] = since(t_load);

  const FoldPlan plan = a.stratified ? stratified_kfold(data.labels, a.folds, a.seed) : kfold(m.values.rows(), a.folds, a.seed);
  for (const auto& w : plan.warnings) man.warnings.push_back(w);

  auto t_cv = Clock::now();
  const FoldReport report = cross_validate(spec, data, plan, reduction, std::max(a.jobs, 1u));
  man.timings["cross_validation"] = since(t_cv);

  const std::string cascade = detect_cascade(m.schema);
  std::ostringstream title;
  title << model_kind_name(spec.kind) << ", cascade " << cascade << ", " << a.folds << "-fold"
        << (a.stratified ? " stratified" : "");
  out << report.to_table(title.str());

  nlohmann::json config_json = model_spec_to_json(spec);
  config_json["seed"] = a.seed;
  config_json["train"] = {{"folds", a.folds},
                          {"stratified", a.stratified},
                          {"reduce", reduction.to_string()},
                          {"embeddings", emb_source}};
  man.config_digest = digest(config_json);

  nlohmann::json rep;
  rep["command"] = "train";
  rep["config"] = config_json;
  rep["cascade"] = cascade;
  rep["n_samples"] = m.values.rows();
  rep["n_features"] = m.values.cols();
  rep["columns"] = data.feature_names;
  rep["metrics"] = report.to_json();
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw IoError("cannot create " + a.out_dir + ": " + ec.message());
  const std::string report_path = (fs::path(a.out_dir) / "report.json").string();
  text::write_file_atomic(report_path, rep.dump(2) + "\n");
  man.outputs["report"] = report_path;

  if (spec.kind == ModelKind::Gbt) {
    auto t_fit = Clock::now();
    const FittedPipeline fp = fit_pipeline(spec, data, reduction);
    const auto& gbt = dynamic_cast<const Gbt&>(*fp.model);
    const ContributionReport contrib = feature_contributions(gbt, fp.column_names, fp.column_titles);
    const std::string path = (fs::path(a.out_dir) / "contributions.csv").string();
    text::write_file_atomic(path, contrib.to_csv());
    man.outputs["contributions"] = path;
    man.timings["contributions"] = since(t_fit);
    out << "\nTop feature contributions\n" << contrib.to_table(a.top);
  }

  man.timings["total"] = since(t0);
  write_manifest(a.out_dir, man);
  return kOk;
}

}  // namespace

nlohmann::json RunManifest::to_json() const {
  return {{"command", command}, {"config_digest", config_digest}, {"schema_version", schema_version},
          {"seed", seed},       {"inputs", inputs},               {"outputs", outputs},
          {"timings", timings}, {"warnings", warnings},           {"created_at", created_at}};
}

std::string default_data_dir() {
  if (const char* env = std::getenv("MALWEB_DATA_DIR"); env && *env) return env;
  return MALWEB_DEFAULT_DATA_DIR;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Malicious website feature extraction and granular classification"};
  app.name(args.empty() ? "malweb" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  FetchArgs fa;
  auto* fetch = app.add_subcommand("fetch", "Collect pages and threat intel into the sample cache");
  fetch->add_option("--urls", fa.urls, "One URL per line")->required();
  fetch->add_option("--labels", fa.labels, "One raw label per line, aligned with --urls")->required();
  fetch->add_option("--cache", fa.cache, "Cache directory");
  fetch->add_option("--config", fa.config, "Acquisition config (JSON)");
  fetch->add_option("--replay", fa.replay, "Serve HTTP and DNS from a fixture file instead of the network");
  fetch->add_option("--label-map", fa.label_map, "Extra raw-label mappings (JSON object)");
  fetch->add_option("--jobs", fa.jobs, "Concurrent samples");
  fetch->add_option("--psl", fa.res.psl, "Public suffix list");
  fetch->add_option("--data-dir", fa.res.data_dir, "Directory holding the default lookup tables");

  AssembleArgs aa;
  auto* assemble_cmd = app.add_subcommand("assemble", "Extract features from cached samples into a CSV");
  assemble_cmd->add_option("--cache", aa.cache, "Cache directory");
  assemble_cmd->add_option("--out", aa.out_csv, "Output CSV")->required();
  assemble_cmd->add_option("--cascade", aa.cascade, "base, c1, c2, c3 or all");
  assemble_cmd->add_option("--jobs", aa.jobs, "Extraction threads");
  aa.res.add_flags(assemble_cmd);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Cross-validate a model on a feature CSV");
  train->add_option("--csv", ta.csv, "Feature CSV from assemble")->required();
  auto* o_model = train->add_option("--model", ta.model, "logreg, rf or gbt (default gbt)");
  train->add_option("--config", ta.config, "Model config (JSON)");
  auto* o_folds = train->add_option("--folds", ta.folds, "Number of folds");
  auto* o_strat = train->add_flag("--stratified", ta.stratified, "Stratify folds by label");
  auto* o_emb = train->add_option("--embeddings", ta.embeddings, "Embedding CSV (url,e0,...) or 'charngram'");
  auto* o_reduce = train->add_option("--reduce", ta.reduce, "none, lda or chi2:K");
  train->add_option("--out", ta.out_dir, "Output directory")->required();
  auto* o_seed = train->add_option("--seed", ta.seed, "Seed for folds and models");
  train->add_option("--jobs", ta.jobs, "Folds evaluated concurrently");
  train->add_option("--top", ta.top, "Contributions shown on screen");

  std::vector<std::string> rest(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (fetch->parsed()) return cmd_fetch(fa, out, err);
    if (assemble_cmd->parsed()) return cmd_assemble(aa, out, err);
    ta.model_set = o_model->count() > 0;
    ta.folds_set = o_folds->count() > 0;
    ta.stratified_set = o_strat->count() > 0;
    ta.embeddings_set = o_emb->count() > 0;
    ta.reduce_set = o_reduce->count() > 0;
    ta.seed_set = o_seed->count() > 0;
    return cmd_train(ta, out, err);
  } catch (const InvalidConfig& e) {
    err << "error: invalid configuration\n";
    for (const auto& p : e.problems()) err << "  - " << p << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PartialFailure& e) {
    err << "error: " << e.what() << "\n";
    return kPartial;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kData;
  }
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace malweb::cli
