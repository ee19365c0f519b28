// Python module: feature extraction, the classifiers, metrics, reductions
// and the batch front end.

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "malweb/cli.hpp"
#include "malweb/content_features.hpp"
#include "malweb/dataset.hpp"
#include "malweb/embeddings.hpp"
#include "malweb/evaluation.hpp"
#include "malweb/labels.hpp"
#include "malweb/metrics.hpp"
#include "malweb/models.hpp"
#include "malweb/url_lexical.hpp"

namespace py = pybind11;
using namespace malweb;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Matrix& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

py::dict lexical_dict(const LexicalFeatures& f) {
  py::dict d;
  d["url_length"] = f.url_length;
  d["underscore_count"] = f.underscore_count;
  d["semicolon_count"] = f.semicolon_count;
  d["subdomain_count"] = f.subdomain_count;
  d["zero_count"] = f.zero_count;
  d["space_count"] = f.space_count;
  d["hyphen_count"] = f.hyphen_count;
  d["at_count"] = f.at_count;
  d["query_count"] = f.query_count;
  d["ampersand_count"] = f.ampersand_count;
  d["equals_count"] = f.equals_count;
  d["hostname_length"] = f.hostname_length;
  d["digits_to_url_ratio"] = f.digits_to_url_ratio;
  d["digits_to_hostname_ratio"] = f.digits_to_hostname_ratio;
  d["digits_to_domain_ratio"] = f.digits_to_domain_ratio;
  d["ip_in_url"] = f.ip_in_url;
  d["at_in_url"] = f.at_in_url;
  d["domain_length"] = f.domain_length;
  d["unique_chars"] = f.unique_chars;
  d["unique_digits"] = f.unique_digits;
  d["unique_letters"] = f.unique_letters;
  d["letters_to_chars_ratio"] = f.letters_to_chars_ratio;
  d["numbers_to_chars_ratio"] = f.numbers_to_chars_ratio;
  d["tld"] = f.tld;
  d["domain_entropy"] = f.domain_entropy;
  d["tld_count_in_url"] = f.tld_count_in_url;
  d["url_entropy"] = f.url_entropy;
  return d;
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  for (auto name : kMetricNames) d[py::str(std::string(name))] = metric_value(m, name);
  return d;
}

GbtConfig gbt_config(const py::kwargs& kw) {
  GbtConfig c = GbtConfig::tuned();
  for (const auto& [k, v] : kw) {
    const std::string key = py::str(k);
    if (key == "max_depth") c.max_depth = v.cast<std::size_t>();
    else if (key == "min_child_weight") c.min_child_weight = v.cast<double>();
    else if (key == "n_estimators") c.n_estimators = v.cast<std::size_t>();
    else if (key == "colsample_bytree") c.colsample_bytree = v.cast<double>();
    else if (key == "learning_rate") c.learning_rate = v.cast<double>();
    else if (key == "gamma") c.gamma = v.cast<double>();
    else if (key == "dart_drop_rate") c.dart_drop_rate = v.cast<double>();
    else if (key == "reg_lambda") c.reg_lambda = v.cast<double>();
    else if (key == "seed") c.seed = v.cast<std::uint64_t>();
    else if (key == "booster") {
      const std::string b = v.cast<std::string>();
      if (b == "dart") c.booster = Booster::Dart;
      else if (b == "standard" || b == "gbtree") c.booster = Booster::Standard;
      else throw py::value_error("booster: expected dart or standard");
    } else {
      throw py::type_error("unknown Gbt option '" + key + "'");
    }
  }
  return c;
}

}  // namespace

PYBIND11_MODULE(_malweb, m) {
  m.doc() = "Malicious-URL feature extraction and classification";

  py::register_exception<Error>(m, "MalwebError", PyExc_RuntimeError);

  py::class_<PublicSuffixList>(m, "PublicSuffixList")
      .def(py::init<>())
      .def_static("from_file", &PublicSuffixList::from_file)
      .def_static("from_text", [](const std::string& s) { return PublicSuffixList::from_text(s); })
      .def("suffix_of", [](const PublicSuffixList& p, const std::string& h) { return p.suffix_of(h); })
      .def("__len__", &PublicSuffixList::size);

  m.def("lexical_features",
        [](const std::string& url, const PublicSuffixList& psl) { return lexical_dict(extract_lexical(url, psl)); },
        py::arg("url"), py::arg("suffixes"));
  m.def("shannon_entropy", [](const std::string& s) { return shannon_entropy(s); });
  m.def("contains_ipv4", [](const std::string& s) { return contains_ipv4(s); });

  m.def("robots_stats", [](std::optional<std::string> body) {
    const RobotsStats r = parse_robots_txt(body);
    py::dict d;
    d["exists"] = r.exists;
    d["user_agent_count"] = r.user_agent_count;
    d["disallow_count"] = r.disallow_count;
    d["allow_count"] = r.allow_count;
    d["sitemap_count"] = r.sitemap_count;
    d["comment_count"] = r.comment_count;
    d["disallows_root"] = r.disallows_root;
    return d;
  });

  m.def(
      "feature_names",
      [](const std::string& cascade) {
        const auto c = parse_cascade(cascade);
        if (!c) throw py::value_error("cascade: expected base, c1, c2, c3 or all");
        return cascade_subset(schema(), *c).names();
      },
      py::arg("cascade") = "all");

  m.def("read_csv", [](const std::string& path) {
    const FeatureMatrix f = read_csv(path);
    std::vector<int> y;
    for (Label l : f.labels) y.push_back(static_cast<int>(l));
    return py::make_tuple(to_array(f.values), y, f.schema.names());
  });

  m.def("label_names", [] {
    std::vector<std::string> out;
    for (Label l : all_labels()) out.emplace_back(label_name(l));
    return out;
  });
  m.def("normalize_label", [](const std::string& raw) { return std::string(label_name(normalize_label(raw))); });

  py::class_<Gbt>(m, "Gbt")
      .def(py::init([](const py::kwargs& kw) { return Gbt(gbt_config(kw)); }))
      .def("fit", [](Gbt& g, const Array& x, const std::vector<int>& y, std::size_t k) { g.fit(to_matrix(x), y, k); },
           py::arg("x"), py::arg("y"), py::arg("n_classes"))
      .def("predict_proba", [](const Gbt& g, const Array& x) { return to_array(g.predict_proba(to_matrix(x))); })
      .def("feature_gain", &Gbt::feature_gain)
      .def_property_readonly("training_loss", &Gbt::training_loss);

  py::class_<LogisticRegression>(m, "LogisticRegression")
      .def(py::init([](double lambda, std::size_t max_iters) {
             LogRegConfig c;
             c.lambda = lambda;
             c.max_iters = max_iters;
             return LogisticRegression(c);
           }),
           py::arg("reg_lambda") = 1.0, py::arg("max_iters") = 1000)
      .def("fit", [](LogisticRegression& r, const Array& x, const std::vector<int>& y,
                     std::size_t k) { r.fit(to_matrix(x), y, k); })
      .def("predict_proba",
           [](const LogisticRegression& r, const Array& x) { return to_array(r.predict_proba(to_matrix(x))); })
      .def_property_readonly("converged", &LogisticRegression::converged);

  m.def("compute_metrics", [](const std::vector<int>& y, const Array& proba) {
    return metrics_dict(compute_metrics(y, to_matrix(proba)));
  });

  m.def("chi2_scores", [](const Array& x, const std::vector<int>& y) { return chi2_scores(to_matrix(x), y); });
  m.def(
      "lda_fit_transform",
      [](const Array& x, const std::vector<int>& y, std::size_t components) {
        const Matrix mx = to_matrix(x);
        return to_array(lda_transform(lda_fit(mx, y, components), mx));
      },
      py::arg("x"), py::arg("y"), py::arg("n_components"));
  m.def("minmax_scale", [](const Array& x) { return to_array(minmax_scale(to_matrix(x))); });

  m.def("feature_contributions", [](const Gbt& g, const std::vector<std::string>& names) {
    std::vector<std::pair<std::string, double>> out;
    for (const auto& c : feature_contributions(g, names).items) out.emplace_back(c.feature, c.percent());
    return out;
  });

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "malweb");
    std::ostringstream out, err;
    int code;
    {
      py::gil_scoped_release release;
      code = cli::run(args, out, err);
    }
    return py::make_tuple(code, out.str(), err.str());
  });
}
