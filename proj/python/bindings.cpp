#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "occml/data.hpp"
#include "occml/eda.hpp"
#include "occml/explain.hpp"
#include "occml/metrics.hpp"
#include "occml/models/classifier.hpp"
#include "occml/parallel.hpp"
#include "occml/pipeline.hpp"
#include "occml/tuning.hpp"

namespace py = pybind11;
using namespace occml;

namespace {

// JSON crosses the boundary as text; the Python package decodes it.
std::string dump(const nlohmann::json& j) { return j.dump(); }

nlohmann::json parse(const std::string& s) { return s.empty() ? nlohmann::json::object() : nlohmann::json::parse(s); }

std::vector<std::size_t> as_indices(const std::vector<std::size_t>& v) { return v; }

}  // namespace

PYBIND11_MODULE(_occml, m) {
  m.doc() = "Native core of the occml occupancy-classification toolkit";
  m.attr("__version__") = OCCML_VERSION;

  static py::exception<Error> occml_error(m, "OccmlError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(occml_error, e.what());
    }
  });

  m.def("set_thread_count", &set_thread_count, py::arg("threads"));

  py::class_<data::Dataset>(m, "Dataset")
      .def("__len__", &data::Dataset::size)
      .def("features", py::overload_cast<>(&data::Dataset::features, py::const_))
      .def("labels", py::overload_cast<>(&data::Dataset::labels, py::const_))
      .def("column", &data::Dataset::column, py::arg("name"))
      .def_static("feature_names", &data::Dataset::feature_names)
      .def("save", [](const data::Dataset& d, const std::filesystem::path& p) { data::save_dataset(d, p); })
      .def("__eq__", [](const data::Dataset& a, const data::Dataset& b) { return a == b; });

  m.def("load_dataset", &data::load_dataset, py::arg("path"));
  m.def("parse_dataset", [](const std::string& text) {
    std::istringstream in(text);
    return data::parse_dataset(in);
  });
  m.def("generate_synthetic", &data::generate_synthetic, py::arg("n_rows"), py::arg("seed"));
  m.def(
      "split",
      [](const data::Dataset& d, double test_fraction, std::uint64_t seed, bool stratified) {
        const auto s = data::split(d, test_fraction, seed, stratified);
        return py::make_tuple(as_indices(s.train_indices), as_indices(s.test_indices));
      },
      py::arg("dataset"), py::arg("test_fraction"), py::arg("seed"), py::arg("stratified") = true);

  m.def(
      "evaluate_json",
      [](const Matrix& scores, const Labels& labels, int num_classes) {
        return dump(metrics::to_json(metrics::evaluate(scores, labels, num_classes)));
      },
      py::arg("scores"), py::arg("labels"), py::arg("num_classes") = data::kNumClasses);
  m.def("binary_auc", &metrics::binary_auc, py::arg("scores"), py::arg("is_positive"));

  py::class_<models::Classifier, std::shared_ptr<models::Classifier>>(m, "Classifier")
      .def_property_readonly("kind", [](const models::Classifier& c) { return std::string(models::kind_name(c.kind())); })
      .def_property_readonly("num_classes", &models::Classifier::num_classes)
      .def_property_readonly("num_features", &models::Classifier::num_features)
      .def("predict_proba", &models::Classifier::predict_proba, py::arg("x"))
      .def("predict", &models::Classifier::predict, py::arg("x"))
      .def("to_json", [](const models::Classifier& c) { return dump(c.to_json()); });

  m.def(
      "fit",
      [](const std::string& kind, const Matrix& x, const Labels& y, int num_classes, const std::string& params,
         std::uint64_t seed) -> std::shared_ptr<models::Classifier> {
        const auto k = models::parse_kind(kind);
        py::gil_scoped_release release;
        return models::fit(k, x, y, num_classes, models::resolve_params(k, parse(params)), seed);
      },
      py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("num_classes"), py::arg("params") = "",
      py::arg("seed") = 0);
  m.def("model_from_json", [](const std::string& doc) -> std::shared_ptr<models::Classifier> {
    return models::from_json(nlohmann::json::parse(doc));
  });
  m.def("default_params_json", [](const std::string& kind) { return dump(models::default_params(models::parse_kind(kind))); });

  m.def("default_grids_json", [] { return dump(pipeline::default_grids_json()); });
  m.def(
      "tune",
      [](const std::string& kind, const Matrix& x, const Labels& y, const std::string& profile, int k,
         std::uint64_t seed, const std::string& grid) {
        const auto mk = models::parse_kind(kind);
        const auto g = grid.empty() ? tuning::default_grid(mk, tuning::parse_profile(profile))
                                    : tuning::grid_from_json(mk, parse(grid));
        py::gil_scoped_release release;
        const auto folds = tuning::stratified_kfold(y, k, seed);
        const auto result = tuning::grid_search(g, x, y, data::kNumClasses, folds, seed);
        auto body = tuning::to_json(result);
        body["timings"] = tuning::timings_json(result);
        return dump(body);
      },
      py::arg("kind"), py::arg("x"), py::arg("y"), py::arg("profile") = "fast", py::arg("k") = 5,
      py::arg("seed") = 0, py::arg("grid") = "");

  m.def(
      "explain_json",
      [](const models::Classifier& model, const Matrix& rows, const Matrix& background, const std::string& method,
         int n_pairs, std::uint64_t seed) {
        explain::ExplainOptions options;
        if (method == "exact") {
          options.method = explain::Method::kExact;
        } else if (method == "sampled") {
          options.method = explain::Method::kSampled;
        } else {
          throw Error(ErrorKind::kInvalidArgument, "method must be 'exact' or 'sampled'");
        }
        options.n_pairs = n_pairs;
        options.seed = seed;
        std::vector<std::string> names;
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
          names.push_back(rows.cols() == data::kNumFeatures ? data::Dataset::feature_names()[static_cast<std::size_t>(j)]
                                                            : "x" + std::to_string(j));
        }
        py::gil_scoped_release release;
        const auto e = explain::explain_rows(model, rows, background, names, options);
        auto body = explain::to_json(e);
        body["summary"] = explain::to_json(explain::shap_summary(e));
        return dump(body);
      },
      py::arg("model"), py::arg("rows"), py::arg("background"), py::arg("method") = "sampled",
      py::arg("n_pairs") = 16, py::arg("seed") = 0);

  m.def("lag1_autocorrelation", [](const std::vector<double>& s) { return eda::lag1_autocorrelation(s); });
  m.def("pearson", [](const std::vector<double>& a, const std::vector<double>& b) { return eda::pearson(a, b); });
  m.def("ols_fit", [](const std::vector<double>& x, const std::vector<double>& y) {
    const auto f = eda::ols_fit(x, y);
    return py::make_tuple(f.intercept, f.slope);
  });
  m.def("eda_json", [](const data::Dataset& d) { return dump(eda::to_json(eda::run_eda(d))); });

  m.def(
      "run_command",
      [](const std::string& command, const std::filesystem::path& config_path, const std::vector<std::string>& kinds,
         bool tune_on_demand) {
        const auto config = pipeline::load_config(config_path);
        std::vector<models::ModelKind> selected;
        for (const auto& k : kinds) selected.push_back(models::parse_kind(k));
        if (selected.empty()) selected = config.models;
        std::ostringstream out;
        std::ostringstream err;
        const pipeline::Console console{out, err};
        int rc = pipeline::exit_code::kInput;
        {
          py::gil_scoped_release release;
          if (command == "eda") {
            rc = pipeline::cmd_eda(config, console);
          } else if (command == "tune") {
            rc = pipeline::cmd_tune(config, selected, console);
          } else if (command == "evaluate") {
            rc = pipeline::cmd_evaluate(config, selected, tune_on_demand, console);
          } else if (command == "explain") {
            rc = pipeline::cmd_explain(config, selected, {}, console);
          } else if (command == "report") {
            rc = pipeline::cmd_report(config, console);
          } else {
            err << "unknown command '" << command << "'\n";
          }
        }
        return py::make_tuple(rc, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("models") = std::vector<std::string>{},
      py::arg("tune_on_demand") = false);
}
