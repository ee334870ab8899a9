#include "occml/models/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "occml/models/gbt.hpp"
#include "occml/models/linear.hpp"
#include "occml/models/mlp.hpp"
#include "occml/models/tree.hpp"

namespace occml::models {

namespace {

struct KindEntry {
  ModelKind kind;
  std::string_view name;
};

constexpr KindEntry kKinds[] = {
    {ModelKind::kMajority, "majority"},   {ModelKind::kLogistic, "logistic"},
    {ModelKind::kLda, "lda"},             {ModelKind::kSvm, "svm"},
    {ModelKind::kRandomForest, "rf"},     {ModelKind::kLightGbm, "lightgbm"},
    {ModelKind::kXgboost, "xgboost"},     {ModelKind::kMlp, "mlp"},
};

[[noreturn]] void bad_param(ModelKind kind, const std::string& what) {
  throw Error(ErrorKind::kInvalidHyperparameter, std::string(kind_name(kind)) + ": " + what);
}

double number(ModelKind kind, const Params& p, const char* name) {
  const auto& v = p.at(name);
  if (!v.is_number()) bad_param(kind, std::string(name) + " must be a number");
  return v.get<double>();
}

void require(ModelKind kind, bool ok, const std::string& what) {
  if (!ok) bad_param(kind, what);
}

bool is_integral(double v) { return std::floor(v) == v; }

void validate(ModelKind kind, const Params& p) {
  auto num = [&](const char* name) { return number(kind, p, name); };
  switch (kind) {
    case ModelKind::kMajority:
      break;
    case ModelKind::kLogistic:
      require(kind, num("l2") >= 0, "l2 must be >= 0");
      require(kind, num("lr") > 0, "lr must be > 0");
      require(kind, num("max_iters") >= 1 && is_integral(num("max_iters")), "max_iters must be a positive integer");
      require(kind, num("tol") >= 0, "tol must be >= 0");
      break;
    case ModelKind::kLda:
      require(kind, num("shrinkage") >= 0 && num("shrinkage") <= 1, "shrinkage must lie in [0, 1]");
      break;
    case ModelKind::kSvm: {
      require(kind, num("C") > 0, "C must be > 0");
      require(kind, num("max_epochs") >= 1 && is_integral(num("max_epochs")), "max_epochs must be a positive integer");
      const auto& kernel = p.at("kernel");
      require(kind, kernel.is_string() && (kernel == "linear" || kernel == "rff"), "kernel must be 'linear' or 'rff'");
      require(kind, num("gamma") > 0, "gamma must be > 0");
      require(kind, num("n_components") >= 1 && is_integral(num("n_components")), "n_components must be a positive integer");
      break;
    }
    case ModelKind::kRandomForest:
      require(kind, num("n_trees") >= 1 && is_integral(num("n_trees")), "n_trees must be >= 1");
      require(kind, num("max_depth") >= 0 && is_integral(num("max_depth")), "max_depth must be >= 0 (0: unlimited)");
      require(kind, num("min_samples_leaf") >= 1, "min_samples_leaf must be >= 1");
      require(kind, num("max_features") >= 0 && is_integral(num("max_features")), "max_features must be >= 0 (0: all)");
      require(kind, p.at("bootstrap").is_boolean(), "bootstrap must be a boolean");
      break;
    case ModelKind::kLightGbm:
    case ModelKind::kXgboost:
      require(kind, num("n_rounds") >= 1 && is_integral(num("n_rounds")), "n_rounds must be >= 1");
      require(kind, num("learning_rate") > 0, "learning_rate must be > 0");
      require(kind, num("lambda") >= 0, "lambda must be >= 0");
      require(kind, num("gamma") >= 0, "gamma must be >= 0");
      require(kind, num("min_child_weight") >= 0, "min_child_weight must be >= 0");
      require(kind, num("max_depth") >= 0 && is_integral(num("max_depth")), "max_depth must be >= 0");
      if (kind == ModelKind::kXgboost) {
        require(kind, num("max_depth") >= 1, "level-wise growth needs max_depth >= 1");
      } else {
        require(kind, num("num_leaves") >= 2 && is_integral(num("num_leaves")), "num_leaves must be >= 2");
      }
      break;
    case ModelKind::kMlp: {
      const auto& hidden = p.at("hidden_sizes");
      require(kind, hidden.is_array() && !hidden.empty(), "hidden_sizes needs at least one hidden layer");
      for (const auto& h : hidden) {
        require(kind, h.is_number_integer() && h.get<int>() >= 1, "hidden sizes must be positive integers");
      }
      require(kind, num("l2") >= 0, "l2 must be >= 0");
      require(kind, num("lr") > 0, "lr must be > 0");
      require(kind, num("batch_size") >= 1 && is_integral(num("batch_size")), "batch_size must be >= 1");
      require(kind, num("epochs") >= 1 && is_integral(num("epochs")), "epochs must be >= 1");
      require(kind, p.at("early_stopping").is_boolean(), "early_stopping must be a boolean");
      require(kind, num("validation_fraction") > 0 && num("validation_fraction") < 1, "validation_fraction must lie in (0, 1)");
      require(kind, num("patience") >= 1 && is_integral(num("patience")), "patience must be >= 1");
      break;
    }
  }
}

}  // namespace

std::string_view kind_name(ModelKind kind) {
  for (const auto& e : kKinds) {
    if (e.kind == kind) return e.name;
  }
  return "unknown";
}

ModelKind parse_kind(std::string_view name) {
  for (const auto& e : kKinds) {
    if (e.name == name) return e.kind;
  }
  if (name == "random_forest") return ModelKind::kRandomForest;
  if (name == "benchmark") return ModelKind::kMajority;
  throw Error(ErrorKind::kInvalidArgument, "unknown model kind '" + std::string(name) + "'");
}

const std::vector<ModelKind>& all_kinds() {
  static const std::vector<ModelKind> kinds = [] {
    std::vector<ModelKind> out;
    for (const auto& e : kKinds) out.push_back(e.kind);
    return out;
  }();
  return kinds;
}

Params default_params(ModelKind kind) {
  switch (kind) {
    case ModelKind::kMajority:
      return Params::object();
    case ModelKind::kLogistic:
      return {{"l2", 1e-3}, {"lr", 0.5}, {"max_iters", 2000}, {"tol", 1e-6}};
    case ModelKind::kLda:
      return {{"shrinkage", 0.0}};
    case ModelKind::kSvm:
      return {{"C", 1.0}, {"max_epochs", 20}, {"kernel", "linear"}, {"gamma", 0.1}, {"n_components", 200}};
    case ModelKind::kRandomForest:
      return {{"n_trees", 100}, {"max_depth", 0}, {"min_samples_leaf", 1}, {"max_features", 4},
              {"bootstrap", true}};
    case ModelKind::kLightGbm:
      return {{"n_rounds", 100}, {"learning_rate", 0.1}, {"lambda", 0.0}, {"gamma", 0.0},
              {"min_child_weight", 1e-3}, {"max_depth", 0}, {"num_leaves", 31}};
    case ModelKind::kXgboost:
      return {{"n_rounds", 100}, {"learning_rate", 0.3}, {"lambda", 1.0}, {"gamma", 0.0},
              {"min_child_weight", 1.0}, {"max_depth", 6}};
    case ModelKind::kMlp:
      return {{"hidden_sizes", {64}}, {"l2", 1e-4}, {"lr", 1e-3}, {"batch_size", 64},
              {"epochs", 50}, {"early_stopping", false}, {"validation_fraction", 0.1},
              {"patience", 5}};
  }
  return Params::object();
}

Params resolve_params(ModelKind kind, const Params& overrides) {
  Params p = default_params(kind);
  if (!overrides.is_null()) {
    if (!overrides.is_object()) bad_param(kind, "hyperparameters must be a JSON object");
    for (const auto& [name, value] : overrides.items()) {
      if (!p.contains(name)) bad_param(kind, "unknown hyperparameter '" + name + "'");
      p[name] = value;
    }
  }
  validate(kind, p);
  return p;
}

Labels Classifier::predict(const Matrix& x) const { return argmax_rows(predict_proba(x)); }

void Classifier::check_input(const Matrix& x) const {
  if (x.cols() != num_features_) {
    throw Error(ErrorKind::kLengthMismatch, "expected " + std::to_string(num_features_) +
                                                " features, got " + std::to_string(x.cols()));
  }
}

nlohmann::json Classifier::to_json() const {
  return {{"format_version", kModelFormatVersion},
          {"kind", kind_name(kind())},
          {"num_classes", num_classes_},
          {"num_features", num_features_},
          {"params", params_},
          {"state", state_json()}};
}

std::unique_ptr<Classifier> fit(ModelKind kind, const Matrix& x, const Labels& y, int num_classes,
                                const Params& params, std::uint64_t seed) {
  const Params p = resolve_params(kind, params);
  check_training_data(x, y, num_classes);
  switch (kind) {
    case ModelKind::kMajority: return MajorityClassifier::fit(x, y, num_classes);
    case ModelKind::kLogistic: return SoftmaxRegression::fit(x, y, num_classes, p);
    case ModelKind::kLda: return LdaClassifier::fit(x, y, num_classes, p);
    case ModelKind::kSvm: return LinearSvm::fit(x, y, num_classes, p, seed);
    case ModelKind::kRandomForest: return RandomForest::fit(x, y, num_classes, p, seed);
    case ModelKind::kLightGbm:
    case ModelKind::kXgboost: return BoostedEnsemble::fit(kind, x, y, num_classes, p, seed);
    case ModelKind::kMlp: return Mlp::fit(x, y, num_classes, p, seed);
  }
  throw Error(ErrorKind::kInvalidArgument, "unhandled model kind");
}

std::unique_ptr<Classifier> from_json(const nlohmann::json& doc) {
  if (doc.value("format_version", 0) != kModelFormatVersion) {
    throw Error(ErrorKind::kInvalidArgument, "unsupported model format version");
  }
  const ModelKind kind = parse_kind(doc.at("kind").get<std::string>());
  const int c = doc.at("num_classes").get<int>();
  const int d = doc.at("num_features").get<int>();
  const Params p = doc.at("params");
  const auto& state = doc.at("state");
  switch (kind) {
    case ModelKind::kMajority: return MajorityClassifier::from_state(c, d, state);
    case ModelKind::kLogistic: return SoftmaxRegression::from_state(c, d, p, state);
    case ModelKind::kLda: return LdaClassifier::from_state(c, d, p, state);
    case ModelKind::kSvm: return LinearSvm::from_state(c, d, p, state);
    case ModelKind::kRandomForest: return RandomForest::from_state(c, d, p, state);
    case ModelKind::kLightGbm:
    case ModelKind::kXgboost: return BoostedEnsemble::from_state(kind, c, d, p, state);
    case ModelKind::kMlp: return Mlp::from_state(c, d, p, state);
  }
  throw Error(ErrorKind::kInvalidArgument, "unhandled model kind");
}

Labels argmax_rows(const Matrix& m) {
  Labels out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < m.cols(); ++c) {
      if (m(i, c) > m(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      out(i, c) = std::exp(logits(i, c) - m);
      sum += out(i, c);
    }
    out.row(i) /= sum;
  }
  return out;
}

void check_training_data(const Matrix& x, const Labels& y, int num_classes) {
  if (y.empty()) throw Error(ErrorKind::kEmptyLabels, "no training labels");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorKind::kLengthMismatch, "feature rows and labels differ in length");
  }
  if (num_classes < 1) throw Error(ErrorKind::kInvalidArgument, "num_classes must be positive");
  for (int label : y) {
    if (label < 0 || label >= num_classes) {
      throw Error(ErrorKind::kLabelOutOfRange, "label " + std::to_string(label) + " outside [0, " +
                                                   std::to_string(num_classes) + ")");
    }
  }
  if (!x.allFinite()) throw Error(ErrorKind::kInvalidArgument, "features contain NaN or infinity");
}

nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw Error(ErrorKind::kInvalidArgument, "matrix data size mismatch");
  }
  Matrix m(rows, cols);
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

}  // namespace occml::models
