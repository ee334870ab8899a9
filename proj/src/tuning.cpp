#include "occml/tuning.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "occml/metrics.hpp"
#include "occml/parallel.hpp"
#include "occml/rng.hpp"

namespace occml::tuning {

FoldPlan stratified_kfold(const Labels& labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorKind::kInvalidArgument, "k must be at least 2");
  if (labels.empty()) throw Error(ErrorKind::kEmptyInput, "no labels to fold");
  const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<Indices> by_class(static_cast<std::size_t>(num_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0) throw Error(ErrorKind::kLabelOutOfRange, "negative label");
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<Indices> fold_members(static_cast<std::size_t>(k));
  std::size_t next_fold = 0;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < static_cast<std::size_t>(k)) {
      throw Error(ErrorKind::kClassTooSmall, "class " + std::to_string(c) + " has " +
                                                 std::to_string(members.size()) + " rows, fewer than k=" +
                                                 std::to_string(k));
    }
    Rng rng(derive_seed(derive_seed(seed, "kfold"), c));
    rng.shuffle(std::span(members));
    // Continue dealing where the previous class stopped to balance fold sizes.
    for (std::size_t idx : members) {
      fold_members[next_fold].push_back(idx);
      next_fold = (next_fold + 1) % static_cast<std::size_t>(k);
    }
  }
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  for (int f = 0; f < k; ++f) {
    Fold fold;
    fold.validation = fold_members[static_cast<std::size_t>(f)];
    for (int g = 0; g < k; ++g) {
      if (g == f) continue;
      const auto& other = fold_members[static_cast<std::size_t>(g)];
      fold.train.insert(fold.train.end(), other.begin(), other.end());
    }
    std::sort(fold.train.begin(), fold.train.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

std::vector<Params> HyperGrid::candidates() const {
  std::vector<Params> out{Params::object()};
  for (const auto& [name, options] : values) {
    std::vector<Params> expanded;
    for (const auto& partial : out) {
      for (const auto& v : options) {
        Params p = partial;
        p[name] = v;
        expanded.push_back(std::move(p));
      }
    }
    out = std::move(expanded);
  }
  return out;
}

std::size_t HyperGrid::size() const {
  std::size_t n = 1;
  for (const auto& [name, options] : values) n *= options.size();
  return n;
}

GridProfile parse_profile(const std::string& name) {
  if (name == "fast") return GridProfile::kFast;
  if (name == "full") return GridProfile::kFull;
  throw Error(ErrorKind::kInvalidArgument, "unknown grid profile '" + name + "'");
}

std::string_view profile_name(GridProfile profile) {
  return profile == GridProfile::kFast ? "fast" : "full";
}

namespace {

using J = nlohmann::json;

HyperGrid make_grid(ModelKind kind, std::map<std::string, std::vector<J>> values) {
  HyperGrid g;
  g.kind = kind;
  for (auto& [name, options] : values) {
    std::sort(options.begin(), options.end());
    options.erase(std::unique(options.begin(), options.end()), options.end());
    if (options.empty()) throw Error(ErrorKind::kInvalidHyperparameter, "empty candidate list for " + name);
  }
  g.values = std::move(values);
  // Validates every name and value against the kind's schema.
  for (const auto& c : g.candidates()) models::resolve_params(kind, c);
  return g;
}

}  // namespace

// Full-profile candidate counts: lda 3, logistic 3, svm 4, mlp 8, rf 240,
// lightgbm 400, xgboost 1152. Fast profile: at most 8 per kind.
HyperGrid default_grid(ModelKind kind, GridProfile profile) {
  const bool full = profile == GridProfile::kFull;
  switch (kind) {
    case ModelKind::kMajority:
      return make_grid(kind, {});
    case ModelKind::kLogistic:
      if (full) return make_grid(kind, {{"l2", {1e-4, 1e-3, 1e-2}}});
      return make_grid(kind, {{"l2", {1e-4, 1e-2}}});
    case ModelKind::kLda:
      return make_grid(kind, {{"shrinkage", {0.0, 0.01, 0.1}}});
    case ModelKind::kSvm:
      if (full) return make_grid(kind, {{"C", {1.0, 10.0}}, {"kernel", {"linear", "rff"}}});
      return make_grid(kind, {{"C", {10.0}}, {"kernel", {"linear", "rff"}}});
    case ModelKind::kRandomForest:
      if (full) {
        return make_grid(kind, {{"n_trees", {50, 100, 200}},
                                {"max_depth", {0, 8, 12, 16}},
                                {"min_samples_leaf", {1, 2, 4, 8, 16}},
                                {"max_features", {2, 4, 8, 16}}});
      }
      return make_grid(kind, {{"n_trees", {60}}, {"max_depth", {0, 12}}, {"min_samples_leaf", {1, 4}}});
    case ModelKind::kLightGbm:
      if (full) {
        return make_grid(kind, {{"num_leaves", {8, 16, 31, 63, 127}},
                                {"learning_rate", {0.01, 0.05, 0.1, 0.2, 0.3}},
                                {"n_rounds", {50, 100, 200, 400}},
                                {"lambda", {0.0, 1.0, 5.0, 10.0}}});
      }
      return make_grid(kind, {{"num_leaves", {15, 31}}, {"learning_rate", {0.1}}, {"n_rounds", {60}}, {"lambda", {0.0, 1.0}}});
    case ModelKind::kXgboost:
      if (full) {
        return make_grid(kind, {{"max_depth", {3, 4, 5, 6}},
                                {"learning_rate", {0.01, 0.05, 0.1, 0.3}},
                                {"n_rounds", {50, 100, 200}},
                                {"lambda", {0.1, 1.0, 10.0}},
                                {"min_child_weight", {1, 3, 5, 7}},
                                {"gamma", {0.0, 1.0}}});
      }
      return make_grid(kind, {{"max_depth", {4, 6}}, {"learning_rate", {0.1, 0.3}}, {"n_rounds", {60}}});
    case ModelKind::kMlp:
      if (full) {
        return make_grid(kind, {{"hidden_sizes", {J::array({32}), J::array({64, 32})}},
                                {"l2", {1e-4, 1e-3}},
                                {"lr", {1e-3, 1e-2}}});
      }
      return make_grid(kind, {{"hidden_sizes", {J::array({32}), J::array({64})}}, {"lr", {1e-3, 3e-3}}, {"epochs", {40}}});
  }
  throw Error(ErrorKind::kInvalidArgument, "unhandled model kind");
}

HyperGrid grid_from_json(ModelKind kind, const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorKind::kInvalidHyperparameter, "grid must be a JSON object");
  std::map<std::string, std::vector<J>> values;
  for (const auto& [name, options] : j.items()) {
    if (!options.is_array()) throw Error(ErrorKind::kInvalidHyperparameter, "grid entry '" + name + "' must be a list");
    values[name] = options.get<std::vector<J>>();
  }
  return make_grid(kind, std::move(values));
}

nlohmann::json grid_to_json(const HyperGrid& grid) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, options] : grid.values) j[name] = options;
  return j;
}

double weighted_auc_score(const Matrix& proba, const Labels& labels) {
  const auto auc = metrics::auc_ovr(proba, labels);
  if (!auc.weighted) throw Error(ErrorKind::kZeroTotalWeight, "weighted AUC undefined on fold");
  return *auc.weighted;
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

TuningResult grid_search(const HyperGrid& grid, const Matrix& x, const Labels& y, int num_classes,
                         const FoldPlan& folds, std::uint64_t seed, const Scorer& scorer) {
  if (folds.folds.empty()) throw Error(ErrorKind::kInvalidArgument, "empty fold plan");
  const auto start = std::chrono::steady_clock::now();
  const auto candidates = grid.candidates();
  const std::size_t k = folds.folds.size();

  TuningResult result;
  result.kind = grid.kind;
  result.k = static_cast<int>(k);
  result.seed = seed;
  result.candidates.resize(candidates.size());
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    result.candidates[c].params = models::resolve_params(grid.kind, candidates[c]);
    result.candidates[c].fold_scores.assign(k, std::numeric_limits<double>::quiet_NaN());
    result.candidates[c].fit_seconds.assign(k, 0.0);
  }
  std::vector<std::string> errors(candidates.size() * k);

  parallel_for(candidates.size() * k, [&](std::size_t job) {
    const std::size_t c = job / k;
    const std::size_t f = job % k;
    const auto& fold = folds.folds[f];
    try {
      const auto scaler = data::fit_scaler(x, fold.train);
      Matrix x_train(static_cast<Eigen::Index>(fold.train.size()), x.cols());
      Labels y_train(fold.train.size());
      for (std::size_t i = 0; i < fold.train.size(); ++i) {
        x_train.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(fold.train[i]));
        y_train[i] = y[fold.train[i]];
      }
      Matrix x_val(static_cast<Eigen::Index>(fold.validation.size()), x.cols());
      Labels y_val(fold.validation.size());
      for (std::size_t i = 0; i < fold.validation.size(); ++i) {
        x_val.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(fold.validation[i]));
        y_val[i] = y[fold.validation[i]];
      }
      const auto fit_start = std::chrono::steady_clock::now();
      const auto model = models::fit(grid.kind, scaler.transform(x_train), y_train, num_classes,
                                     result.candidates[c].params, seed);
      result.candidates[c].fit_seconds[f] = seconds_since(fit_start);
      const double score = scorer(model->predict_proba(scaler.transform(x_val)), y_val);
      if (!std::isfinite(score)) throw Error(ErrorKind::kNonFiniteScore, "fold score is not finite");
      result.candidates[c].fold_scores[f] = score;
    } catch (const std::exception& e) {
      errors[job] = "fold " + std::to_string(f) + ": " + e.what();
    }
  });

  double fit_total = 0.0;
  bool any_ok = false;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    auto& cand = result.candidates[c];
    for (std::size_t f = 0; f < k; ++f) {
      fit_total += cand.fit_seconds[f];
      if (!errors[c * k + f].empty() && !cand.disqualified) {
        cand.disqualified = true;
        cand.reason = errors[c * k + f];
      }
    }
    if (cand.disqualified) {
      cand.mean_score = -std::numeric_limits<double>::infinity();
      cand.std_score = 0.0;
      continue;
    }
    const double mean = std::accumulate(cand.fold_scores.begin(), cand.fold_scores.end(), 0.0) / static_cast<double>(k);
    double ss = 0.0;
    for (double s : cand.fold_scores) ss += (s - mean) * (s - mean);
    cand.mean_score = mean;
    cand.std_score = std::sqrt(ss / static_cast<double>(k));
    if (!any_ok || mean > result.candidates[result.best_index].mean_score) result.best_index = c;
    any_ok = true;
  }
  result.total_fits = candidates.size() * k;
  result.average_tuning_time = fit_total / static_cast<double>(result.total_fits);
  if (!any_ok) {
    throw Error(ErrorKind::kAllCandidatesDisqualified,
                std::string(models::kind_name(grid.kind)) + ": " + result.candidates.front().reason);
  }

  Indices all(static_cast<std::size_t>(x.rows()));
  std::iota(all.begin(), all.end(), 0);
  result.scaler = data::fit_scaler(x, all);
  const auto refit_start = std::chrono::steady_clock::now();
  result.model = models::fit(grid.kind, result.scaler.transform(x), y, num_classes, result.best().params, seed);
  result.best_model_fit_time = seconds_since(refit_start);
  result.tuning_time = seconds_since(start);
  return result;
}

namespace {

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json to_json(const TuningResult& r) {
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : r.candidates) {
    nlohmann::json scores = nlohmann::json::array();
    for (double s : c.fold_scores) scores.push_back(finite_or_null(s));
    candidates.push_back({{"params", c.params},
                          {"fold_scores", scores},
                          {"mean_score", finite_or_null(c.mean_score)},
                          {"std_score", c.std_score},
                          {"disqualified", c.disqualified},
                          {"reason", c.reason}});
  }
  return {{"kind", models::kind_name(r.kind)},
          {"k", r.k},
          {"seed", r.seed},
          {"total_fits", r.total_fits},
          {"candidates", candidates},
          {"best_index", r.best_index},
          {"best_params", r.best().params},
          {"best_mean_score", r.best().mean_score},
          {"scaler", r.scaler},
          {"model", r.model ? r.model->to_json() : nlohmann::json(nullptr)}};
}

nlohmann::json timings_json(const TuningResult& r) {
  nlohmann::json per_candidate = nlohmann::json::array();
  for (const auto& c : r.candidates) per_candidate.push_back(c.fit_seconds);
  return {{"tuning_time", r.tuning_time},
          {"average_tuning_time", r.average_tuning_time},
          {"best_model_fit_time", r.best_model_fit_time},
          {"fit_seconds", per_candidate}};
}

std::string timing_table_csv(const std::vector<TimingRow>& rows) {
  std::ostringstream os;
  os << "model,total_fits,tuning_time,average_tuning_time,best_model_fit_time\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.total_fits << ',' << format_fixed(r.tuning_time, 2) << ','
       << format_fixed(r.average_tuning_time, 2) << ',' << format_fixed(r.best_model_fit_time, 2) << '\n';
  }
  return os.str();
}

}  // namespace occml::tuning
