#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"
#include "occml/data.hpp"
#include "occml/models/classifier.hpp"

namespace occml::tuning {

using models::ModelKind;
using models::Params;

struct Fold {
  Indices train;
  Indices validation;
};

// Positions refer to the label vector passed to stratified_kfold.
struct FoldPlan {
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<Fold> folds;
};

// Each class is shuffled with its own derived generator and dealt round-robin
// over the folds, so every fold holds floor or ceil(count_c / k) rows of class c.
FoldPlan stratified_kfold(const Labels& labels, int k, std::uint64_t seed);

struct HyperGrid {
  ModelKind kind = ModelKind::kMajority;
  // Parameter name -> candidate values; names iterate in sorted order and each
  // value list is kept sorted, which fixes the candidate order.
  std::map<std::string, std::vector<nlohmann::json>> values;

  std::vector<Params> candidates() const;
  std::size_t size() const;
};

enum class GridProfile { kFast, kFull };

GridProfile parse_profile(const std::string& name);
std::string_view profile_name(GridProfile profile);

HyperGrid default_grid(ModelKind kind, GridProfile profile);
HyperGrid grid_from_json(ModelKind kind, const nlohmann::json& j);
nlohmann::json grid_to_json(const HyperGrid& grid);

// Higher is better. Receives validation probabilities and labels.
using Scorer = std::function<double(const Matrix& proba, const Labels& labels)>;

// Weighted one-vs-rest AUC.
double weighted_auc_score(const Matrix& proba, const Labels& labels);

struct CandidateResult {
  Params params;
  std::vector<double> fold_scores;
  double mean_score = 0.0;
  double std_score = 0.0;
  bool disqualified = false;
  std::string reason;
  std::vector<double> fit_seconds;
};

struct TuningResult {
  ModelKind kind = ModelKind::kMajority;
  int k = 0;
  std::uint64_t seed = 0;
  std::vector<CandidateResult> candidates;
  std::size_t best_index = 0;
  std::size_t total_fits = 0;
  double tuning_time = 0.0;
  // Mean wall time of one cross-validation fit.
  double average_tuning_time = 0.0;
  double best_model_fit_time = 0.0;
  data::Scaler scaler;
  std::shared_ptr<const models::Classifier> model;

  const CandidateResult& best() const { return candidates.at(best_index); }
};

// Evaluates every candidate on every fold (scaler refit on each fold's
// training rows), picks the highest mean score (first in candidate order on
// ties), then refits scaler and model on all of `x`. Candidates that fail on
// any fold are disqualified with score -inf; if all fail, throws
// AllCandidatesDisqualified.
TuningResult grid_search(const HyperGrid& grid, const Matrix& x, const Labels& y, int num_classes,
                         const FoldPlan& folds, std::uint64_t seed,
                         const Scorer& scorer = weighted_auc_score);

// Body excludes all timings; they go to timings_json.
nlohmann::json to_json(const TuningResult& result);
nlohmann::json timings_json(const TuningResult& result);

struct TimingRow {
  std::string model;
  std::size_t total_fits = 0;
  double tuning_time = 0.0;
  double average_tuning_time = 0.0;
  double best_model_fit_time = 0.0;
};

std::string timing_table_csv(const std::vector<TimingRow>& rows);

}  // namespace occml::tuning
