#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"

namespace occml::metrics {

// counts[t][p]: rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::vector<std::vector<long>> counts;

  int num_classes() const { return static_cast<int>(counts.size()); }
  long total() const;
  long true_positives(int c) const;
  long false_positives(int c) const;
  long false_negatives(int c) const;
  long true_negatives(int c) const;
  long support(int c) const { return true_positives(c) + false_negatives(c); }
};

ConfusionMatrix confusion_matrix(const Labels& true_labels, const Labels& predicted_labels,
                                 int num_classes);

// A per-class metric that is undefined when its denominator vanishes or the
// class does not occur.
using MaybeValue = std::optional<double>;

struct ClassScores {
  int label = 0;
  long support = 0;
  MaybeValue precision;
  MaybeValue recall;
  MaybeValue specificity;
  MaybeValue f1;
  MaybeValue balanced_accuracy;
  MaybeValue auc;
};

// Sum of w_j * v_j over the defined entries divided by the sum of their
// weights. Throws ZeroTotalWeight when no defined entry carries weight.
double weighted_aggregate(const std::vector<MaybeValue>& values, const std::vector<double>& weights);
double weighted_aggregate(const std::vector<double>& values, const std::vector<double>& weights);

struct BalancedAccuracy {
  // One-vs-rest (specificity + recall) / 2 per class.
  std::vector<MaybeValue> per_class;
  // Unweighted mean of per-class recall over classes that occur. A constant
  // predictor scores exactly 1/C here.
  double macro = 0.0;
};

BalancedAccuracy balanced_accuracy(const ConfusionMatrix& confusion);

struct F1Scores {
  std::vector<MaybeValue> per_class;
  double weighted = 0.0;
};

// Zero-denominator F1 (no true positives) is 0; classes absent from both the
// truth and the predictions are undefined.
F1Scores f1_scores(const ConfusionMatrix& confusion);

// Mann-Whitney AUC from a single score column, mid-ranks for ties.
// Returns nullopt when either side is empty.
MaybeValue binary_auc(const std::vector<double>& scores, const std::vector<bool>& is_positive);

struct AucScores {
  std::vector<MaybeValue> per_class;
  MaybeValue weighted;
  std::vector<std::string> warnings;
};

// scores: n x C class probabilities (or any per-class ranking score).
AucScores auc_ovr(const Matrix& scores, const Labels& true_labels);

struct Timings {
  double fit_seconds = 0.0;
  double predict_seconds = 0.0;
};

struct EvaluationReport {
  ConfusionMatrix confusion;
  std::vector<ClassScores> per_class;
  MaybeValue weighted_f1;
  MaybeValue weighted_auc;
  MaybeValue balanced_accuracy_macro;
  // Eq.-(4) weighting of the per-class one-vs-rest balanced accuracies.
  MaybeValue balanced_accuracy_weighted;
  std::vector<std::string> warnings;
  Timings timings;
};

// Full report from scores. When every row of `scores` is identical the model is
// a constant predictor and weighted AUC is reported as undefined.
EvaluationReport evaluate(const Matrix& scores, const Labels& true_labels, int num_classes);

nlohmann::json to_json(const EvaluationReport& report);

struct TableRow {
  std::string model;
  MaybeValue weighted_f1;
  MaybeValue weighted_auc;
  MaybeValue balanced_accuracy;
};

// Results table: values x 1000 with two decimals, sorted by weighted AUC
// ascending (undefined first), and a `best` column naming the metrics in which
// the row attains the column maximum.
std::string results_table_csv(std::vector<TableRow> rows);

}  // namespace occml::metrics
