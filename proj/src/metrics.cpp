#include "occml/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace occml::metrics {

long ConfusionMatrix::total() const {
  long sum = 0;
  for (const auto& row : counts) sum = std::accumulate(row.begin(), row.end(), sum);
  return sum;
}

long ConfusionMatrix::true_positives(int c) const { return counts[c][c]; }

long ConfusionMatrix::false_positives(int c) const {
  long sum = 0;
  for (int t = 0; t < num_classes(); ++t) {
    if (t != c) sum += counts[t][c];
  }
  return sum;
}

long ConfusionMatrix::false_negatives(int c) const {
  long sum = 0;
  for (int p = 0; p < num_classes(); ++p) {
    if (p != c) sum += counts[c][p];
  }
  return sum;
}

long ConfusionMatrix::true_negatives(int c) const {
  return total() - true_positives(c) - false_positives(c) - false_negatives(c);
}

ConfusionMatrix confusion_matrix(const Labels& true_labels, const Labels& predicted_labels,
                                 int num_classes) {
  if (true_labels.size() != predicted_labels.size()) {
    throw Error(ErrorKind::kLengthMismatch, "true and predicted label counts differ");
  }
  if (true_labels.empty()) throw Error(ErrorKind::kEmptyInput, "no labels to score");
  if (num_classes < 1) throw Error(ErrorKind::kInvalidArgument, "num_classes must be positive");
  ConfusionMatrix cm;
  cm.counts.assign(static_cast<std::size_t>(num_classes),
                   std::vector<long>(static_cast<std::size_t>(num_classes), 0));
  for (std::size_t i = 0; i < true_labels.size(); ++i) {
    const int t = true_labels[i];
    const int p = predicted_labels[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw Error(ErrorKind::kLabelOutOfRange, "label outside [0, " + std::to_string(num_classes) + ")");
    }
    ++cm.counts[t][p];
  }
  return cm;
}

double weighted_aggregate(const std::vector<MaybeValue>& values, const std::vector<double>& weights) {
  if (values.size() != weights.size()) {
    throw Error(ErrorKind::kLengthMismatch, "values and weights differ in length");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (weights[j] < 0.0) throw Error(ErrorKind::kInvalidArgument, "negative weight");
    if (!values[j]) continue;
    num += weights[j] * *values[j];
    den += weights[j];
  }
  if (!(den > 0.0)) throw Error(ErrorKind::kZeroTotalWeight, "no weight on defined entries");
  return num / den;
}

double weighted_aggregate(const std::vector<double>& values, const std::vector<double>& weights) {
  return weighted_aggregate(std::vector<MaybeValue>(values.begin(), values.end()), weights);
}

namespace {

MaybeValue ratio(long num, long den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<double> supports(const ConfusionMatrix& cm) {
  std::vector<double> w;
  for (int c = 0; c < cm.num_classes(); ++c) w.push_back(static_cast<double>(cm.support(c)));
  return w;
}

}  // namespace

BalancedAccuracy balanced_accuracy(const ConfusionMatrix& cm) {
  BalancedAccuracy out;
  double recall_sum = 0.0;
  int present = 0;
  for (int c = 0; c < cm.num_classes(); ++c) {
    const MaybeValue recall = ratio(cm.true_positives(c), cm.support(c));
    const MaybeValue specificity =
        ratio(cm.true_negatives(c), cm.true_negatives(c) + cm.false_positives(c));
    if (recall && specificity) {
      out.per_class.emplace_back((*specificity + *recall) / 2.0);
    } else {
      out.per_class.emplace_back(std::nullopt);
    }
    if (recall) {
      recall_sum += *recall;
      ++present;
    }
  }
  if (present == 0) throw Error(ErrorKind::kAllClassesAbsent, "no class occurs in the true labels");
  out.macro = recall_sum / present;
  return out;
}

F1Scores f1_scores(const ConfusionMatrix& cm) {
  F1Scores out;
  for (int c = 0; c < cm.num_classes(); ++c) {
    const long tp = cm.true_positives(c);
    const long denom = 2 * tp + cm.false_positives(c) + cm.false_negatives(c);
    if (denom == 0) {
      out.per_class.emplace_back(std::nullopt);
    } else {
      // 2PR/(P+R) reduces to 2TP/(2TP+FP+FN); zero when TP is zero.
      out.per_class.emplace_back(2.0 * static_cast<double>(tp) / static_cast<double>(denom));
    }
  }
  out.weighted = weighted_aggregate(out.per_class, supports(cm));
  return out;
}

MaybeValue binary_auc(const std::vector<double>& scores, const std::vector<bool>& is_positive) {
  if (scores.size() != is_positive.size()) {
    throw Error(ErrorKind::kLengthMismatch, "scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  double positives = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1..j+1 share their mean.
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (is_positive[order[k]]) {
        rank_sum += mid_rank;
        positives += 1.0;
      }
    }
    i = j + 1;
  }
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;
  return (rank_sum - positives * (positives + 1.0) / 2.0) / (positives * negatives);
}

AucScores auc_ovr(const Matrix& scores, const Labels& true_labels) {
  if (static_cast<std::size_t>(scores.rows()) != true_labels.size()) {
    throw Error(ErrorKind::kLengthMismatch, "score rows and labels differ in length");
  }
  if (true_labels.empty()) throw Error(ErrorKind::kEmptyInput, "no samples to score");
  if (!scores.allFinite()) throw Error(ErrorKind::kNonFiniteScore, "scores contain NaN or infinity");
  const auto num_classes = static_cast<int>(scores.cols());
  AucScores out;
  std::vector<double> weights(static_cast<std::size_t>(num_classes), 0.0);
  for (int label : true_labels) {
    if (label < 0 || label >= num_classes) throw Error(ErrorKind::kLabelOutOfRange, "label outside score columns");
    weights[static_cast<std::size_t>(label)] += 1.0;
  }
  std::vector<double> column(true_labels.size());
  std::vector<bool> positive(true_labels.size());
  for (int c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
      column[i] = scores(static_cast<Eigen::Index>(i), c);
      positive[i] = true_labels[i] == c;
    }
    auto auc = binary_auc(column, positive);
    if (!auc) out.warnings.push_back("ClassAbsent: AUC undefined for class " + std::to_string(c));
    out.per_class.push_back(auc);
  }
  try {
    out.weighted = weighted_aggregate(out.per_class, weights);
  } catch (const Error&) {
    out.weighted = std::nullopt;
  }
  return out;
}

EvaluationReport evaluate(const Matrix& scores, const Labels& true_labels, int num_classes) {
  if (true_labels.empty()) throw Error(ErrorKind::kEmptyInput, "empty evaluation set");
  if (scores.cols() != num_classes) throw Error(ErrorKind::kLengthMismatch, "score columns != num_classes");
  Labels predicted(true_labels.size());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(i, c) > scores(i, best)) best = c;
    }
    predicted[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  EvaluationReport r;
  r.confusion = confusion_matrix(true_labels, predicted, num_classes);
  const auto ba = balanced_accuracy(r.confusion);
  const auto f1 = f1_scores(r.confusion);
  const auto auc = auc_ovr(scores, true_labels);
  r.warnings = auc.warnings;

  bool constant = true;
  for (Eigen::Index i = 1; i < scores.rows() && constant; ++i) {
    constant = scores.row(i) == scores.row(0);
  }
  r.weighted_f1 = f1.weighted;
  r.balanced_accuracy_macro = ba.macro;
  r.weighted_auc = constant ? std::nullopt : auc.weighted;
  if (constant) r.warnings.push_back("ConstantPredictor: weighted AUC reported as N/A");

  std::vector<double> weights;
  for (int c = 0; c < num_classes; ++c) {
    ClassScores cs;
    cs.label = c;
    cs.support = r.confusion.support(c);
    const long tp = r.confusion.true_positives(c);
    cs.precision = ratio(tp, tp + r.confusion.false_positives(c));
    cs.recall = ratio(tp, cs.support);
    cs.specificity = ratio(r.confusion.true_negatives(c),
                           r.confusion.true_negatives(c) + r.confusion.false_positives(c));
    cs.f1 = f1.per_class[c];
    cs.balanced_accuracy = ba.per_class[c];
    cs.auc = auc.per_class[c];
    if (!cs.balanced_accuracy || !cs.f1) {
      r.warnings.push_back("UndefinedMetric: class " + std::to_string(c) + " excluded from weighting");
    }
    weights.push_back(static_cast<double>(cs.support));
    r.per_class.push_back(cs);
  }
  try {
    r.balanced_accuracy_weighted = weighted_aggregate(ba.per_class, weights);
  } catch (const Error&) {
    r.balanced_accuracy_weighted = std::nullopt;
  }
  return r;
}

namespace {

nlohmann::json maybe(const MaybeValue& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& c : r.per_class) {
    per_class.push_back({{"label", c.label},
                         {"support", c.support},
                         {"precision", maybe(c.precision)},
                         {"recall", maybe(c.recall)},
                         {"specificity", maybe(c.specificity)},
                         {"f1", maybe(c.f1)},
                         {"balanced_accuracy", maybe(c.balanced_accuracy)},
                         {"auc", maybe(c.auc)}});
  }
  return {{"confusion", r.confusion.counts},
          {"per_class", per_class},
          {"weighted_f1", maybe(r.weighted_f1)},
          {"weighted_auc", maybe(r.weighted_auc)},
          {"balanced_accuracy_macro", maybe(r.balanced_accuracy_macro)},
          {"balanced_accuracy_weighted", maybe(r.balanced_accuracy_weighted)},
          {"warnings", r.warnings}};
}

std::string results_table_csv(std::vector<TableRow> rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    if (a.weighted_auc.has_value() != b.weighted_auc.has_value()) return !a.weighted_auc.has_value();
    if (!a.weighted_auc) return false;
    return *a.weighted_auc < *b.weighted_auc;
  });
  auto column_max = [&](auto member) {
    MaybeValue best;
    for (const auto& r : rows) {
      const MaybeValue& v = r.*member;
      if (v && (!best || *v > *best)) best = v;
    }
    return best;
  };
  const auto best_f1 = column_max(&TableRow::weighted_f1);
  const auto best_auc = column_max(&TableRow::weighted_auc);
  const auto best_ba = column_max(&TableRow::balanced_accuracy);
  auto cell = [](const MaybeValue& v) { return v ? format_fixed(*v * 1000.0, 2) : std::string("N/A"); };
  // Compare at printed precision so visually equal maxima are both flagged.
  auto is_best = [&](const MaybeValue& v, const MaybeValue& best) {
    return v && best && cell(v) == cell(best);
  };

  std::ostringstream os;
  os << "model,weighted_f1,weighted_auc,balanced_accuracy,best\n";
  for (const auto& r : rows) {
    std::vector<std::string> flags;
    if (is_best(r.weighted_f1, best_f1)) flags.emplace_back("weighted_f1");
    if (is_best(r.weighted_auc, best_auc)) flags.emplace_back("weighted_auc");
    if (is_best(r.balanced_accuracy, best_ba)) flags.emplace_back("balanced_accuracy");
    std::string joined;
    for (std::size_t i = 0; i < flags.size(); ++i) joined += (i ? ";" : "") + flags[i];
    os << r.model << ',' << cell(r.weighted_f1) << ',' << cell(r.weighted_auc) << ','
       << cell(r.balanced_accuracy) << ',' << joined << '\n';
  }
  return os.str();
}

}  // namespace occml::metrics
