#pragma once

#include <cstdint>
#include <vector>

#include "occml/models/tree.hpp"

namespace occml::models {

enum class Growth { kLevelWise, kLeafWise };

struct GbtParams {
  int n_rounds = 100;
  double learning_rate = 0.1;
  double lambda = 1.0;          // L2 on leaf weights
  double gamma = 0.0;           // gain penalty per split
  double min_child_weight = 1.0;  // minimum Hessian sum per child
  Growth growth = Growth::kLevelWise;
  int max_depth = 6;   // level-wise depth; leaf-wise cap, 0 = none
  int num_leaves = 31;  // leaf-wise only
};

GbtParams gbt_params_from_json(const Params& params, ModelKind kind);

// Regression tree on gradient statistics. Leaf weight -G/(H + lambda); split
// gain (GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l))/2 - gamma, kept when positive.
Tree grow_newton_tree(const Matrix& x, const SortedRows& root, std::span<const double> grad,
                      std::span<const double> hess, const GbtParams& params);

// Multiclass softmax boosting: one tree per class per round, base score the
// log class priors, prediction softmax(base + lr * sum of leaf weights).
class BoostedEnsemble final : public Classifier {
 public:
  BoostedEnsemble(ModelKind kind, int num_classes, int num_features, Params params,
                  std::vector<double> base_score, double learning_rate,
                  std::vector<std::vector<Tree>> rounds);

  static std::unique_ptr<BoostedEnsemble> fit(ModelKind kind, const Matrix& x, const Labels& y,
                                              int num_classes, const Params& params,
                                              std::uint64_t seed);
  static std::unique_ptr<BoostedEnsemble> from_state(ModelKind kind, int num_classes,
                                                     int num_features, Params params,
                                                     const nlohmann::json& state);

  ModelKind kind() const override { return kind_; }
  Matrix predict_proba(const Matrix& x) const override;
  Matrix raw_scores(const Matrix& x) const;

  const std::vector<double>& base_score() const { return base_score_; }
  const std::vector<std::vector<Tree>>& rounds() const { return rounds_; }
  // Mean training cross-entropy after each round (index 0: base score only).
  const std::vector<double>& training_loss() const { return training_loss_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  ModelKind kind_;
  std::vector<double> base_score_;
  double learning_rate_;
  std::vector<std::vector<Tree>> rounds_;  // rounds_[r][c]
  std::vector<double> training_loss_;
};

}  // namespace occml::models
