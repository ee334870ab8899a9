#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"

namespace occml::models {

using Params = nlohmann::json;

enum class ModelKind {
  kMajority,
  kLogistic,
  kLda,
  kSvm,
  kRandomForest,
  kLightGbm,  // boosted trees, leaf-wise growth
  kXgboost,   // boosted trees, level-wise growth
  kMlp,
};

std::string_view kind_name(ModelKind kind);
ModelKind parse_kind(std::string_view name);
const std::vector<ModelKind>& all_kinds();

inline constexpr int kModelFormatVersion = 1;

class Classifier {
 public:
  Classifier(int num_classes, int num_features, Params params)
      : num_classes_(num_classes), num_features_(num_features), params_(std::move(params)) {}
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;

  // n x C, rows sum to one.
  virtual Matrix predict_proba(const Matrix& x) const = 0;

  // Row argmax of predict_proba; ties go to the lowest class index.
  Labels predict(const Matrix& x) const;

  int num_classes() const { return num_classes_; }
  int num_features() const { return num_features_; }
  const Params& params() const { return params_; }

  nlohmann::json to_json() const;

 protected:
  virtual nlohmann::json state_json() const = 0;
  void check_input(const Matrix& x) const;

 private:
  int num_classes_;
  int num_features_;
  Params params_;
};

// Defaults for every hyperparameter a kind accepts.
Params default_params(ModelKind kind);

// Defaults overlaid with `overrides`. Unknown names and ill-typed or
// out-of-range values raise InvalidHyperparameter.
Params resolve_params(ModelKind kind, const Params& overrides);

std::unique_ptr<Classifier> fit(ModelKind kind, const Matrix& x, const Labels& y, int num_classes,
                                const Params& params, std::uint64_t seed);

std::unique_ptr<Classifier> from_json(const nlohmann::json& doc);

Labels argmax_rows(const Matrix& m);

// Row-wise softmax, max-shifted.
Matrix softmax_rows(const Matrix& logits);

// Shared validation for fit entry points.
void check_training_data(const Matrix& x, const Labels& y, int num_classes);

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace occml::models
