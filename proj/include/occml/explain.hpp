#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "occml/common.hpp"
#include "occml/models/classifier.hpp"

namespace occml::explain {

// Coalitions are bitmasks over features: bit i set means feature i is present.
using Coalition = std::uint32_t;

constexpr int kMaxExactFeatures = 20;
constexpr int kMaxRetrainFeatures = 4;

class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual int num_features() const = 0;
  virtual int num_outputs() const = 0;
  // One row per coalition, one column per output.
  virtual Matrix values(std::span<const Coalition> coalitions) const = 0;
};

// v(S) = mean over background rows b of f(x_S, b_rest).
class InterventionalValue final : public ValueFunction {
 public:
  InterventionalValue(const models::Classifier& model, Vector x, const Matrix& background);

  int num_features() const override { return static_cast<int>(x_.size()); }
  int num_outputs() const override { return model_.num_classes(); }
  Matrix values(std::span<const Coalition> coalitions) const override;

 private:
  const models::Classifier& model_;
  Vector x_;
  const Matrix& background_;
};

// Returns the output of a model retrained on only the listed features,
// evaluated at the explained point.
using Retrainer = std::function<Vector(const std::vector<int>& features)>;

// v(S) comes from a model retrained on S; results are cached per coalition.
class RetrainValue final : public ValueFunction {
 public:
  RetrainValue(int num_features, int num_outputs, Retrainer retrain);

  int num_features() const override { return num_features_; }
  int num_outputs() const override { return num_outputs_; }
  Matrix values(std::span<const Coalition> coalitions) const override;

 private:
  int num_features_;
  int num_outputs_;
  Retrainer retrain_;
};

struct Attribution {
  Matrix phi;        // features x outputs
  Matrix std_error;  // same shape; zero for exact computation
  Vector base;       // v(empty)
  Vector output;     // v(all)
};

Attribution shap_exact(const ValueFunction& v);
// Antithetic permutation sampling: each of `n_pairs` draws uses a random
// permutation and its reverse. Contributions telescope, so phi sums to
// output - base exactly for every draw.
Attribution shap_sampled(const ValueFunction& v, int n_pairs, std::uint64_t seed);

enum class Method { kExact, kSampled };

struct ExplainOptions {
  Method method = Method::kSampled;
  int n_pairs = 32;
  std::uint64_t seed = 0;
};

struct Explanation {
  std::vector<std::string> feature_names;
  std::vector<Attribution> samples;
  Method method = Method::kSampled;
};

Explanation explain_rows(const models::Classifier& model, const Matrix& rows, const Matrix& background,
                         const std::vector<std::string>& feature_names, const ExplainOptions& options);

// `n` rows drawn without replacement (all rows if fewer), returned in row order.
Matrix sample_background(const Matrix& train, std::size_t n, std::uint64_t seed);

struct SummaryEntry {
  int feature = 0;
  std::string name;
  double mean_abs = 0.0;
};

// Mean |phi| over samples and outputs, sorted descending; ties keep feature order.
std::vector<SummaryEntry> shap_summary(const Explanation& explanation);

std::string summary_csv(const std::vector<SummaryEntry>& summary);
nlohmann::json to_json(const Explanation& explanation);
nlohmann::json to_json(const std::vector<SummaryEntry>& summary);

}  // namespace occml::explain
