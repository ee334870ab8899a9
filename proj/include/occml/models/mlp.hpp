#pragma once

#include <cstdint>
#include <vector>

#include "occml/models/classifier.hpp"

namespace occml::models {

// Feedforward ReLU network with a softmax output, trained by mini-batch Adam
// on mean cross-entropy + (l2/2) * sum of squared weights (biases excluded).
class Mlp final : public Classifier {
 public:
  // Layer sizes including input and output, e.g. {16, 64, 4}.
  Mlp(int num_classes, int num_features, Params params, std::vector<int> layer_sizes, Vector flat);

  static std::unique_ptr<Mlp> fit(const Matrix& x, const Labels& y, int num_classes,
                                  const Params& params, std::uint64_t seed);
  static std::unique_ptr<Mlp> from_state(int num_classes, int num_features, Params params,
                                         const nlohmann::json& state);

  // Parameter count for the given layer sizes; layout per layer is W (out x in,
  // row-major) followed by b (out).
  static std::size_t parameter_count(const std::vector<int>& layer_sizes);
  static Vector he_init(const std::vector<int>& layer_sizes, std::uint64_t seed);
  static double loss_and_gradient(const std::vector<int>& layer_sizes, const Vector& flat,
                                  const Matrix& x, const Labels& y, double l2, Vector* gradient);

  ModelKind kind() const override { return ModelKind::kMlp; }
  Matrix predict_proba(const Matrix& x) const override;
  const std::vector<int>& layer_sizes() const { return layer_sizes_; }
  const Vector& parameters() const { return flat_; }
  int epochs_run() const { return epochs_run_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  std::vector<int> layer_sizes_;
  Vector flat_;
  int epochs_run_ = 0;
};

}  // namespace occml::models
