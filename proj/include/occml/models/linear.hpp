#pragma once

#include <cstdint>

#include "occml/models/classifier.hpp"

namespace occml::models {

// Predicts the modal training class (lowest index on ties) for every input.
class MajorityClassifier final : public Classifier {
 public:
  MajorityClassifier(int num_classes, int num_features, int majority);

  static std::unique_ptr<MajorityClassifier> fit(const Matrix& x, const Labels& y, int num_classes);
  static std::unique_ptr<MajorityClassifier> from_state(int num_classes, int num_features,
                                                        const nlohmann::json& state);

  ModelKind kind() const override { return ModelKind::kMajority; }
  Matrix predict_proba(const Matrix& x) const override;
  int majority() const { return majority_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  int majority_;
};

// Multinomial logistic regression: mean cross-entropy + (l2/2)||W||^2 with an
// unpenalized bias, minimized by proximal full-batch gradient descent from a
// zero start.
class SoftmaxRegression final : public Classifier {
 public:
  SoftmaxRegression(int num_classes, int num_features, Params params, Matrix weights, Vector bias);

  static std::unique_ptr<SoftmaxRegression> fit(const Matrix& x, const Labels& y, int num_classes,
                                                const Params& params);
  static std::unique_ptr<SoftmaxRegression> from_state(int num_classes, int num_features,
                                                       Params params, const nlohmann::json& state);

  // Objective and gradient at a flat parameter vector laid out as
  // [W row-major (C x d), b (C)].
  static double loss_and_gradient(const Vector& flat, const Matrix& x, const Labels& y,
                                  int num_classes, double l2, Vector* gradient);

  ModelKind kind() const override { return ModelKind::kLogistic; }
  Matrix predict_proba(const Matrix& x) const override;
  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return bias_; }
  int iterations() const { return iterations_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  Matrix weights_;  // C x d
  Vector bias_;
  int iterations_ = 0;
};

// Gaussian classes with a shared covariance (1 - g) S + g diag(S), S the
// pooled within-class covariance; posteriors from the linear discriminants.
class LdaClassifier final : public Classifier {
 public:
  LdaClassifier(int num_classes, int num_features, Params params, Matrix coef, Vector intercept);

  static std::unique_ptr<LdaClassifier> fit(const Matrix& x, const Labels& y, int num_classes,
                                            const Params& params);
  static std::unique_ptr<LdaClassifier> from_state(int num_classes, int num_features, Params params,
                                                   const nlohmann::json& state);

  ModelKind kind() const override { return ModelKind::kLda; }
  Matrix predict_proba(const Matrix& x) const override;
  // Discriminant scores x^T S^-1 mu_k - mu_k^T S^-1 mu_k / 2 + log pi_k.
  Matrix decision_function(const Matrix& x) const;

 protected:
  nlohmann::json state_json() const override;

 private:
  Matrix coef_;  // C x d
  Vector intercept_;
};

// One-vs-rest hinge-loss SVMs trained with the Pegasos subgradient schedule,
// optionally on random Fourier features approximating an RBF kernel.
// Probabilities are a softmax over the class margins and are not calibrated.
class LinearSvm final : public Classifier {
 public:
  LinearSvm(int num_classes, int num_features, Params params, Matrix weights, Vector bias,
            Matrix rff_projection, Vector rff_offset);

  static std::unique_ptr<LinearSvm> fit(const Matrix& x, const Labels& y, int num_classes,
                                        const Params& params, std::uint64_t seed);
  static std::unique_ptr<LinearSvm> from_state(int num_classes, int num_features, Params params,
                                               const nlohmann::json& state);

  ModelKind kind() const override { return ModelKind::kSvm; }
  Matrix predict_proba(const Matrix& x) const override;
  Matrix margins(const Matrix& x) const;
  Matrix feature_map(const Matrix& x) const;

 protected:
  nlohmann::json state_json() const override;

 private:
  bool uses_rff() const { return rff_projection_.size() > 0; }

  Matrix weights_;  // C x D
  Vector bias_;
  Matrix rff_projection_;  // D x d, empty for the linear kernel
  Vector rff_offset_;
};

}  // namespace occml::models
