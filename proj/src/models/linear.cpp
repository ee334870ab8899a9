#include "occml/models/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "occml/parallel.hpp"
#include "occml/rng.hpp"

namespace occml::models {

namespace {

Matrix one_hot(const Labels& y, int num_classes) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(y.size()), num_classes);
  for (std::size_t i = 0; i < y.size(); ++i) out(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return out;
}

std::vector<double> class_counts(const Labels& y, int num_classes) {
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 0.0);
  for (int label : y) counts[static_cast<std::size_t>(label)] += 1.0;
  return counts;
}

// Mean cross-entropy of softmax(logits) against integer labels.
double cross_entropy(const Matrix& logits, const Labels& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    loss += lse - logits(i, y[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(logits.rows());
}

std::vector<double> vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector vec_from_json(const nlohmann::json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Majority

MajorityClassifier::MajorityClassifier(int num_classes, int num_features, int majority)
    : Classifier(num_classes, num_features, Params::object()), majority_(majority) {}

std::unique_ptr<MajorityClassifier> MajorityClassifier::fit(const Matrix& x, const Labels& y,
                                                            int num_classes) {
  if (y.empty()) throw Error(ErrorKind::kEmptyLabels, "majority baseline needs labels");
  const auto counts = class_counts(y, num_classes);
  // max_element returns the first maximum, i.e. the lowest class index.
  const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
  return std::make_unique<MajorityClassifier>(num_classes, static_cast<int>(x.cols()), majority);
}

std::unique_ptr<MajorityClassifier> MajorityClassifier::from_state(int num_classes, int num_features,
                                                                   const nlohmann::json& state) {
  return std::make_unique<MajorityClassifier>(num_classes, num_features, state.at("majority").get<int>());
}

Matrix MajorityClassifier::predict_proba(const Matrix& x) const {
  check_input(x);
  Matrix out = Matrix::Zero(x.rows(), num_classes());
  out.col(majority_).setOnes();
  return out;
}

nlohmann::json MajorityClassifier::state_json() const { return {{"majority", majority_}}; }

// ---------------------------------------------------------------------------
// Softmax regression

SoftmaxRegression::SoftmaxRegression(int num_classes, int num_features, Params params,
                                     Matrix weights, Vector bias)
    : Classifier(num_classes, num_features, std::move(params)),
      weights_(std::move(weights)),
      bias_(std::move(bias)) {}

double SoftmaxRegression::loss_and_gradient(const Vector& flat, const Matrix& x, const Labels& y,
                                            int num_classes, double l2, Vector* gradient) {
  const auto d = x.cols();
  const auto c = static_cast<Eigen::Index>(num_classes);
  if (flat.size() != c * d + c) throw Error(ErrorKind::kLengthMismatch, "parameter vector size");
  Eigen::Map<const Matrix> w(flat.data(), c, d);
  const auto b = flat.tail(c);
  Matrix logits = x * w.transpose();
  logits.rowwise() += b.transpose();
  const double loss = cross_entropy(logits, y) + 0.5 * l2 * w.squaredNorm();
  if (gradient != nullptr) {
    const Matrix residual = (softmax_rows(logits) - one_hot(y, num_classes)) / static_cast<double>(x.rows());
    gradient->resize(flat.size());
    Eigen::Map<Matrix> gw(gradient->data(), c, d);
    gw = residual.transpose() * x + l2 * w;
    gradient->tail(c) = residual.colwise().sum().transpose();
  }
  return loss;
}

std::unique_ptr<SoftmaxRegression> SoftmaxRegression::fit(const Matrix& x, const Labels& y,
                                                          int num_classes, const Params& params) {
  const double l2 = params.at("l2").get<double>();
  const double lr = params.at("lr").get<double>();
  const int max_iters = params.at("max_iters").get<int>();
  const double tol = params.at("tol").get<double>();
  const auto d = x.cols();
  const auto c = static_cast<Eigen::Index>(num_classes);
  const auto n = static_cast<double>(x.rows());
  const Matrix targets = one_hot(y, num_classes);

  Matrix w = Matrix::Zero(c, d);
  Vector b = Vector::Zero(c);
  int iter = 0;
  for (; iter < max_iters; ++iter) {
    Matrix logits = x * w.transpose();
    logits.rowwise() += b.transpose();
    const Matrix residual = (softmax_rows(logits) - targets) / n;
    const Matrix grad_w = residual.transpose() * x;
    const Vector grad_b = residual.colwise().sum().transpose();
    if (!grad_w.allFinite() || !grad_b.allFinite()) {
      throw Error(ErrorKind::kNonFiniteLoss, "softmax regression diverged (lr too large?)");
    }
    const double norm = std::sqrt((grad_w + l2 * w).squaredNorm() + grad_b.squaredNorm());
    if (norm < tol) break;
    // Proximal step on the L2 term: stable for any l2.
    w = (w - lr * grad_w) / (1.0 + lr * l2);
    b -= lr * grad_b;
  }
  Matrix logits = x * w.transpose();
  logits.rowwise() += b.transpose();
  if (!std::isfinite(cross_entropy(logits, y))) {
    throw Error(ErrorKind::kNonFiniteLoss, "softmax regression produced a non-finite loss");
  }
  auto model = std::make_unique<SoftmaxRegression>(num_classes, static_cast<int>(d), params,
                                                   std::move(w), std::move(b));
  model->iterations_ = iter;
  return model;
}

std::unique_ptr<SoftmaxRegression> SoftmaxRegression::from_state(int num_classes, int num_features,
                                                                 Params params,
                                                                 const nlohmann::json& state) {
  return std::make_unique<SoftmaxRegression>(num_classes, num_features, std::move(params),
                                             matrix_from_json(state.at("weights")),
                                             vec_from_json(state.at("bias")));
}

Matrix SoftmaxRegression::predict_proba(const Matrix& x) const {
  check_input(x);
  Matrix logits = x * weights_.transpose();
  logits.rowwise() += bias_.transpose();
  return softmax_rows(logits);
}

nlohmann::json SoftmaxRegression::state_json() const {
  return {{"weights", matrix_to_json(weights_)}, {"bias", vec(bias_)}};
}

// ---------------------------------------------------------------------------
// LDA

namespace {
// Stand-in for log(0) prior of a class absent from training; finite so the
// model stays JSON-serializable.
constexpr double kAbsentClassLogit = -1e30;
}  // namespace

LdaClassifier::LdaClassifier(int num_classes, int num_features, Params params, Matrix coef,
                             Vector intercept)
    : Classifier(num_classes, num_features, std::move(params)),
      coef_(std::move(coef)),
      intercept_(std::move(intercept)) {}

std::unique_ptr<LdaClassifier> LdaClassifier::fit(const Matrix& x, const Labels& y, int num_classes,
                                                  const Params& params) {
  const double shrinkage = params.at("shrinkage").get<double>();
  const auto d = x.cols();
  const auto counts = class_counts(y, num_classes);
  const auto present = std::count_if(counts.begin(), counts.end(), [](double v) { return v > 0; });
  if (present < 2) throw Error(ErrorKind::kInvalidArgument, "LDA needs at least two classes present");

  Matrix means = Matrix::Zero(num_classes, d);
  for (std::size_t i = 0; i < y.size(); ++i) means.row(y[i]) += x.row(static_cast<Eigen::Index>(i));
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) means.row(c) /= counts[c];
  }
  Matrix centered = x;
  for (std::size_t i = 0; i < y.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) -= means.row(y[i]);
  const double dof = static_cast<double>(x.rows()) - static_cast<double>(present);
  Eigen::MatrixXd cov = (centered.transpose() * centered) / (dof > 0 ? dof : static_cast<double>(x.rows()));
  const Eigen::VectorXd diag = cov.diagonal();
  cov = (1.0 - shrinkage) * cov;
  cov.diagonal() += shrinkage * diag;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  const double max_ev = eig.eigenvalues().maxCoeff();
  const double min_ev = eig.eigenvalues().minCoeff();
  if (!(max_ev > 0.0) || min_ev <= 1e-10 * max_ev) {
    throw Error(ErrorKind::kSingularCovariance,
                "pooled covariance is rank-deficient (shrinkage " + format_double(shrinkage) + ")");
  }
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  Matrix coef(num_classes, d);
  Vector intercept(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) {
      coef.row(c).setZero();
      intercept(c) = kAbsentClassLogit;
      continue;
    }
    const Eigen::VectorXd mu = means.row(c).transpose();
    const Eigen::VectorXd solved = ldlt.solve(mu);
    coef.row(c) = solved.transpose();
    intercept(c) = -0.5 * mu.dot(solved) + std::log(counts[c] / static_cast<double>(y.size()));
  }
  return std::make_unique<LdaClassifier>(num_classes, static_cast<int>(d), params, std::move(coef),
                                         std::move(intercept));
}

std::unique_ptr<LdaClassifier> LdaClassifier::from_state(int num_classes, int num_features,
                                                         Params params, const nlohmann::json& state) {
  return std::make_unique<LdaClassifier>(num_classes, num_features, std::move(params),
                                         matrix_from_json(state.at("coef")),
                                         vec_from_json(state.at("intercept")));
}

Matrix LdaClassifier::decision_function(const Matrix& x) const {
  check_input(x);
  Matrix scores = x * coef_.transpose();
  scores.rowwise() += intercept_.transpose();
  return scores;
}

Matrix LdaClassifier::predict_proba(const Matrix& x) const { return softmax_rows(decision_function(x)); }

nlohmann::json LdaClassifier::state_json() const {
  return {{"coef", matrix_to_json(coef_)}, {"intercept", vec(intercept_)}};
}

// ---------------------------------------------------------------------------
// SVM

LinearSvm::LinearSvm(int num_classes, int num_features, Params params, Matrix weights, Vector bias,
                     Matrix rff_projection, Vector rff_offset)
    : Classifier(num_classes, num_features, std::move(params)),
      weights_(std::move(weights)),
      bias_(std::move(bias)),
      rff_projection_(std::move(rff_projection)),
      rff_offset_(std::move(rff_offset)) {}

Matrix LinearSvm::feature_map(const Matrix& x) const {
  if (!uses_rff()) return x;
  Matrix z = x * rff_projection_.transpose();
  const double scale = std::sqrt(2.0 / static_cast<double>(rff_projection_.rows()));
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    for (Eigen::Index k = 0; k < z.cols(); ++k) z(i, k) = scale * std::cos(z(i, k) + rff_offset_(k));
  }
  return z;
}

namespace {

// Pegasos on labels in {-1, +1}; the last coordinate of the returned vector
// multiplies a constant-one feature and acts as the bias. Returns the average
// of the iterates over the second half of training.
Vector pegasos(const Matrix& z, const std::vector<double>& sign, double lambda, long iterations,
               std::uint64_t seed) {
  const auto n = static_cast<std::uint64_t>(z.rows());
  const auto d = z.cols();
  Vector w = Vector::Zero(d + 1);
  Vector avg = Vector::Zero(d + 1);
  long averaged = 0;
  const double radius = 1.0 / std::sqrt(lambda);
  Rng rng(seed);
  for (long t = 1; t <= iterations; ++t) {
    const auto i = static_cast<Eigen::Index>(rng.below(n));
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    const double margin = sign[static_cast<std::size_t>(i)] * (w.head(d).dot(z.row(i)) + w(d));
    w *= 1.0 - eta * lambda;
    if (margin < 1.0) {
      w.head(d) += (eta * sign[static_cast<std::size_t>(i)]) * z.row(i).transpose();
      w(d) += eta * sign[static_cast<std::size_t>(i)];
    }
    const double norm = w.norm();
    if (norm > radius) w *= radius / norm;
    if (2 * t > iterations) {
      avg += w;
      ++averaged;
    }
  }
  return avg / static_cast<double>(std::max(1L, averaged));
}

}  // namespace

std::unique_ptr<LinearSvm> LinearSvm::fit(const Matrix& x, const Labels& y, int num_classes,
                                          const Params& params, std::uint64_t seed) {
  const double c_reg = params.at("C").get<double>();
  const long epochs = params.at("max_epochs").get<long>();
  const bool rff = params.at("kernel").get<std::string>() == "rff";

  Matrix projection;
  Vector offset;
  if (rff) {
    const int components = params.at("n_components").get<int>();
    const double gamma = params.at("gamma").get<double>();
    Rng rng(derive_seed(seed, "rff"));
    projection.resize(components, x.cols());
    for (Eigen::Index i = 0; i < projection.size(); ++i) projection.data()[i] = rng.normal(0.0, std::sqrt(2.0 * gamma));
    offset.resize(components);
    for (Eigen::Index k = 0; k < components; ++k) offset(k) = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  auto model = std::make_unique<LinearSvm>(num_classes, static_cast<int>(x.cols()), params, Matrix(),
                                           Vector(), std::move(projection), std::move(offset));
  const Matrix z = model->feature_map(x);
  const double lambda = 1.0 / (c_reg * static_cast<double>(x.rows()));
  const long iterations = epochs * static_cast<long>(x.rows());

  std::vector<Vector> per_class(static_cast<std::size_t>(num_classes));
  parallel_for(per_class.size(), [&](std::size_t c) {
    std::vector<double> sign(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) sign[i] = y[i] == static_cast<int>(c) ? 1.0 : -1.0;
    per_class[c] = pegasos(z, sign, lambda, iterations, derive_seed(seed, c));
  });
  model->weights_.resize(num_classes, z.cols());
  model->bias_.resize(num_classes);
  for (int c = 0; c < num_classes; ++c) {
    model->weights_.row(c) = per_class[c].head(z.cols()).transpose();
    model->bias_(c) = per_class[c](z.cols());
  }
  return model;
}

std::unique_ptr<LinearSvm> LinearSvm::from_state(int num_classes, int num_features, Params params,
                                                 const nlohmann::json& state) {
  Matrix projection;
  Vector offset;
  if (state.contains("rff_projection")) {
    projection = matrix_from_json(state.at("rff_projection"));
    offset = vec_from_json(state.at("rff_offset"));
  }
  return std::make_unique<LinearSvm>(num_classes, num_features, std::move(params),
                                     matrix_from_json(state.at("weights")),
                                     vec_from_json(state.at("bias")), std::move(projection),
                                     std::move(offset));
}

Matrix LinearSvm::margins(const Matrix& x) const {
  check_input(x);
  Matrix m = feature_map(x) * weights_.transpose();
  m.rowwise() += bias_.transpose();
  return m;
}

Matrix LinearSvm::predict_proba(const Matrix& x) const { return softmax_rows(margins(x)); }

nlohmann::json LinearSvm::state_json() const {
  nlohmann::json j = {{"weights", matrix_to_json(weights_)}, {"bias", vec(bias_)}};
  if (uses_rff()) {
    j["rff_projection"] = matrix_to_json(rff_projection_);
    j["rff_offset"] = vec(rff_offset_);
  }
  return j;
}

}  // namespace occml::models
