#include "occml/models/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "occml/rng.hpp"

namespace occml::models {

namespace {

struct LayerView {
  Eigen::Map<const Matrix> w;
  Eigen::Map<const Vector> b;
};

std::vector<LayerView> layer_views(const std::vector<int>& sizes, const Vector& flat) {
  std::vector<LayerView> views;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const Eigen::Index in = sizes[l];
    const Eigen::Index out = sizes[l + 1];
    views.push_back({Eigen::Map<const Matrix>(flat.data() + offset, out, in),
                     Eigen::Map<const Vector>(flat.data() + offset + static_cast<std::size_t>(out * in), out)});
    offset += static_cast<std::size_t>(out * in + out);
  }
  return views;
}

Matrix gather_rows(const Matrix& x, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

Labels gather_labels(const Labels& y, std::span<const std::size_t> rows) {
  Labels out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = y[rows[i]];
  return out;
}

Matrix forward_logits(const std::vector<int>& sizes, const Vector& flat, const Matrix& x) {
  const auto layers = layer_views(sizes, flat);
  Matrix a = x;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = a * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    if (l + 1 < layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a;
}

}  // namespace

Mlp::Mlp(int num_classes, int num_features, Params params, std::vector<int> layer_sizes, Vector flat)
    : Classifier(num_classes, num_features, std::move(params)),
      layer_sizes_(std::move(layer_sizes)),
      flat_(std::move(flat)) {}

std::size_t Mlp::parameter_count(const std::vector<int>& sizes) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    count += static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l] + 1);
  }
  return count;
}

Vector Mlp::he_init(const std::vector<int>& sizes, std::uint64_t seed) {
  Vector flat = Vector::Zero(static_cast<Eigen::Index>(parameter_count(sizes)));
  Rng rng(derive_seed(seed, "he_init"));
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const auto weights = static_cast<std::size_t>(sizes[l + 1]) * static_cast<std::size_t>(sizes[l]);
    const double stddev = std::sqrt(2.0 / sizes[l]);
    for (std::size_t k = 0; k < weights; ++k) flat(static_cast<Eigen::Index>(offset + k)) = rng.normal(0.0, stddev);
    offset += weights + static_cast<std::size_t>(sizes[l + 1]);
  }
  return flat;
}

double Mlp::loss_and_gradient(const std::vector<int>& sizes, const Vector& flat, const Matrix& x,
                              const Labels& y, double l2, Vector* gradient) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count(sizes)) {
    throw Error(ErrorKind::kLengthMismatch, "parameter vector size");
  }
  const auto layers = layer_views(sizes, flat);
  const auto n = static_cast<double>(x.rows());

  // activations[l] is the input to layer l; pre[l] its pre-activation output.
  std::vector<Matrix> activations{x};
  std::vector<Matrix> pre;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Matrix z = activations.back() * layers[l].w.transpose();
    z.rowwise() += layers[l].b.transpose();
    pre.push_back(z);
    if (l + 1 < layers.size()) activations.push_back(z.cwiseMax(0.0));
  }
  const Matrix& logits = pre.back();
  double loss = 0.0;
  Matrix delta = softmax_rows(logits);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int label = y[static_cast<std::size_t>(i)];
    const double m = logits.row(i).maxCoeff();
    loss += m + std::log((logits.row(i).array() - m).exp().sum()) - logits(i, label);
    delta(i, label) -= 1.0;
  }
  loss /= n;
  double penalty = 0.0;
  for (const auto& layer : layers) penalty += layer.w.squaredNorm();
  loss += 0.5 * l2 * penalty;

  if (gradient != nullptr) {
    gradient->resize(flat.size());
    delta /= n;
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      offsets.push_back(offset);
      offset += static_cast<std::size_t>(layers[l].w.size() + layers[l].b.size());
    }
    for (std::size_t l = layers.size(); l-- > 0;) {
      const auto& w = layers[l].w;
      Eigen::Map<Matrix> gw(gradient->data() + offsets[l], w.rows(), w.cols());
      gw = delta.transpose() * activations[l] + l2 * w;
      gradient->segment(static_cast<Eigen::Index>(offsets[l]) + w.size(), w.rows()) = delta.colwise().sum().transpose();
      if (l > 0) {
        Matrix back = delta * w;
        back = back.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
        delta = std::move(back);
      }
    }
  }
  return loss;
}

std::unique_ptr<Mlp> Mlp::fit(const Matrix& x, const Labels& y, int num_classes, const Params& params,
                              std::uint64_t seed) {
  std::vector<int> sizes{static_cast<int>(x.cols())};
  for (const auto& h : params.at("hidden_sizes")) sizes.push_back(h.get<int>());
  sizes.push_back(num_classes);
  const double l2 = params.at("l2").get<double>();
  const double lr = params.at("lr").get<double>();
  const auto batch_size = params.at("batch_size").get<std::size_t>();
  const int epochs = params.at("epochs").get<int>();
  const bool early_stopping = params.at("early_stopping").get<bool>();
  const int patience = params.at("patience").get<int>();

  std::vector<std::size_t> train_rows(y.size());
  std::iota(train_rows.begin(), train_rows.end(), 0);
  Matrix x_val;
  Labels y_val;
  if (early_stopping) {
    Rng split_rng(derive_seed(seed, "validation"));
    split_rng.shuffle(std::span(train_rows));
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(params.at("validation_fraction").get<double>() * static_cast<double>(y.size())));
    if (n_val >= train_rows.size()) throw Error(ErrorKind::kInvalidHyperparameter, "mlp: validation split leaves no training rows");
    std::vector<std::size_t> val(train_rows.begin(), train_rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    train_rows.erase(train_rows.begin(), train_rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(val.begin(), val.end());
    std::sort(train_rows.begin(), train_rows.end());
    x_val = gather_rows(x, val);
    y_val = gather_labels(y, val);
  }

  Vector flat = he_init(sizes, seed);
  Vector m = Vector::Zero(flat.size());
  Vector v = Vector::Zero(flat.size());
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  long step = 0;
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  Vector grad;
  Vector best = flat;
  double best_val = std::numeric_limits<double>::infinity();
  int stale = 0;
  int epoch = 0;
  for (; epoch < epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(train_rows));
    for (std::size_t start = 0; start < train_rows.size(); start += batch_size) {
      const auto count = std::min(batch_size, train_rows.size() - start);
      const std::span<const std::size_t> batch(train_rows.data() + start, count);
      const double loss = loss_and_gradient(sizes, flat, gather_rows(x, batch), gather_labels(y, batch), l2, &grad);
      if (!std::isfinite(loss) || !grad.allFinite()) {
        throw Error(ErrorKind::kNonFiniteLoss, "mlp training diverged at epoch " + std::to_string(epoch));
      }
      ++step;
      m = kBeta1 * m + (1.0 - kBeta1) * grad;
      v = kBeta2 * v + (1.0 - kBeta2) * grad.cwiseProduct(grad);
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      flat.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + kEps);
    }
    if (early_stopping) {
      const double val_loss = loss_and_gradient(sizes, flat, x_val, y_val, 0.0, nullptr);
      if (val_loss < best_val - 1e-6) {
        best_val = val_loss;
        best = flat;
        stale = 0;
      } else if (++stale >= patience) {
        ++epoch;
        break;
      }
    }
  }
  if (early_stopping) flat = best;
  auto model = std::make_unique<Mlp>(num_classes, static_cast<int>(x.cols()), params, std::move(sizes), std::move(flat));
  model->epochs_run_ = epoch;
  return model;
}

std::unique_ptr<Mlp> Mlp::from_state(int num_classes, int num_features, Params params,
                                     const nlohmann::json& state) {
  const auto values = state.at("parameters").get<std::vector<double>>();
  Vector flat = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  auto sizes = state.at("layer_sizes").get<std::vector<int>>();
  if (static_cast<std::size_t>(flat.size()) != parameter_count(sizes)) {
    throw Error(ErrorKind::kInvalidArgument, "mlp parameter count does not match layer sizes");
  }
  return std::make_unique<Mlp>(num_classes, num_features, std::move(params), std::move(sizes), std::move(flat));
}

Matrix Mlp::predict_proba(const Matrix& x) const {
  check_input(x);
  return softmax_rows(forward_logits(layer_sizes_, flat_, x));
}

nlohmann::json Mlp::state_json() const {
  return {{"layer_sizes", layer_sizes_},
          {"parameters", std::vector<double>(flat_.data(), flat_.data() + flat_.size())}};
}

}  // namespace occml::models
