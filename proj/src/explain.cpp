#include "occml/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "occml/parallel.hpp"
#include "occml/rng.hpp"

namespace occml::explain {

namespace {

// Bounds the hybrid matrix built per predict_proba call.
constexpr Eigen::Index kMaxBatchRows = 1 << 15;

void check_feature_count(int m, int limit, const char* what) {
  if (m > limit) {
    throw Error(ErrorKind::kTooManyFeatures,
                std::string(what) + " supports at most " + std::to_string(limit) + " features, got " + std::to_string(m));
  }
  if (m < 1) throw Error(ErrorKind::kInvalidArgument, "need at least one feature");
}

}  // namespace

InterventionalValue::InterventionalValue(const models::Classifier& model, Vector x, const Matrix& background)
    : model_(model), x_(std::move(x)), background_(background) {
  if (background_.rows() == 0) throw Error(ErrorKind::kEmptyBackground, "background set is empty");
  if (background_.cols() != x_.size() || x_.size() != model_.num_features()) {
    throw Error(ErrorKind::kLengthMismatch, "explained row, background and model disagree on feature count");
  }
  check_feature_count(static_cast<int>(x_.size()), 31, "coalition encoding");
}

Matrix InterventionalValue::values(std::span<const Coalition> coalitions) const {
  const Eigen::Index b = background_.rows();
  const Eigen::Index m = x_.size();
  Matrix out(static_cast<Eigen::Index>(coalitions.size()), num_outputs());
  const std::size_t per_chunk = static_cast<std::size_t>(std::max<Eigen::Index>(1, kMaxBatchRows / b));
  for (std::size_t start = 0; start < coalitions.size(); start += per_chunk) {
    const std::size_t count = std::min(per_chunk, coalitions.size() - start);
    Matrix hybrid(static_cast<Eigen::Index>(count) * b, m);
    for (std::size_t c = 0; c < count; ++c) {
      const Coalition mask = coalitions[start + c];
      auto block = hybrid.middleRows(static_cast<Eigen::Index>(c) * b, b);
      block = background_;
      for (Eigen::Index j = 0; j < m; ++j) {
        if ((mask >> j) & 1U) block.col(j).setConstant(x_(j));
      }
    }
    const Matrix proba = model_.predict_proba(hybrid);
    for (std::size_t c = 0; c < count; ++c) {
      out.row(static_cast<Eigen::Index>(start + c)) =
          proba.middleRows(static_cast<Eigen::Index>(c) * b, b).colwise().mean();
    }
  }
  return out;
}

RetrainValue::RetrainValue(int num_features, int num_outputs, Retrainer retrain)
    : num_features_(num_features), num_outputs_(num_outputs), retrain_(std::move(retrain)) {
  check_feature_count(num_features, kMaxRetrainFeatures, "retraining value function");
}

Matrix RetrainValue::values(std::span<const Coalition> coalitions) const {
  std::map<Coalition, Vector> cache;
  Matrix out(static_cast<Eigen::Index>(coalitions.size()), num_outputs_);
  for (std::size_t i = 0; i < coalitions.size(); ++i) {
    auto it = cache.find(coalitions[i]);
    if (it == cache.end()) {
      std::vector<int> features;
      for (int j = 0; j < num_features_; ++j) {
        if ((coalitions[i] >> j) & 1U) features.push_back(j);
      }
      Vector v = retrain_(features);
      if (v.size() != num_outputs_) throw Error(ErrorKind::kLengthMismatch, "retrainer returned wrong output size");
      it = cache.emplace(coalitions[i], std::move(v)).first;
    }
    out.row(static_cast<Eigen::Index>(i)) = it->second.transpose();
  }
  return out;
}

Attribution shap_exact(const ValueFunction& v) {
  const int m = v.num_features();
  check_feature_count(m, kMaxExactFeatures, "exact Shapley computation");
  const Coalition full = (Coalition{1} << m) - 1;
  std::vector<Coalition> all(static_cast<std::size_t>(full) + 1);
  std::iota(all.begin(), all.end(), Coalition{0});
  const Matrix values = v.values(all);

  // weight[s] = s! (m - s - 1)! / m!
  std::vector<double> weight(static_cast<std::size_t>(m));
  double binom = 1.0;  // C(m-1, s)
  for (int s = 0; s < m; ++s) {
    weight[static_cast<std::size_t>(s)] = 1.0 / (static_cast<double>(m) * binom);
    binom = binom * static_cast<double>(m - 1 - s) / static_cast<double>(s + 1);
  }

  Attribution a;
  a.phi = Matrix::Zero(m, v.num_outputs());
  a.std_error = Matrix::Zero(m, v.num_outputs());
  for (int i = 0; i < m; ++i) {
    const Coalition bit = Coalition{1} << i;
    for (Coalition s = 0; s <= full; ++s) {
      if (s & bit) continue;
      const double w = weight[static_cast<std::size_t>(std::popcount(s))];
      a.phi.row(i) += w * (values.row(static_cast<Eigen::Index>(s | bit)) - values.row(static_cast<Eigen::Index>(s)));
    }
  }
  a.base = values.row(0).transpose();
  a.output = values.row(static_cast<Eigen::Index>(full)).transpose();
  return a;
}

Attribution shap_sampled(const ValueFunction& v, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw Error(ErrorKind::kInvalidArgument, "n_pairs must be positive");
  const int m = v.num_features();
  check_feature_count(m, 31, "coalition encoding");
  const Coalition full = (Coalition{1} << m) - 1;

  Rng rng(derive_seed(seed, "permutations"));
  std::vector<std::vector<int>> perms;
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int p = 0; p < n_pairs; ++p) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(std::span(order));
    perms.push_back(order);
    perms.emplace_back(order.rbegin(), order.rend());
  }

  // Row 0 is the empty coalition, row 1 the full one; each permutation then
  // contributes its m - 1 intermediate prefixes.
  std::vector<Coalition> coalitions{0, full};
  for (const auto& perm : perms) {
    Coalition s = 0;
    for (int k = 0; k + 1 < m; ++k) {
      s |= Coalition{1} << perm[static_cast<std::size_t>(k)];
      coalitions.push_back(s);
    }
  }
  const Matrix values = v.values(coalitions);
  const Eigen::Index outputs = values.cols();

  std::vector<Matrix> units(static_cast<std::size_t>(n_pairs), Matrix::Zero(m, outputs));
  for (std::size_t p = 0; p < perms.size(); ++p) {
    const auto& perm = perms[p];
    const Eigen::Index offset = 2 + static_cast<Eigen::Index>(p) * (m - 1);
    for (int k = 0; k < m; ++k) {
      const Eigen::Index before = k == 0 ? 0 : offset + k - 1;
      const Eigen::Index after = k == m - 1 ? 1 : offset + k;
      units[p / 2].row(perm[static_cast<std::size_t>(k)]) += 0.5 * (values.row(after) - values.row(before));
    }
  }

  Attribution a;
  a.phi = Matrix::Zero(m, outputs);
  for (const auto& u : units) a.phi += u;
  a.phi /= static_cast<double>(n_pairs);
  if (n_pairs < 2) {
    a.std_error = Matrix::Constant(m, outputs, std::numeric_limits<double>::quiet_NaN());
  } else {
    Matrix ss = Matrix::Zero(m, outputs);
    for (const auto& u : units) ss.array() += (u - a.phi).array().square();
    a.std_error = (ss.array() / static_cast<double>(n_pairs - 1)).sqrt() / std::sqrt(static_cast<double>(n_pairs));
  }
  a.base = values.row(0).transpose();
  a.output = values.row(1).transpose();
  return a;
}

Explanation explain_rows(const models::Classifier& model, const Matrix& rows, const Matrix& background,
                         const std::vector<std::string>& feature_names, const ExplainOptions& options) {
  if (background.rows() == 0) throw Error(ErrorKind::kEmptyBackground, "background set is empty");
  if (static_cast<Eigen::Index>(feature_names.size()) != rows.cols()) {
    throw Error(ErrorKind::kLengthMismatch, "feature name count does not match columns");
  }
  if (options.method == Method::kExact) check_feature_count(static_cast<int>(rows.cols()), kMaxExactFeatures, "exact Shapley computation");
  Explanation out;
  out.feature_names = feature_names;
  out.method = options.method;
  out.samples.resize(static_cast<std::size_t>(rows.rows()));
  parallel_for(out.samples.size(), [&](std::size_t i) {
    const InterventionalValue v(model, rows.row(static_cast<Eigen::Index>(i)).transpose(), background);
    out.samples[i] = options.method == Method::kExact
                         ? shap_exact(v)
                         : shap_sampled(v, options.n_pairs, derive_seed(options.seed, i));
  });
  return out;
}

Matrix sample_background(const Matrix& train, std::size_t n, std::uint64_t seed) {
  if (train.rows() == 0 || n == 0) throw Error(ErrorKind::kEmptyBackground, "background set is empty");
  std::vector<std::size_t> rows(static_cast<std::size_t>(train.rows()));
  std::iota(rows.begin(), rows.end(), 0);
  Rng rng(derive_seed(seed, "background"));
  rng.shuffle(std::span(rows));
  rows.resize(std::min(n, rows.size()));
  std::sort(rows.begin(), rows.end());
  Matrix out(static_cast<Eigen::Index>(rows.size()), train.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = train.row(static_cast<Eigen::Index>(rows[i]));
  return out;
}

std::vector<SummaryEntry> shap_summary(const Explanation& explanation) {
  if (explanation.samples.empty()) throw Error(ErrorKind::kEmptyInput, "no explained samples to summarize");
  const auto m = explanation.feature_names.size();
  std::vector<SummaryEntry> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& s : explanation.samples) {
      total += s.phi.row(static_cast<Eigen::Index>(j)).cwiseAbs().sum();
      count += static_cast<std::size_t>(s.phi.cols());
    }
    out[j] = {static_cast<int>(j), explanation.feature_names[j], total / static_cast<double>(count)};
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.mean_abs > b.mean_abs; });
  return out;
}

std::string summary_csv(const std::vector<SummaryEntry>& summary) {
  std::ostringstream os;
  os << "feature,mean_abs_shap\n";
  for (const auto& e : summary) os << e.name << ',' << format_double(e.mean_abs) << '\n';
  return os.str();
}

namespace {

nlohmann::json matrix_rows(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(std::isfinite(m(i, j)) ? nlohmann::json(m(i, j)) : nlohmann::json(nullptr));
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

nlohmann::json to_json(const Explanation& explanation) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : explanation.samples) {
    samples.push_back({{"phi", matrix_rows(s.phi)},
                       {"std_error", matrix_rows(s.std_error)},
                       {"base", to_vec(s.base)},
                       {"output", to_vec(s.output)}});
  }
  return {{"method", explanation.method == Method::kExact ? "exact" : "sampled"},
          {"feature_names", explanation.feature_names},
          {"samples", samples}};
}

nlohmann::json to_json(const std::vector<SummaryEntry>& summary) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : summary) out.push_back({{"feature", e.name}, {"index", e.feature}, {"mean_abs_shap", e.mean_abs}});
  return out;
}

}  // namespace occml::explain
