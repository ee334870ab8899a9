#include "occml/models/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>

#include "occml/parallel.hpp"

namespace occml::models {

GbtParams gbt_params_from_json(const Params& p, ModelKind kind) {
  GbtParams out;
  out.n_rounds = p.at("n_rounds").get<int>();
  out.learning_rate = p.at("learning_rate").get<double>();
  out.lambda = p.at("lambda").get<double>();
  out.gamma = p.at("gamma").get<double>();
  out.min_child_weight = p.at("min_child_weight").get<double>();
  out.max_depth = p.at("max_depth").get<int>();
  if (kind == ModelKind::kLightGbm) {
    out.growth = Growth::kLeafWise;
    out.num_leaves = p.at("num_leaves").get<int>();
  } else {
    out.growth = Growth::kLevelWise;
  }
  return out;
}

namespace {

struct SplitChoice {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;
};

class NewtonGrower {
 public:
  NewtonGrower(const Matrix& x, std::span<const double> grad, std::span<const double> hess,
               const GbtParams& params)
      : x_(x), grad_(grad), hess_(hess), params_(params) {}

  Tree grow(const SortedRows& root) {
    Tree tree(1);
    Pending first = make_pending(tree, SortedRows(root), 0);
    if (params_.growth == Growth::kLevelWise) {
      grow_level_wise(tree, std::move(first));
    } else {
      grow_leaf_wise(tree, std::move(first));
    }
    return tree;
  }

 private:
  struct Pending {
    int node = -1;
    int depth = 0;
    SortedRows rows;
    std::optional<SplitChoice> split;
  };

  double score(double g, double h) const { return g * g / (h + params_.lambda); }

  Pending make_pending(Tree& tree, SortedRows rows, int depth) {
    double g = 0.0;
    double h = 0.0;
    for (std::uint32_t r : rows.by_feature.front()) {
      g += grad_[r];
      h += hess_[r];
    }
    const double weight = -g / (h + params_.lambda);
    const double payload[1] = {std::isfinite(weight) ? weight : 0.0};
    Pending p;
    p.node = tree.add_leaf(payload);
    p.depth = depth;
    const bool depth_ok = params_.max_depth <= 0 || depth < params_.max_depth;
    if (depth_ok && rows.size() >= 2) p.split = best_split(rows, g, h);
    p.rows = std::move(rows);
    return p;
  }

  std::optional<SplitChoice> best_split(const SortedRows& rows, double g_total, double h_total) const {
    const double parent = score(g_total, h_total);
    SplitChoice best;
    best.gain = 1e-12;
    for (std::size_t f = 0; f < rows.by_feature.size(); ++f) {
      const auto& order = rows.by_feature[f];
      const auto feature = static_cast<Eigen::Index>(f);
      double gl = 0.0;
      double hl = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::uint32_t r = order[k];
        gl += grad_[r];
        hl += hess_[r];
        const double v = x_(r, feature);
        const double next = x_(order[k + 1], feature);
        if (!(v < next)) continue;
        const double hr = h_total - hl;
        if (hl < params_.min_child_weight || hr < params_.min_child_weight) continue;
        const double gain = 0.5 * (score(gl, hl) + score(g_total - gl, hr) - parent) - params_.gamma;
        if (gain > best.gain) {
          best.gain = gain;
          best.feature = static_cast<int>(f);
          best.threshold = split_threshold(v, next);
        }
      }
    }
    if (best.feature < 0) return std::nullopt;
    return best;
  }

  std::pair<Pending, Pending> apply(Tree& tree, Pending& p) {
    auto [left_rows, right_rows] = p.rows.partition(x_, p.split->feature, p.split->threshold);
    p.rows = SortedRows{};
    Pending left = make_pending(tree, std::move(left_rows), p.depth + 1);
    Pending right = make_pending(tree, std::move(right_rows), p.depth + 1);
    tree.make_split(p.node, p.split->feature, p.split->threshold, left.node, right.node);
    return {std::move(left), std::move(right)};
  }

  void grow_level_wise(Tree& tree, Pending root) {
    std::deque<Pending> queue;
    queue.push_back(std::move(root));
    while (!queue.empty()) {
      Pending p = std::move(queue.front());
      queue.pop_front();
      if (!p.split) continue;
      auto [left, right] = apply(tree, p);
      queue.push_back(std::move(left));
      queue.push_back(std::move(right));
    }
  }

  void grow_leaf_wise(Tree& tree, Pending root) {
    std::vector<Pending> leaves;
    leaves.push_back(std::move(root));
    int num_leaves = 1;
    while (num_leaves < params_.num_leaves) {
      std::size_t best = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].split) continue;
        // Strictly greater keeps the earliest-created leaf on ties.
        if (best == leaves.size() || leaves[i].split->gain > leaves[best].split->gain) best = i;
      }
      if (best == leaves.size()) break;
      Pending chosen = std::move(leaves[best]);
      leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(best));
      auto [left, right] = apply(tree, chosen);
      leaves.push_back(std::move(left));
      leaves.push_back(std::move(right));
      ++num_leaves;
    }
  }

  const Matrix& x_;
  std::span<const double> grad_;
  std::span<const double> hess_;
  GbtParams params_;
};

constexpr double kMinHessian = 1e-16;
// Log-prior stand-in for a class missing from the training labels.
constexpr double kAbsentClassScore = -30.0;

double mean_cross_entropy(const Matrix& raw, const Labels& y) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    const double m = raw.row(i).maxCoeff();
    const double lse = m + std::log((raw.row(i).array() - m).exp().sum());
    loss += lse - raw(i, y[static_cast<std::size_t>(i)]);
  }
  return loss / static_cast<double>(raw.rows());
}

}  // namespace

Tree grow_newton_tree(const Matrix& x, const SortedRows& root, std::span<const double> grad,
                      std::span<const double> hess, const GbtParams& params) {
  return NewtonGrower(x, grad, hess, params).grow(root);
}

BoostedEnsemble::BoostedEnsemble(ModelKind kind, int num_classes, int num_features, Params params,
                                 std::vector<double> base_score, double learning_rate,
                                 std::vector<std::vector<Tree>> rounds)
    : Classifier(num_classes, num_features, std::move(params)),
      kind_(kind),
      base_score_(std::move(base_score)),
      learning_rate_(learning_rate),
      rounds_(std::move(rounds)) {}

std::unique_ptr<BoostedEnsemble> BoostedEnsemble::fit(ModelKind kind, const Matrix& x, const Labels& y,
                                                      int num_classes, const Params& params,
                                                      std::uint64_t /*seed*/) {
  const GbtParams gp = gbt_params_from_json(params, kind);
  const auto n = static_cast<Eigen::Index>(y.size());

  std::vector<double> base(static_cast<std::size_t>(num_classes), 0.0);
  for (int label : y) base[static_cast<std::size_t>(label)] += 1.0;
  for (auto& b : base) b = b > 0 ? std::log(b / static_cast<double>(n)) : kAbsentClassScore;

  Matrix raw(n, num_classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (int c = 0; c < num_classes; ++c) raw(i, c) = base[static_cast<std::size_t>(c)];
  }
  std::vector<std::uint32_t> all_rows(static_cast<std::size_t>(n));
  for (std::uint32_t i = 0; i < all_rows.size(); ++i) all_rows[i] = i;
  const SortedRows root = SortedRows::build(x, all_rows);

  auto model = std::make_unique<BoostedEnsemble>(kind, num_classes, static_cast<int>(x.cols()), params,
                                                 base, gp.learning_rate, std::vector<std::vector<Tree>>{});
  model->training_loss_.push_back(mean_cross_entropy(raw, y));

  std::vector<std::vector<double>> grad(static_cast<std::size_t>(num_classes), std::vector<double>(static_cast<std::size_t>(n)));
  std::vector<std::vector<double>> hess = grad;
  for (int round = 0; round < gp.n_rounds; ++round) {
    const Matrix prob = softmax_rows(raw);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int c = 0; c < num_classes; ++c) {
        const double p = prob(i, c);
        const auto ci = static_cast<std::size_t>(c);
        grad[ci][static_cast<std::size_t>(i)] = p - (y[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0);
        hess[ci][static_cast<std::size_t>(i)] = std::max(p * (1.0 - p), kMinHessian);
      }
    }
    if (!prob.allFinite()) throw Error(ErrorKind::kNonFiniteGradient, "boosting gradients became non-finite");

    std::vector<Tree> trees(static_cast<std::size_t>(num_classes));
    parallel_for(trees.size(), [&](std::size_t c) {
      trees[c] = grow_newton_tree(x, root, grad[c], hess[c], gp);
    });
    for (int c = 0; c < num_classes; ++c) {
      for (Eigen::Index i = 0; i < n; ++i) {
        raw(i, c) += gp.learning_rate * trees[static_cast<std::size_t>(c)].leaf_value(x.row(i).data())[0];
      }
    }
    model->rounds_.push_back(std::move(trees));
    model->training_loss_.push_back(mean_cross_entropy(raw, y));
  }
  return model;
}

std::unique_ptr<BoostedEnsemble> BoostedEnsemble::from_state(ModelKind kind, int num_classes,
                                                             int num_features, Params params,
                                                             const nlohmann::json& state) {
  std::vector<std::vector<Tree>> rounds;
  for (const auto& r : state.at("rounds")) {
    std::vector<Tree> trees;
    for (const auto& t : r) trees.push_back(Tree::from_json(t));
    rounds.push_back(std::move(trees));
  }
  return std::make_unique<BoostedEnsemble>(kind, num_classes, num_features, std::move(params),
                                           state.at("base_score").get<std::vector<double>>(),
                                           state.at("learning_rate").get<double>(), std::move(rounds));
}

Matrix BoostedEnsemble::raw_scores(const Matrix& x) const {
  check_input(x);
  Matrix raw(x.rows(), num_classes());
  constexpr Eigen::Index kChunk = 256;
  const auto chunks = static_cast<std::size_t>((x.rows() + kChunk - 1) / kChunk);
  parallel_for(chunks, [&](std::size_t chunk) {
    const Eigen::Index begin = static_cast<Eigen::Index>(chunk) * kChunk;
    const Eigen::Index end = std::min(x.rows(), begin + kChunk);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double* row = x.row(i).data();
      for (int c = 0; c < num_classes(); ++c) {
        double sum = 0.0;
        for (const auto& trees : rounds_) sum += trees[static_cast<std::size_t>(c)].leaf_value(row)[0];
        raw(i, c) = base_score_[static_cast<std::size_t>(c)] + learning_rate_ * sum;
      }
    }
  });
  return raw;
}

Matrix BoostedEnsemble::predict_proba(const Matrix& x) const { return softmax_rows(raw_scores(x)); }

nlohmann::json BoostedEnsemble::state_json() const {
  nlohmann::json rounds = nlohmann::json::array();
  for (const auto& trees : rounds_) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& t : trees) r.push_back(t.to_json());
    rounds.push_back(std::move(r));
  }
  return {{"base_score", base_score_}, {"learning_rate", learning_rate_}, {"rounds", rounds}};
}

}  // namespace occml::models
