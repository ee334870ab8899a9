#include "occml/models/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "occml/parallel.hpp"
#include "occml/rng.hpp"

namespace occml::models {

// ---------------------------------------------------------------------------
// Tree

int Tree::add_leaf(std::span<const double> payload) {
  Node n;
  n.value_offset = static_cast<int>(values_.size());
  values_.insert(values_.end(), payload.begin(), payload.end());
  nodes_.push_back(n);
  return static_cast<int>(nodes_.size()) - 1;
}

void Tree::make_split(int node, int feature, double threshold, int left, int right) {
  auto& n = nodes_.at(static_cast<std::size_t>(node));
  n.feature = feature;
  n.threshold = threshold;
  n.left = left;
  n.right = right;
}

void Tree::set_payload(int node, std::span<const double> payload) {
  const auto& n = nodes_.at(static_cast<std::size_t>(node));
  std::copy(payload.begin(), payload.end(), values_.begin() + n.value_offset);
}

int Tree::leaf_index(const double* row) const {
  int i = 0;
  while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    i = row[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

std::span<const double> Tree::payload(int node) const {
  const auto& n = nodes_.at(static_cast<std::size_t>(node));
  return {values_.data() + n.value_offset, static_cast<std::size_t>(payload_size_)};
}

std::span<const double> Tree::leaf_value(const double* row) const { return payload(leaf_index(row)); }

int Tree::num_leaves() const {
  return static_cast<int>(std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
}

int Tree::depth() const {
  if (nodes_.empty()) return 0;
  std::vector<int> depth(nodes_.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    if (n.is_leaf()) continue;
    depth[static_cast<std::size_t>(n.left)] = depth[i] + 1;
    depth[static_cast<std::size_t>(n.right)] = depth[i] + 1;
    best = std::max(best, depth[i] + 1);
  }
  return best;
}

nlohmann::json Tree::to_json() const {
  std::vector<int> feature, left, right;
  std::vector<double> threshold;
  std::vector<double> values;
  for (const auto& n : nodes_) {
    feature.push_back(n.feature);
    threshold.push_back(n.threshold);
    left.push_back(n.left);
    right.push_back(n.right);
    const auto p = payload(static_cast<int>(&n - nodes_.data()));
    values.insert(values.end(), p.begin(), p.end());
  }
  return {{"payload_size", payload_size_}, {"feature", feature}, {"threshold", threshold},
          {"left", left}, {"right", right}, {"values", values}};
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t(j.at("payload_size").get<int>());
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto threshold = j.at("threshold").get<std::vector<double>>();
  const auto left = j.at("left").get<std::vector<int>>();
  const auto right = j.at("right").get<std::vector<int>>();
  t.values_ = j.at("values").get<std::vector<double>>();
  if (t.values_.size() != feature.size() * static_cast<std::size_t>(t.payload_size_)) {
    throw Error(ErrorKind::kInvalidArgument, "tree payload size mismatch");
  }
  for (std::size_t i = 0; i < feature.size(); ++i) {
    Node n;
    n.feature = feature[i];
    n.threshold = threshold.at(i);
    n.left = left.at(i);
    n.right = right.at(i);
    n.value_offset = static_cast<int>(i) * t.payload_size_;
    t.nodes_.push_back(n);
  }
  return t;
}

bool operator==(const Tree& a, const Tree& b) {
  if (a.payload_size_ != b.payload_size_ || a.nodes_.size() != b.nodes_.size()) return false;
  for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
    const auto& x = a.nodes_[i];
    const auto& y = b.nodes_[i];
    if (x.feature != y.feature || x.threshold != y.threshold || x.left != y.left || x.right != y.right) return false;
    const auto px = a.payload(static_cast<int>(i));
    const auto py = b.payload(static_cast<int>(i));
    if (!std::equal(px.begin(), px.end(), py.begin())) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Presorted rows

SortedRows SortedRows::build(const Matrix& x, std::span<const std::uint32_t> rows) {
  SortedRows out;
  out.by_feature.resize(static_cast<std::size_t>(x.cols()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto& order = out.by_feature[static_cast<std::size_t>(f)];
    order.assign(rows.begin(), rows.end());
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = x(a, f);
      const double vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
  return out;
}

std::pair<SortedRows, SortedRows> SortedRows::partition(const Matrix& x, int feature,
                                                        double threshold) const {
  SortedRows left, right;
  left.by_feature.resize(by_feature.size());
  right.by_feature.resize(by_feature.size());
  for (std::size_t f = 0; f < by_feature.size(); ++f) {
    for (std::uint32_t r : by_feature[f]) {
      (x(r, feature) <= threshold ? left : right).by_feature[f].push_back(r);
    }
  }
  return {std::move(left), std::move(right)};
}

double split_threshold(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return mid < hi ? mid : lo;
}

// ---------------------------------------------------------------------------
// Gini trees

namespace {

class GiniGrower {
 public:
  GiniGrower(const Matrix& x, const Labels& y, int num_classes, const std::vector<std::uint32_t>& weights,
             const ForestTreeParams& params, std::uint64_t seed)
      : x_(x), y_(y), num_classes_(num_classes), weights_(weights), params_(params), rng_(seed),
        tree_(num_classes) {}

  Tree grow(SortedRows root) {
    const std::vector<double> empty(static_cast<std::size_t>(num_classes_), 0.0);
    const int node = tree_.add_leaf(empty);
    grow_node(node, std::move(root), 0);
    return std::move(tree_);
  }

 private:
  struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double score = 0.0;
  };

  void grow_node(int node, SortedRows rows, int depth) {
    std::vector<double> counts(static_cast<std::size_t>(num_classes_), 0.0);
    double total = 0.0;
    for (std::uint32_t r : rows.by_feature.front()) {
      counts[static_cast<std::size_t>(y_[r])] += weights_[r];
      total += weights_[r];
    }
    std::vector<double> dist = counts;
    for (auto& v : dist) v /= total;
    tree_.set_payload(node, dist);

    const bool pure = std::count_if(counts.begin(), counts.end(), [](double v) { return v > 0; }) <= 1;
    if (pure) return;
    if (params_.max_depth > 0 && depth >= params_.max_depth) return;
    if (total < 2.0 * params_.min_samples_leaf) return;

    double parent_score = 0.0;
    for (double c : counts) parent_score += c * c;
    parent_score /= total;

    Candidate best;
    best.score = parent_score + 1e-12 * total;
    for (int f : draw_features()) search(rows.by_feature[static_cast<std::size_t>(f)], f, total, best);
    if (best.feature < 0) return;

    auto [left_rows, right_rows] = rows.partition(x_, best.feature, best.threshold);
    rows = SortedRows{};
    const std::vector<double> empty(static_cast<std::size_t>(num_classes_), 0.0);
    const int left = tree_.add_leaf(empty);
    const int right = tree_.add_leaf(empty);
    tree_.make_split(node, best.feature, best.threshold, left, right);
    grow_node(left, std::move(left_rows), depth + 1);
    grow_node(right, std::move(right_rows), depth + 1);
  }

  std::vector<int> draw_features() {
    const auto d = static_cast<int>(x_.cols());
    std::vector<int> features(static_cast<std::size_t>(d));
    std::iota(features.begin(), features.end(), 0);
    const int m = params_.max_features;
    if (m <= 0 || m >= d) return features;
    for (int i = 0; i < m; ++i) {
      const auto j = i + static_cast<int>(rng_.below(static_cast<std::uint64_t>(d - i)));
      std::swap(features[static_cast<std::size_t>(i)], features[static_cast<std::size_t>(j)]);
    }
    features.resize(static_cast<std::size_t>(m));
    std::sort(features.begin(), features.end());
    return features;
  }

  // Maximizes sum_c L_c^2 / W_L + sum_c R_c^2 / W_R, which is equivalent to
  // minimizing the weighted Gini impurity of the children.
  void search(const std::vector<std::uint32_t>& order, int f, double total, Candidate& best) {
    std::vector<double> left(static_cast<std::size_t>(num_classes_), 0.0);
    std::vector<double> all(static_cast<std::size_t>(num_classes_), 0.0);
    for (std::uint32_t r : order) all[static_cast<std::size_t>(y_[r])] += weights_[r];
    double left_total = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const std::uint32_t r = order[k];
      left[static_cast<std::size_t>(y_[r])] += weights_[r];
      left_total += weights_[r];
      const double v = x_(r, f);
      const double next = x_(order[k + 1], f);
      if (!(v < next)) continue;
      const double right_total = total - left_total;
      if (left_total < params_.min_samples_leaf || right_total < params_.min_samples_leaf) continue;
      double sl = 0.0;
      double sr = 0.0;
      for (std::size_t c = 0; c < left.size(); ++c) {
        sl += left[c] * left[c];
        const double rc = all[c] - left[c];
        sr += rc * rc;
      }
      const double score = sl / left_total + sr / right_total;
      if (score > best.score) {
        best.score = score;
        best.feature = f;
        best.threshold = split_threshold(v, next);
      }
    }
  }

  const Matrix& x_;
  const Labels& y_;
  int num_classes_;
  const std::vector<std::uint32_t>& weights_;
  ForestTreeParams params_;
  Rng rng_;
  Tree tree_;
};

ForestTreeParams forest_tree_params(const Params& p) {
  ForestTreeParams out;
  out.max_depth = p.at("max_depth").get<int>();
  out.min_samples_leaf = p.at("min_samples_leaf").get<double>();
  out.max_features = p.at("max_features").get<int>();
  return out;
}

std::vector<std::uint32_t> rows_with_weight(const std::vector<std::uint32_t>& weights) {
  std::vector<std::uint32_t> rows;
  for (std::uint32_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0) rows.push_back(i);
  }
  return rows;
}

}  // namespace

Tree grow_gini_tree(const Matrix& x, const Labels& y, int num_classes,
                    const std::vector<std::uint32_t>& weights, const ForestTreeParams& params,
                    std::uint64_t seed) {
  const auto rows = rows_with_weight(weights);
  if (rows.empty()) throw Error(ErrorKind::kEmptyTrainingSet, "tree has no weighted rows");
  return GiniGrower(x, y, num_classes, weights, params, seed).grow(SortedRows::build(x, rows));
}

namespace {

// Restricts presorted rows to those with positive weight, keeping order.
SortedRows filter_rows(const SortedRows& all, const std::vector<std::uint32_t>& weights) {
  SortedRows out;
  out.by_feature.resize(all.by_feature.size());
  for (std::size_t f = 0; f < all.by_feature.size(); ++f) {
    for (std::uint32_t r : all.by_feature[f]) {
      if (weights[r] > 0) out.by_feature[f].push_back(r);
    }
  }
  return out;
}

Matrix average_leaf_distributions(const std::vector<Tree>& trees, const Matrix& x, int num_classes) {
  Matrix out = Matrix::Zero(x.rows(), num_classes);
  constexpr Eigen::Index kChunk = 256;
  const auto chunks = static_cast<std::size_t>((x.rows() + kChunk - 1) / kChunk);
  parallel_for(chunks, [&](std::size_t chunk) {
    const Eigen::Index begin = static_cast<Eigen::Index>(chunk) * kChunk;
    const Eigen::Index end = std::min(x.rows(), begin + kChunk);
    for (Eigen::Index i = begin; i < end; ++i) {
      const double* row = x.row(i).data();
      for (const auto& tree : trees) {
        const auto leaf = tree.leaf_value(row);
        for (int c = 0; c < num_classes; ++c) out(i, c) += leaf[static_cast<std::size_t>(c)];
      }
      out.row(i) /= static_cast<double>(trees.size());
    }
  });
  return out;
}

}  // namespace

DecisionTreeClassifier::DecisionTreeClassifier(int num_classes, int num_features, Params params, Tree tree)
    : Classifier(num_classes, num_features, std::move(params)), tree_(std::move(tree)) {}

std::unique_ptr<DecisionTreeClassifier> DecisionTreeClassifier::fit(const Matrix& x, const Labels& y,
                                                                    int num_classes, const Params& params,
                                                                    std::uint64_t seed) {
  const Params p = resolve_params(ModelKind::kRandomForest, params);
  check_training_data(x, y, num_classes);
  const std::vector<std::uint32_t> ones(y.size(), 1);
  Tree tree = grow_gini_tree(x, y, num_classes, ones, forest_tree_params(p), seed);
  return std::make_unique<DecisionTreeClassifier>(num_classes, static_cast<int>(x.cols()), p, std::move(tree));
}

Matrix DecisionTreeClassifier::predict_proba(const Matrix& x) const {
  check_input(x);
  Matrix out(x.rows(), num_classes());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto leaf = tree_.leaf_value(x.row(i).data());
    for (int c = 0; c < num_classes(); ++c) out(i, c) = leaf[static_cast<std::size_t>(c)];
  }
  return out;
}

nlohmann::json DecisionTreeClassifier::state_json() const {
  return {{"trees", nlohmann::json::array({tree_.to_json()})}};
}

RandomForest::RandomForest(int num_classes, int num_features, Params params, std::vector<Tree> trees)
    : Classifier(num_classes, num_features, std::move(params)), trees_(std::move(trees)) {}

std::unique_ptr<RandomForest> RandomForest::fit(const Matrix& x, const Labels& y, int num_classes,
                                                const Params& params, std::uint64_t seed) {
  const int n_trees = params.at("n_trees").get<int>();
  const bool bootstrap = params.at("bootstrap").get<bool>();
  const auto tree_params = forest_tree_params(params);
  const auto n = static_cast<std::uint32_t>(y.size());

  std::vector<std::uint32_t> all_rows(n);
  std::iota(all_rows.begin(), all_rows.end(), 0U);
  const SortedRows presorted = SortedRows::build(x, all_rows);

  std::vector<Tree> trees(static_cast<std::size_t>(n_trees));
  parallel_for(trees.size(), [&](std::size_t t) {
    const std::uint64_t tree_seed = derive_seed(seed, t);
    std::vector<std::uint32_t> weights(n, bootstrap ? 0U : 1U);
    if (bootstrap) {
      Rng rng(derive_seed(tree_seed, "bootstrap"));
      for (std::uint32_t k = 0; k < n; ++k) ++weights[rng.below(n)];
    }
    trees[t] = GiniGrower(x, y, num_classes, weights, tree_params, tree_seed)
                   .grow(bootstrap ? filter_rows(presorted, weights) : presorted);
  });
  return std::make_unique<RandomForest>(num_classes, static_cast<int>(x.cols()), params, std::move(trees));
}

std::unique_ptr<RandomForest> RandomForest::from_state(int num_classes, int num_features, Params params,
                                                       const nlohmann::json& state) {
  std::vector<Tree> trees;
  for (const auto& t : state.at("trees")) trees.push_back(Tree::from_json(t));
  return std::make_unique<RandomForest>(num_classes, num_features, std::move(params), std::move(trees));
}

Matrix RandomForest::predict_proba(const Matrix& x) const {
  check_input(x);
  return average_leaf_distributions(trees_, x, num_classes());
}

nlohmann::json RandomForest::state_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"trees", trees}};
}

}  // namespace occml::models
