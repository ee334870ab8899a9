#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "occml/models/classifier.hpp"

namespace occml::models {

// Binary tree in a flat array. Internal nodes send x[feature] <= threshold to
// the left child; leaves hold `payload_size` values starting at value_offset.
class Tree {
 public:
  struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int value_offset = 0;

    bool is_leaf() const { return feature < 0; }
  };

  explicit Tree(int payload_size = 1) : payload_size_(payload_size) {}

  int add_leaf(std::span<const double> payload);
  // Turns leaf `node` into a split and returns the indices of two new leaves.
  void make_split(int node, int feature, double threshold, int left, int right);

  int leaf_index(const double* row) const;
  std::span<const double> leaf_value(const double* row) const;
  std::span<const double> payload(int node) const;

  int size() const { return static_cast<int>(nodes_.size()); }
  int num_leaves() const;
  int depth() const;
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int payload_size() const { return payload_size_; }
  void set_payload(int node, std::span<const double> payload);

  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);

  friend bool operator==(const Tree& a, const Tree& b);

 private:
  int payload_size_;
  std::vector<Node> nodes_;
  std::vector<double> values_;
};

// Per-feature row orders for the samples reaching one node; children inherit
// stable partitions, so a split scan never re-sorts.
struct SortedRows {
  std::vector<std::vector<std::uint32_t>> by_feature;

  static SortedRows build(const Matrix& x, std::span<const std::uint32_t> rows);
  std::size_t size() const { return by_feature.empty() ? 0 : by_feature.front().size(); }
  std::pair<SortedRows, SortedRows> partition(const Matrix& x, int feature, double threshold) const;
};

// Midpoint of two consecutive distinct values, kept strictly below `hi` so
// that `hi` routes right.
double split_threshold(double lo, double hi);

struct ForestTreeParams {
  int max_depth = 0;         // 0: unlimited
  double min_samples_leaf = 1;
  int max_features = 0;      // 0: all
};

// Gini tree on integer sample weights (bootstrap multiplicities; 0 drops a
// row). Leaves store the weighted class distribution.
Tree grow_gini_tree(const Matrix& x, const Labels& y, int num_classes,
                    const std::vector<std::uint32_t>& weights, const ForestTreeParams& params,
                    std::uint64_t seed);

class DecisionTreeClassifier final : public Classifier {
 public:
  DecisionTreeClassifier(int num_classes, int num_features, Params params, Tree tree);

  // Accepts the forest's tree parameters; every row has weight one.
  static std::unique_ptr<DecisionTreeClassifier> fit(const Matrix& x, const Labels& y, int num_classes,
                                                     const Params& params, std::uint64_t seed);

  // Not a tunable kind; reported as a one-tree forest.
  ModelKind kind() const override { return ModelKind::kRandomForest; }
  Matrix predict_proba(const Matrix& x) const override;
  const Tree& tree() const { return tree_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  Tree tree_;
};

class RandomForest final : public Classifier {
 public:
  RandomForest(int num_classes, int num_features, Params params, std::vector<Tree> trees);

  static std::unique_ptr<RandomForest> fit(const Matrix& x, const Labels& y, int num_classes,
                                           const Params& params, std::uint64_t seed);
  static std::unique_ptr<RandomForest> from_state(int num_classes, int num_features, Params params,
                                                  const nlohmann::json& state);

  ModelKind kind() const override { return ModelKind::kRandomForest; }
  Matrix predict_proba(const Matrix& x) const override;
  const std::vector<Tree>& trees() const { return trees_; }

 protected:
  nlohmann::json state_json() const override;

 private:
  std::vector<Tree> trees_;
};

}  // namespace occml::models
