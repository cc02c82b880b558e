#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "uxai/dataset.hpp"
#include "uxai/matrix.hpp"

namespace uxai {

// Common face of the models we explain: a class-score vector f(x) and the
// argmax decision h(x).
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual std::size_t num_classes() const = 0;
  virtual std::size_t num_features() const = 0;
  virtual std::vector<double> predict_proba(std::span<const double> x) const = 0;

  // Argmax of predict_proba; ties resolve to the lowest class index.
  int predict(std::span<const double> x) const;
};

int argmax_class(std::span<const double> scores);

class KnnModel final : public Classifier {
 public:
  static KnnModel fit(const Dataset& train, std::size_t k);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t num_features() const override { return features_.cols(); }

  // Class frequencies among the k nearest training rows (L2 distance, ties
  // on distance resolved toward lower row indices).
  std::vector<double> predict_proba(std::span<const double> x) const override;

  std::vector<std::pair<std::size_t, double>> neighbors(
      std::span<const double> x) const {
    return k_nearest(features_, x, k_);
  }

  std::size_t k() const { return k_; }
  const Matrix& train_features() const { return features_; }
  const std::vector<int>& train_labels() const { return labels_; }

 private:
  Matrix features_;
  std::vector<int> labels_;
  std::size_t k_ = 0;
  std::size_t num_classes_ = 0;
};

// One CART-style tree, grown greedily on Gini impurity. Stored as a flat
// node array; leaves carry raw class frequencies of the rows that reached
// them.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::vector<double> distribution;  // filled for leaves
  };

  static DecisionTree grow(const Matrix& x, const std::vector<int>& y,
                           const std::vector<std::size_t>& rows,
                           std::size_t num_classes, std::size_t max_depth,
                           std::size_t features_per_split, std::uint64_t seed);

  std::span<const double> leaf_distribution(std::span<const double> x) const;

  const std::vector<Node>& nodes() const { return nodes_; }
  std::vector<Node>& nodes() { return nodes_; }

 private:
  std::vector<Node> nodes_;
};

// Bagged ensemble of depth-capped trees with per-split feature subsampling.
// Every tree records the seed it was grown from, so refitting a single
// member reproduces it regardless of scheduling.
class TreeEnsemble final : public Classifier {
 public:
  static TreeEnsemble fit(const Dataset& train, std::size_t n_trees,
                          std::size_t max_depth, std::uint64_t seed);

  std::size_t num_classes() const override { return num_classes_; }
  std::size_t num_features() const override { return num_features_; }
  std::vector<double> predict_proba(std::span<const double> x) const override;

  // One distribution per member tree, in member order.
  std::vector<std::vector<double>> member_distributions(
      std::span<const double> x) const;

  std::size_t size() const { return trees_.size(); }
  std::size_t max_depth() const { return max_depth_; }
  const std::vector<std::uint64_t>& tree_seeds() const { return tree_seeds_; }
  const std::vector<DecisionTree>& trees() const { return trees_; }

  // Used by deserialization.
  static TreeEnsemble from_parts(std::vector<DecisionTree> trees,
                                 std::vector<std::uint64_t> seeds,
                                 std::size_t num_classes,
                                 std::size_t num_features,
                                 std::size_t max_depth);

 private:
  std::vector<DecisionTree> trees_;
  std::vector<std::uint64_t> tree_seeds_;
  std::size_t num_classes_ = 0;
  std::size_t num_features_ = 0;
  std::size_t max_depth_ = 0;
};

}  // namespace uxai
