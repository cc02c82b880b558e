#include "uxai/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uxai/rng.hpp"

namespace uxai {

int argmax_class(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("argmax_class: empty scores");
  return static_cast<int>(
      std::max_element(scores.begin(), scores.end()) - scores.begin());
}

int Classifier::predict(std::span<const double> x) const {
  auto p = predict_proba(x);
  return argmax_class(p);
}

KnnModel KnnModel::fit(const Dataset& train, std::size_t k) {
  if (k == 0 || k > train.size()) {
    throw std::invalid_argument("KnnModel: k must be in [1, training size]");
  }
  KnnModel m;
  m.features_ = train.features;
  m.labels_ = train.labels;
  m.k_ = k;
  m.num_classes_ = train.num_classes();
  return m;
}

std::vector<double> KnnModel::predict_proba(std::span<const double> x) const {
  auto nn = neighbors(x);
  std::vector<double> p(num_classes_, 0.0);
  for (auto [idx, d2] : nn) p[labels_[idx]] += 1.0;
  for (double& v : p) v /= static_cast<double>(k_);
  return p;
}

namespace {

double gini(const std::vector<double>& counts, double total) {
  double g = 1.0;
  for (double c : counts) {
    double f = c / total;
    g -= f * f;
  }
  return g;
}

struct TreeBuilder {
  const Matrix& x;
  const std::vector<int>& y;
  std::size_t num_classes;
  std::size_t max_depth;
  std::size_t features_per_split;
  Rng rng;
  std::vector<DecisionTree::Node> nodes;

  int build(std::vector<std::size_t> rows, std::size_t depth) {
    std::vector<double> counts(num_classes, 0.0);
    for (auto r : rows) counts[y[r]] += 1.0;
    double total = static_cast<double>(rows.size());

    int node_id = static_cast<int>(nodes.size());
    nodes.emplace_back();

    bool pure = std::count_if(counts.begin(), counts.end(),
                              [](double c) { return c > 0.0; }) <= 1;
    if (depth >= max_depth || pure || rows.size() < 2) {
      make_leaf(node_id, counts, total);
      return node_id;
    }

    auto candidates =
        rng.sample_without_replacement(features_per_split, x.cols());
    // Candidate order decides ties (strictly better gain is required to
    // displace the incumbent), so fix it: ascending feature index, and
    // thresholds are swept ascending below.
    std::sort(candidates.begin(), candidates.end());

    double parent = gini(counts, total);
    double best_gain = 0.0;
    int best_feature = -1;
    double best_threshold = 0.0;

    std::vector<std::pair<double, int>> sorted(rows.size());
    std::vector<double> left(num_classes);
    for (auto f : candidates) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        sorted[i] = {x(rows[i], f), y[rows[i]]};
      }
      std::sort(sorted.begin(), sorted.end());
      std::fill(left.begin(), left.end(), 0.0);
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        left[sorted[i].second] += 1.0;
        if (sorted[i + 1].first <= sorted[i].first) continue;
        double nl = static_cast<double>(i + 1);
        double nr = total - nl;
        std::vector<double> right(num_classes);
        for (std::size_t c = 0; c < num_classes; ++c) {
          right[c] = counts[c] - left[c];
        }
        double gain =
            parent - (nl * gini(left, nl) + nr * gini(right, nr)) / total;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          best_threshold = (sorted[i].first + sorted[i + 1].first) / 2.0;
        }
      }
    }

    if (best_feature < 0) {
      make_leaf(node_id, counts, total);
      return node_id;
    }

    std::vector<std::size_t> left_rows, right_rows;
    for (auto r : rows) {
      (x(r, best_feature) <= best_threshold ? left_rows : right_rows)
          .push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();

    nodes[node_id].feature = best_feature;
    nodes[node_id].threshold = best_threshold;
    int l = build(std::move(left_rows), depth + 1);
    int r = build(std::move(right_rows), depth + 1);
    nodes[node_id].left = l;
    nodes[node_id].right = r;
    return node_id;
  }

  void make_leaf(int node_id, const std::vector<double>& counts,
                 double total) {
    auto& n = nodes[node_id];
    n.feature = -1;
    n.distribution.resize(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) {
      n.distribution[c] = counts[c] / total;
    }
  }
};

}  // namespace

DecisionTree DecisionTree::grow(const Matrix& x, const std::vector<int>& y,
                                const std::vector<std::size_t>& rows,
                                std::size_t num_classes, std::size_t max_depth,
                                std::size_t features_per_split,
                                std::uint64_t seed) {
  if (rows.empty()) throw std::invalid_argument("DecisionTree: no rows");
  TreeBuilder b{x,         y,
                num_classes, max_depth,
                std::clamp<std::size_t>(features_per_split, 1, x.cols()),
                Rng(seed), {}};
  b.build(rows, 0);
  DecisionTree t;
  t.nodes_ = std::move(b.nodes);
  return t;
}

std::span<const double> DecisionTree::leaf_distribution(
    std::span<const double> x) const {
  int i = 0;
  while (nodes_[i].feature >= 0) {
    const auto& n = nodes_[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return nodes_[i].distribution;
}

TreeEnsemble TreeEnsemble::fit(const Dataset& train, std::size_t n_trees,
                               std::size_t max_depth, std::uint64_t seed) {
  if (n_trees == 0) throw std::invalid_argument("TreeEnsemble: no trees");
  if (train.size() == 0) throw std::invalid_argument("TreeEnsemble: empty data");

  TreeEnsemble e;
  e.num_classes_ = train.num_classes();
  e.num_features_ = train.num_features();
  e.max_depth_ = max_depth;
  std::size_t features_per_split = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(train.num_features()))));

  std::size_t n = train.size();
  for (std::size_t t = 0; t < n_trees; ++t) {
    std::uint64_t tree_seed = mix_seed(seed, t);
    Rng boot(mix_seed(tree_seed, 1));
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) r = static_cast<std::size_t>(boot.below(n));
    e.trees_.push_back(DecisionTree::grow(train.features, train.labels, rows,
                                          e.num_classes_, max_depth,
                                          features_per_split,
                                          mix_seed(tree_seed, 2)));
    e.tree_seeds_.push_back(tree_seed);
  }
  return e;
}

std::vector<double> TreeEnsemble::predict_proba(
    std::span<const double> x) const {
  std::vector<double> mean(num_classes_, 0.0);
  for (const auto& t : trees_) {
    auto d = t.leaf_distribution(x);
    for (std::size_t c = 0; c < num_classes_; ++c) mean[c] += d[c];
  }
  for (double& v : mean) v /= static_cast<double>(trees_.size());
  return mean;
}

std::vector<std::vector<double>> TreeEnsemble::member_distributions(
    std::span<const double> x) const {
  std::vector<std::vector<double>> out;
  out.reserve(trees_.size());
  for (const auto& t : trees_) {
    auto d = t.leaf_distribution(x);
    out.emplace_back(d.begin(), d.end());
  }
  return out;
}

TreeEnsemble TreeEnsemble::from_parts(std::vector<DecisionTree> trees,
                                      std::vector<std::uint64_t> seeds,
                                      std::size_t num_classes,
                                      std::size_t num_features,
                                      std::size_t max_depth) {
  if (trees.empty() || trees.size() != seeds.size()) {
    throw std::invalid_argument("TreeEnsemble::from_parts: bad shapes");
  }
  TreeEnsemble e;
  e.trees_ = std::move(trees);
  e.tree_seeds_ = std::move(seeds);
  e.num_classes_ = num_classes;
  e.num_features_ = num_features;
  e.max_depth_ = max_depth;
  return e;
}

}  // namespace uxai
