#include "uxai/explain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "uxai/rng.hpp"

namespace uxai {

ScoreFn score_fn(const Classifier& model) {
  return [&model](std::span<const double> x) { return model.predict_proba(x); };
}

double coalition_value(const ScoreFn& f, const Matrix& background,
                       std::span<const double> x, std::uint64_t coalition,
                       int target_class) {
  if (background.rows() == 0) {
    throw std::invalid_argument("coalition_value: empty background");
  }
  if (background.cols() != x.size()) {
    throw std::invalid_argument("coalition_value: dimension mismatch");
  }
  std::vector<double> z(x.size());
  double sum = 0.0;
  for (std::size_t b = 0; b < background.rows(); ++b) {
    auto row = background.row(b);
    for (std::size_t q = 0; q < x.size(); ++q) {
      z[q] = (coalition >> q) & 1 ? x[q] : row[q];
    }
    sum += f(z)[target_class];
  }
  return sum / static_cast<double>(background.rows());
}

ImportanceVector shapley_exact(const ScoreFn& f, const Matrix& background,
                               std::span<const double> x, int target_class) {
  std::size_t q = x.size();
  if (q == 0 || q > 12) {
    throw std::invalid_argument(
        "shapley_exact: subset enumeration is limited to 1..12 features");
  }
  if (background.rows() == 0) {
    throw std::invalid_argument("shapley_exact: empty background");
  }

  std::size_t n_subsets = std::size_t{1} << q;
  std::vector<double> v(n_subsets, 0.0);
  std::vector<double> z(q);
  for (std::size_t b = 0; b < background.rows(); ++b) {
    auto row = background.row(b);
    for (std::size_t mask = 0; mask < n_subsets; ++mask) {
      for (std::size_t i = 0; i < q; ++i) {
        z[i] = (mask >> i) & 1 ? x[i] : row[i];
      }
      v[mask] += f(z)[target_class];
    }
  }
  for (double& val : v) val /= static_cast<double>(background.rows());

  // weight[s] = s! (q-1-s)! / q!  -- exact in double for q <= 12.
  std::vector<double> factorial(q + 1, 1.0);
  for (std::size_t i = 1; i <= q; ++i) {
    factorial[i] = factorial[i - 1] * static_cast<double>(i);
  }
  std::vector<double> weight(q);
  for (std::size_t s = 0; s < q; ++s) {
    weight[s] = factorial[s] * factorial[q - 1 - s] / factorial[q];
  }

  ImportanceVector out;
  out.target_class = target_class;
  out.estimator = ShapleyEstimator::exact;
  out.values.assign(q, 0.0);
  for (std::size_t mask = 0; mask < n_subsets; ++mask) {
    double w = weight[std::popcount(mask)];
    for (std::size_t i = 0; i < q; ++i) {
      if ((mask >> i) & 1) continue;
      out.values[i] += w * (v[mask | (std::size_t{1} << i)] - v[mask]);
    }
  }
  return out;
}

namespace {

class GenericHybridScorer final : public HybridScorer {
 public:
  GenericHybridScorer(ScoreFn f, const Matrix& background,
                      std::span<const double> x)
      : f_(std::move(f)),
        background_(background),
        x_(x.begin(), x.end()),
        z_(x.size()) {
    if (background.cols() != x.size()) {
      throw std::invalid_argument("hybrid scorer: dimension mismatch");
    }
  }

  std::size_t num_features() const override { return x_.size(); }
  std::size_t num_background() const override { return background_.rows(); }

  void reset(std::size_t b) override {
    auto row = background_.row(b);
    std::copy(row.begin(), row.end(), z_.begin());
  }
  void take_foreground(std::size_t q) override { z_[q] = x_[q]; }
  double score(int target_class) override { return f_(z_)[target_class]; }

 private:
  ScoreFn f_;
  const Matrix& background_;
  std::vector<double> x_;
  std::vector<double> z_;
};

// Keeps the squared distance from the hybrid to every training row and
// updates all of them in O(N) when one coordinate flips, instead of paying
// a full O(N*Q) re-evaluation per flip. The class-count vote over the k
// nearest then matches KnnModel::predict_proba exactly (same tie rule).
class KnnHybridScorer final : public HybridScorer {
 public:
  KnnHybridScorer(const KnnModel& model, const Matrix& background,
                  std::span<const double> x)
      : model_(model),
        background_(background),
        x_(x.begin(), x.end()) {
    const Matrix& train = model.train_features();
    if (background.cols() != x.size() || train.cols() != x.size()) {
      throw std::invalid_argument("hybrid scorer: dimension mismatch");
    }
    std::size_t n = train.rows(), q = train.cols();
    // Train features transposed, so one coordinate's column is contiguous.
    columns_ = Matrix(q, n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < q; ++c) columns_(c, r) = train(r, c);
    }
    // (x[q] - train[i][q])^2, reused on every foreground flip.
    fg_sq_ = Matrix(q, n);
    for (std::size_t c = 0; c < q; ++c) {
      for (std::size_t r = 0; r < n; ++r) {
        double d = x_[c] - columns_(c, r);
        fg_sq_(c, r) = d * d;
      }
    }
    // Distances from each background row to every training row.
    base_ = Matrix(background.rows(), n);
    for (std::size_t b = 0; b < background.rows(); ++b) {
      auto row = background.row(b);
      for (std::size_t r = 0; r < n; ++r) {
        base_(b, r) = squared_distance(row, train.row(r));
      }
    }
    current_.resize(n);
  }

  std::size_t num_features() const override { return x_.size(); }
  std::size_t num_background() const override { return background_.rows(); }

  void reset(std::size_t b) override {
    auto row = base_.row(b);
    std::copy(row.begin(), row.end(), current_.begin());
    bg_row_ = b;
  }

  void take_foreground(std::size_t q) override {
    double bg_val = background_(bg_row_, q);
    auto col = columns_.row(q);
    auto fg = fg_sq_.row(q);
    for (std::size_t r = 0; r < current_.size(); ++r) {
      double d = bg_val - col[r];
      current_[r] += fg[r] - d * d;
    }
  }

  double score(int target_class) override {
    // Same selection rule as k_nearest: max-heap on (distance, index).
    std::size_t k = model_.k();
    heap_.clear();
    for (std::size_t i = 0; i < current_.size(); ++i) {
      if (heap_.size() < k) {
        heap_.emplace_back(current_[i], i);
        std::push_heap(heap_.begin(), heap_.end());
      } else if (std::pair(current_[i], i) < heap_.front()) {
        std::pop_heap(heap_.begin(), heap_.end());
        heap_.back() = {current_[i], i};
        std::push_heap(heap_.begin(), heap_.end());
      }
    }
    const auto& labels = model_.train_labels();
    double hits = 0.0;
    for (auto [d2, i] : heap_) {
      if (labels[i] == target_class) hits += 1.0;
    }
    return hits / static_cast<double>(k);
  }

 private:
  const KnnModel& model_;
  const Matrix& background_;
  std::vector<double> x_;
  Matrix columns_;  // Q x N transposed training features
  Matrix fg_sq_;    // Q x N squared offsets to x
  Matrix base_;     // B x N squared distances background -> train
  std::vector<double> current_;
  std::vector<std::pair<double, std::size_t>> heap_;
  std::size_t bg_row_ = 0;
};

}  // namespace

std::unique_ptr<HybridScorer> make_generic_scorer(const ScoreFn& f,
                                                  const Matrix& background,
                                                  std::span<const double> x) {
  return std::make_unique<GenericHybridScorer>(f, background, x);
}

std::unique_ptr<HybridScorer> make_hybrid_scorer(const Classifier& model,
                                                 const Matrix& background,
                                                 std::span<const double> x) {
  if (auto* knn = dynamic_cast<const KnnModel*>(&model)) {
    return std::make_unique<KnnHybridScorer>(*knn, background, x);
  }
  return make_generic_scorer(score_fn(model), background, x);
}

ImportanceVector shapley_sampled(HybridScorer& scorer, int target_class,
                                 std::size_t n_permutations,
                                 std::uint64_t seed) {
  std::size_t q = scorer.num_features();
  std::size_t n_bg = scorer.num_background();
  if (n_permutations == 0) {
    throw std::invalid_argument("shapley_sampled: need at least 1 permutation");
  }
  if (q == 0 || n_bg == 0) {
    throw std::invalid_argument("shapley_sampled: empty problem");
  }

  Rng rng(seed);
  std::vector<std::size_t> perm(q);
  for (std::size_t i = 0; i < q; ++i) perm[i] = i;

  std::vector<double> sum(q, 0.0), sum_sq(q, 0.0), contrib(q);
  for (std::size_t p = 0; p < n_permutations; ++p) {
    rng.shuffle(perm);
    std::fill(contrib.begin(), contrib.end(), 0.0);
    for (std::size_t b = 0; b < n_bg; ++b) {
      scorer.reset(b);
      double prev = scorer.score(target_class);
      for (std::size_t i : perm) {
        scorer.take_foreground(i);
        double cur = scorer.score(target_class);
        contrib[i] += cur - prev;
        prev = cur;
      }
    }
    for (std::size_t i = 0; i < q; ++i) {
      contrib[i] /= static_cast<double>(n_bg);
      sum[i] += contrib[i];
      sum_sq[i] += contrib[i] * contrib[i];
    }
  }

  ImportanceVector out;
  out.target_class = target_class;
  out.estimator = ShapleyEstimator::permutation_sampled;
  out.n_permutations = n_permutations;
  out.values.assign(q, 0.0);
  out.estimator_variance.assign(q, 0.0);
  double np = static_cast<double>(n_permutations);
  for (std::size_t i = 0; i < q; ++i) {
    out.values[i] = sum[i] / np;
    if (n_permutations > 1) {
      double var =
          (sum_sq[i] - np * out.values[i] * out.values[i]) / (np - 1.0);
      out.estimator_variance[i] = std::max(0.0, var) / np;
    }
  }
  return out;
}

ImportanceVector shapley_sampled(const Classifier& model,
                                 const Matrix& background,
                                 std::span<const double> x, int target_class,
                                 std::size_t n_permutations,
                                 std::uint64_t seed) {
  auto scorer = make_hybrid_scorer(model, background, x);
  return shapley_sampled(*scorer, target_class, n_permutations, seed);
}

Counterfactual counterfactual_nn(const Dataset& train,
                                 std::span<const double> x,
                                 int predicted_label) {
  if (train.num_features() != x.size()) {
    throw std::invalid_argument("counterfactual_nn: dimension mismatch");
  }
  bool found = false;
  std::size_t best_row = 0;
  double best_d2 = 0.0;
  for (std::size_t r = 0; r < train.size(); ++r) {
    if (train.labels[r] == predicted_label) continue;
    double d2 = squared_distance(train.features.row(r), x);
    if (!found || d2 < best_d2) {
      found = true;
      best_d2 = d2;
      best_row = r;
    }
  }
  if (!found) {
    throw std::runtime_error(
        "counterfactual_nn: no training row with a different label");
  }
  auto row = train.features.row(best_row);
  Counterfactual cf;
  cf.instance.assign(row.begin(), row.end());
  cf.source_row = best_row;
  cf.label = train.labels[best_row];
  cf.distance = std::sqrt(best_d2);
  return cf;
}

}  // namespace uxai
