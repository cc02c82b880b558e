#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "uxai/classifiers.hpp"
#include "uxai/dataset.hpp"
#include "uxai/matrix.hpp"

namespace uxai {

// Class-score function being attributed, f : R^Q -> R^C.
using ScoreFn = std::function<std::vector<double>(std::span<const double>)>;

ScoreFn score_fn(const Classifier& model);

enum class ShapleyEstimator { exact, permutation_sampled };

struct ImportanceVector {
  std::vector<double> values;  // one per feature
  int target_class = 0;
  ShapleyEstimator estimator = ShapleyEstimator::exact;
  std::size_t n_permutations = 0;         // sampled mode only
  std::vector<double> estimator_variance; // sampled mode: per-feature variance
                                          // of the estimate across permutations
};

// Value of a feature coalition (bitmask, bit q = feature q present): the
// model's target-class score averaged over hybrids that take present
// features from x and the rest from each background row.
double coalition_value(const ScoreFn& f, const Matrix& background,
                       std::span<const double> x, std::uint64_t coalition,
                       int target_class);

// Exact Shapley attribution by subset enumeration; limited to 12 features.
ImportanceVector shapley_exact(const ScoreFn& f, const Matrix& background,
                               std::span<const double> x, int target_class);

// Incremental evaluator for the permutation walk: a hybrid of x and one
// background row where coordinates flip one at a time. Implementations may
// exploit model structure; the generic one just re-evaluates f.
//
// After reset(b) the hybrid equals background row b; take_foreground(q)
// moves coordinate q to x. The permutation walk touches each coordinate
// once per reset.
class HybridScorer {
 public:
  virtual ~HybridScorer() = default;
  virtual std::size_t num_features() const = 0;
  virtual std::size_t num_background() const = 0;
  virtual void reset(std::size_t background_row) = 0;
  virtual void take_foreground(std::size_t q) = 0;
  virtual double score(int target_class) = 0;
};

// Picks the fastest available scorer for the model: k-NN models get an
// incremental squared-distance updater, anything else a re-evaluating
// fallback.
std::unique_ptr<HybridScorer> make_hybrid_scorer(const Classifier& model,
                                                 const Matrix& background,
                                                 std::span<const double> x);
std::unique_ptr<HybridScorer> make_generic_scorer(const ScoreFn& f,
                                                  const Matrix& background,
                                                  std::span<const double> x);

// Unbiased permutation-sampling estimate. Each permutation contributes one
// marginal-gain walk per background row; the estimate is the mean over
// permutations and the recorded variance is the variance of that mean.
ImportanceVector shapley_sampled(HybridScorer& scorer, int target_class,
                                 std::size_t n_permutations,
                                 std::uint64_t seed);
ImportanceVector shapley_sampled(const Classifier& model,
                                 const Matrix& background,
                                 std::span<const double> x, int target_class,
                                 std::size_t n_permutations,
                                 std::uint64_t seed);

struct Counterfactual {
  std::vector<double> instance;  // the nearest differently-labeled row
  std::size_t source_row = 0;    // its index in the training split
  int label = 0;                 // its class
  double distance = 0.0;         // L2 distance from the query
};

// Nearest training row whose label differs from predicted_label, by L2
// distance over the full split; ties go to the lowest row index. Throws
// when every training row shares the predicted label.
Counterfactual counterfactual_nn(const Dataset& train,
                                 std::span<const double> x,
                                 int predicted_label);

}  // namespace uxai
