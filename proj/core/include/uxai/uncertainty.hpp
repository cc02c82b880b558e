#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "uxai/classifiers.hpp"
#include "uxai/dataset.hpp"
#include "uxai/evidence.hpp"
#include "uxai/matrix.hpp"

namespace uxai {

enum class Strategy { ensemble_entropy, centroid_rbf, belief };

std::string_view to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view name);

// A name that is reserved in configs but has no implementation behind it
// (e.g. the likelihood-based strategy slot).
class StrategyUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct UncertaintyEstimate {
  double aleatoric = 0.0;
  double epistemic = 0.0;
  double total = 0.0;
  Strategy strategy = Strategy::belief;
};

// Shannon entropy in bits; 0*log(0) terms contribute nothing. Validates
// that p is a distribution (nonnegative, sums to 1 within 1e-9).
double shannon_entropy_bits(std::span<const double> p);

// Ensemble decomposition: aleatoric is the mean member entropy, total the
// entropy of the mean distribution, epistemic the gap between them (clamped
// at zero against rounding).
UncertaintyEstimate entropy_decompose(
    const std::vector<std::vector<double>>& member_distributions);

enum class CentroidAleatoric {
  softmax_entropy,        // entropy of softmax over the class supports
  total_minus_epistemic,  // entropy of that softmax minus the epistemic part
};

// Class-centroid RBF supports: U_c = exp(-(d_c^2 / Q) / (2 sigma^2)) where
// d_c is the distance to the centroid of class c and Q normalizes for
// dimensionality. Epistemic uncertainty is the reciprocal of the best
// support; aleatoric comes from the softmax over supports.
struct CentroidModel {
  Matrix centroids;  // C x Q
  double sigma = 1.0;
  CentroidAleatoric aleatoric = CentroidAleatoric::softmax_entropy;
};

CentroidModel centroid_fit(const Dataset& train, double sigma = 1.0,
                           CentroidAleatoric aleatoric =
                               CentroidAleatoric::softmax_entropy);
std::vector<double> centroid_supports(const CentroidModel& m,
                                      std::span<const double> x);
UncertaintyEstimate centroid_uncertainty(const CentroidModel& m,
                                         std::span<const double> x);

// Belief decomposition: epistemic = nonspecificity, aleatoric = discord,
// total = their sum.
UncertaintyEstimate belief_uncertainty(const MassFunction& m);

// Strategy-agnostic handle used by the routing and experiment layers.
class UncertaintyQuantifier {
 public:
  virtual ~UncertaintyQuantifier() = default;
  virtual Strategy strategy() const = 0;
  virtual UncertaintyEstimate evaluate(std::span<const double> x) const = 0;
};

struct QuantifierParams {
  std::size_t eknn_k = 7;
  double eknn_alpha = 0.95;
  std::size_t ensemble_trees = 100;
  std::size_t ensemble_depth = 4;
  std::uint64_t ensemble_seed = 0;
  double centroid_sigma = 1.0;
  CentroidAleatoric centroid_aleatoric = CentroidAleatoric::softmax_entropy;
};

std::unique_ptr<UncertaintyQuantifier> fit_quantifier(
    Strategy s, const Dataset& train, const QuantifierParams& params);

// Name-based variant for config plumbing: recognizes the reserved name
// "likelihood" and reports it as unavailable rather than unknown.
std::unique_ptr<UncertaintyQuantifier> fit_quantifier(
    std::string_view name, const Dataset& train,
    const QuantifierParams& params);

}  // namespace uxai
