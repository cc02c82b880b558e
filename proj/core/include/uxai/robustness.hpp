#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "uxai/explain.hpp"
#include "uxai/rng.hpp"

namespace uxai {

// An explanation map phi : R^Q -> R^Q whose stability is being probed.
using Explainer = std::function<std::vector<double>(std::span<const double>)>;

// Raised when the explainer fails on a perturbed input; carries the
// offending point so the failure is reproducible.
class ExplainerError : public std::runtime_error {
 public:
  ExplainerError(const std::string& what, std::vector<double> at)
      : std::runtime_error(what), perturbation(std::move(at)) {}

  std::vector<double> perturbation;
};

// Uniform draw from the L2 ball of radius epsilon around center: Gaussian
// direction, radius epsilon * u^(1/Q). Coordinates are not clipped to any
// range. Redraws on the (measure-zero) event that the point equals the
// center exactly.
std::vector<double> sample_in_ball(Rng& rng, std::span<const double> center,
                                   double epsilon);

struct LipschitzEstimate {
  double value = 0.0;
  double epsilon = 0.0;
  std::size_t n_samples = 0;
  std::vector<double> worst_perturbation;  // argmax of the ratio
};

// Empirical local Lipschitz constant of the explainer at x: the largest
// observed ratio ||phi(x) - phi(x')|| / ||x - x'|| over n_samples draws
// from the epsilon-ball. Draws come from one sequential stream, so a larger
// sample with the same seed extends a smaller one and the estimate can only
// grow with n_samples.
LipschitzEstimate lipschitz_estimate(const Explainer& phi,
                                     std::span<const double> x,
                                     double epsilon, std::size_t n_samples,
                                     std::uint64_t seed);

// L2 distance between an instance and its counterfactual.
double cf_dissimilarity(std::span<const double> x, const Counterfactual& cf);

}  // namespace uxai
