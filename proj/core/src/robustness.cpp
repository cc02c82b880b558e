#include "uxai/robustness.hpp"

#include <cmath>

#include "uxai/matrix.hpp"

namespace uxai {

std::vector<double> sample_in_ball(Rng& rng, std::span<const double> center,
                                   double epsilon) {
  if (center.empty()) {
    throw std::invalid_argument("sample_in_ball: empty center");
  }
  if (epsilon <= 0.0) {
    throw std::invalid_argument("sample_in_ball: epsilon must be positive");
  }
  std::size_t q = center.size();
  std::vector<double> point(q);
  while (true) {
    double norm = 0.0;
    for (std::size_t i = 0; i < q; ++i) {
      point[i] = rng.normal();
      norm += point[i] * point[i];
    }
    norm = std::sqrt(norm);
    if (norm == 0.0) continue;  // all-zero direction, try again
    double radius = epsilon * std::pow(rng.uniform(), 1.0 / static_cast<double>(q));
    bool moved = false;
    for (std::size_t i = 0; i < q; ++i) {
      point[i] = center[i] + radius * point[i] / norm;
      moved |= point[i] != center[i];
    }
    if (moved) return point;
  }
}

LipschitzEstimate lipschitz_estimate(const Explainer& phi,
                                     std::span<const double> x,
                                     double epsilon, std::size_t n_samples,
                                     std::uint64_t seed) {
  if (n_samples == 0) {
    throw std::invalid_argument("lipschitz_estimate: n_samples must be positive");
  }
  auto eval = [&phi](std::span<const double> p) {
    try {
      return phi(p);
    } catch (const ExplainerError&) {
      throw;
    } catch (const std::exception& e) {
      throw ExplainerError(std::string("explainer failed: ") + e.what(),
                           {p.begin(), p.end()});
    }
  };

  std::vector<double> at_x = eval(x);
  Rng rng(seed);
  LipschitzEstimate est;
  est.epsilon = epsilon;
  est.n_samples = n_samples;
  for (std::size_t s = 0; s < n_samples; ++s) {
    auto p = sample_in_ball(rng, x, epsilon);
    auto at_p = eval(p);
    if (at_p.size() != at_x.size()) {
      throw ExplainerError("explainer changed output dimension", p);
    }
    double num = euclidean_distance(at_x, at_p);
    double den = euclidean_distance(x, p);
    double ratio = num / den;  // den > 0: the sampler never returns x itself
    if (ratio > est.value) {
      est.value = ratio;
      est.worst_perturbation = std::move(p);
    }
  }
  return est;
}

double cf_dissimilarity(std::span<const double> x, const Counterfactual& cf) {
  return euclidean_distance(x, cf.instance);
}

}  // namespace uxai
