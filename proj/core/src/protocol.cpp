#include "uxai/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uxai {

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) {
    throw std::invalid_argument("empirical_quantile: empty sample");
  }
  if (q < 0.0 || q > 1.0) {
    throw std::invalid_argument("empirical_quantile: q must be in [0, 1]");
  }
  std::sort(values.begin(), values.end());
  double h = q * static_cast<double>(values.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(h));
  auto hi = static_cast<std::size_t>(std::ceil(h));
  double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

namespace {

double resolve(const ThresholdSpec& spec, const std::vector<double>& sample,
               const char* which) {
  if (spec.absolute.has_value() == spec.quantile.has_value()) {
    throw std::invalid_argument(
        std::string("calibrate: ") + which +
        " threshold needs exactly one of absolute or quantile");
  }
  if (spec.absolute) return *spec.absolute;
  return empirical_quantile(sample, *spec.quantile);
}

}  // namespace

RoutingPolicy calibrate(RoutingPolicy policy,
                        std::span<const UncertaintyEstimate> calibration) {
  if (calibration.empty()) {
    throw std::invalid_argument("calibrate: empty calibration set");
  }
  Strategy s = calibration[0].strategy;
  std::vector<double> eu, au;
  eu.reserve(calibration.size());
  au.reserve(calibration.size());
  for (const auto& u : calibration) {
    if (u.strategy != s) {
      throw std::invalid_argument(
          "calibrate: calibration set mixes strategies");
    }
    eu.push_back(u.epistemic);
    au.push_back(u.aleatoric);
  }
  policy.epistemic_threshold = resolve(policy.epistemic, eu, "epistemic");
  policy.aleatoric_threshold = resolve(policy.aleatoric, au, "aleatoric");
  policy.strategy = s;
  policy.calibration_size = calibration.size();
  return policy;
}

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::rejected_insufficient_training: return "rejected";
    case Verdict::counterfactual: return "counterfactual";
    case Verdict::feature_importance: return "feature_importance";
  }
  return "?";
}

RoutedExplanation route(const RoutingPolicy& policy,
                        const UncertaintyEstimate& u,
                        const ExplanationBuilders& build) {
  if (!policy.calibrated()) {
    throw std::invalid_argument("route: policy is not calibrated");
  }
  if (policy.strategy && *policy.strategy != u.strategy) {
    throw std::invalid_argument(
        "route: estimate strategy does not match the calibrated policy");
  }
  RoutedExplanation out;
  out.uncertainty = u;
  if (u.epistemic >= *policy.epistemic_threshold) {
    out.verdict = Verdict::rejected_insufficient_training;
    out.payload = RejectionRecord{
        u.epistemic, *policy.epistemic_threshold,
        "epistemic uncertainty at or above threshold: the model lacks "
        "training support here"};
    return out;
  }
  if (u.aleatoric >= *policy.aleatoric_threshold) {
    if (!build.counterfactual) {
      throw std::invalid_argument("route: no counterfactual builder");
    }
    out.verdict = Verdict::counterfactual;
    out.payload = build.counterfactual();
    return out;
  }
  if (!build.feature_importance) {
    throw std::invalid_argument("route: no feature importance builder");
  }
  out.verdict = Verdict::feature_importance;
  out.payload = build.feature_importance();
  return out;
}

std::vector<std::pair<double, double>> rejection_curve(
    std::span<const UncertaintyEstimate> sample, std::size_t n_thresholds) {
  if (sample.empty()) {
    throw std::invalid_argument("rejection_curve: empty sample");
  }
  if (n_thresholds < 2) {
    throw std::invalid_argument("rejection_curve: need at least 2 thresholds");
  }
  std::vector<double> eu(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) eu[i] = sample[i].epistemic;
  auto [lo_it, hi_it] = std::minmax_element(eu.begin(), eu.end());
  double lo = *lo_it, hi = *hi_it;

  std::vector<std::pair<double, double>> curve;
  curve.reserve(n_thresholds);
  for (std::size_t i = 0; i < n_thresholds; ++i) {
    double t = lo + (hi - lo) * static_cast<double>(i) /
                        static_cast<double>(n_thresholds - 1);
    auto rejected = std::count_if(eu.begin(), eu.end(),
                                  [t](double e) { return e >= t; });
    curve.emplace_back(
        t, static_cast<double>(rejected) / static_cast<double>(eu.size()));
  }
  return curve;
}

std::size_t most_uncertain(std::span<const UncertaintyEstimate> sample,
                           UncertaintyKind kind) {
  if (sample.empty()) {
    throw std::invalid_argument("most_uncertain: empty sample");
  }
  auto component = [kind](const UncertaintyEstimate& u) {
    switch (kind) {
      case UncertaintyKind::aleatoric: return u.aleatoric;
      case UncertaintyKind::epistemic: return u.epistemic;
      case UncertaintyKind::total: return u.total;
    }
    return u.total;
  };
  std::size_t best = 0;
  for (std::size_t i = 1; i < sample.size(); ++i) {
    if (component(sample[i]) > component(sample[best])) best = i;
  }
  return best;
}

}  // namespace uxai
