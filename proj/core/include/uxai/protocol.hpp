#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "uxai/explain.hpp"
#include "uxai/uncertainty.hpp"

namespace uxai {

// A threshold given either directly or as a quantile of a calibration
// distribution. Exactly one of the two must be set.
struct ThresholdSpec {
  std::optional<double> absolute;
  std::optional<double> quantile;  // in [0, 1]

  static ThresholdSpec at(double value) { return {value, std::nullopt}; }
  static ThresholdSpec at_quantile(double q) { return {std::nullopt, q}; }
};

// Empirical quantile with linear interpolation between order statistics
// (the common "type 7" rule): index h = q * (n - 1) on the sorted sample.
double empirical_quantile(std::vector<double> values, double q);

struct RoutingPolicy {
  ThresholdSpec epistemic = ThresholdSpec::at_quantile(0.7);
  ThresholdSpec aleatoric = ThresholdSpec::at_quantile(0.5);

  // Filled by calibrate().
  std::optional<double> epistemic_threshold;
  std::optional<double> aleatoric_threshold;
  std::optional<Strategy> strategy;
  std::size_t calibration_size = 0;

  bool calibrated() const {
    return epistemic_threshold.has_value() && aleatoric_threshold.has_value();
  }
};

// Resolves quantile thresholds against a calibration set of uncertainty
// estimates (all from one strategy). Absolute thresholds pass through, but
// the calibration set still pins the strategy the policy applies to.
RoutingPolicy calibrate(RoutingPolicy policy,
                        std::span<const UncertaintyEstimate> calibration);

enum class Verdict {
  rejected_insufficient_training,
  counterfactual,
  feature_importance,
};

std::string_view to_string(Verdict v);

struct RejectionRecord {
  double epistemic = 0.0;
  double threshold = 0.0;
  std::string reason;
};

struct RoutedExplanation {
  Verdict verdict;
  UncertaintyEstimate uncertainty;
  std::variant<RejectionRecord, Counterfactual, ImportanceVector> payload;
};

// Explanation builders the router may call; whichever branch is not taken
// is never invoked (rejection invokes neither).
struct ExplanationBuilders {
  std::function<Counterfactual()> counterfactual;
  std::function<ImportanceVector()> feature_importance;
};

// The routing rule: epistemic >= threshold rejects (the model does not know
// this region well enough to explain); otherwise high aleatoric picks a
// counterfactual (the instance sits in class overlap, show what would flip
// it); otherwise feature importance. Requires a calibrated policy whose
// strategy matches the estimate's.
RoutedExplanation route(const RoutingPolicy& policy,
                        const UncertaintyEstimate& u,
                        const ExplanationBuilders& build);

// (threshold, fraction of estimates with epistemic >= threshold) pairs for
// n_thresholds equal steps spanning [min, max] of the sample. The fraction
// is nonincreasing in the threshold.
std::vector<std::pair<double, double>> rejection_curve(
    std::span<const UncertaintyEstimate> sample, std::size_t n_thresholds);

enum class UncertaintyKind { aleatoric, epistemic, total };

// Index of the largest value of the chosen component; ties go to the lowest
// index.
std::size_t most_uncertain(std::span<const UncertaintyEstimate> sample,
                           UncertaintyKind kind);

}  // namespace uxai
