#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace uxai {

// Mid-ranks (1-based; tied values share the average of the ranks they
// occupy).
std::vector<double> midranks(std::span<const double> values);

// Spearman rank correlation: Pearson correlation of the mid-ranks. Returns
// nullopt when either side has zero rank variance (all values tied), which
// leaves the coefficient undefined. Requires at least 3 pairs.
std::optional<double> spearman(std::span<const double> xs,
                               std::span<const double> ys);

// Two-sided p-value for the null of no association. With 10 or more pairs
// this is the t-approximation t = rho * sqrt((n-2)/(1-rho^2)); with 4..9
// pairs it is the exact permutation distribution over all n! rank orders.
// |rho| within 1e-12 of 1 short-circuits to 0 (a warning is logged, since
// perfect correlation usually means degenerate input).
double spearman_significance(double rho, std::size_t n_pairs);

struct CorrelationReport {
  std::optional<double> rho;         // headline coefficient
  std::optional<double> rho_pooled;  // only set by aggregate_runs
  double p_value = 1.0;
  bool significant = false;
  std::size_t n_pairs = 0;
  std::size_t n_runs = 1;
  double alpha = 0.05;
};

// Correlation plus significance at level alpha for one sample of pairs.
// An undefined coefficient yields rho = nullopt, p = 1, not significant.
CorrelationReport correlate(std::span<const double> xs,
                            std::span<const double> ys, double alpha = 0.05);

// Combines per-run reports: the headline rho is the mean of the defined
// per-run coefficients, and the p-value comes from the pooled pairs across
// all runs (their correlation is reported as rho_pooled). Throws if no run
// produced a defined coefficient.
CorrelationReport aggregate_runs(std::span<const CorrelationReport> runs,
                                 std::span<const double> pooled_xs,
                                 std::span<const double> pooled_ys);

// Fixed-width text table: header row, then rows, columns padded to the
// widest cell. Used for the human-readable result tables.
std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows);

// Formatting helpers shared by table and CSV writers.
std::string fmt_double(double v, int precision = 4);
std::string fmt_optional(const std::optional<double>& v, int precision = 4);

}  // namespace uxai
