#include "uxai/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace uxai {

std::vector<double> midranks(std::span<const double> values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    // Positions i..j (0-based) share the average of ranks i+1..j+1.
    double shared = static_cast<double>(i + j) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson_or_nan(std::span<const double> xs, std::span<const double> ys) {
  std::size_t n = xs.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nan("");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

std::optional<double> spearman(std::span<const double> xs,
                               std::span<const double> ys) {
  if (xs.size() != ys.size()) {
    throw std::invalid_argument("spearman: length mismatch");
  }
  if (xs.size() < 3) {
    throw std::invalid_argument("spearman: need at least 3 pairs");
  }
  auto rx = midranks(xs);
  auto ry = midranks(ys);
  double r = pearson_or_nan(rx, ry);
  if (std::isnan(r)) return std::nullopt;
  // Rounding can push |r| infinitesimally past 1.
  return std::clamp(r, -1.0, 1.0);
}

double spearman_significance(double rho, std::size_t n_pairs) {
  if (n_pairs < 4) {
    throw std::invalid_argument(
        "spearman_significance: need at least 4 pairs");
  }
  if (std::abs(rho) > 1.0 + 1e-12) {
    throw std::invalid_argument("spearman_significance: |rho| > 1");
  }
  if (std::abs(rho) >= 1.0 - 1e-12) {
    std::clog << "spearman_significance: |rho| = 1, p-value 0 by convention "
                 "(degenerate input?)\n";
    return 0.0;
  }

  if (n_pairs >= 10) {
    double n = static_cast<double>(n_pairs);
    double t = rho * std::sqrt((n - 2.0) / (1.0 - rho * rho));
    boost::math::students_t dist(n - 2.0);
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  }

  // Small samples: exact two-sided permutation test over all n! orderings
  // of tie-free ranks.
  std::size_t n = n_pairs;
  std::vector<double> perm(n);
  std::iota(perm.begin(), perm.end(), 1.0);
  double denom = static_cast<double>(n) *
                 (static_cast<double>(n) * static_cast<double>(n) - 1.0);
  std::size_t hits = 0, total = 0;
  do {
    double d2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double d = perm[i] - static_cast<double>(i + 1);
      d2 += d * d;
    }
    double r = 1.0 - 6.0 * d2 / denom;
    if (std::abs(r) >= std::abs(rho) - 1e-12) ++hits;
    ++total;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

CorrelationReport correlate(std::span<const double> xs,
                            std::span<const double> ys, double alpha) {
  CorrelationReport r;
  r.n_pairs = xs.size();
  r.alpha = alpha;
  r.rho = spearman(xs, ys);
  if (!r.rho || xs.size() < 4) {
    r.p_value = 1.0;
    r.significant = false;
    return r;
  }
  r.p_value = spearman_significance(*r.rho, xs.size());
  r.significant = r.p_value < alpha;
  return r;
}

CorrelationReport aggregate_runs(std::span<const CorrelationReport> runs,
                                 std::span<const double> pooled_xs,
                                 std::span<const double> pooled_ys) {
  if (runs.empty()) {
    throw std::invalid_argument("aggregate_runs: no runs");
  }
  double sum = 0.0;
  std::size_t defined = 0;
  for (const auto& r : runs) {
    if (r.rho) {
      sum += *r.rho;
      ++defined;
    }
  }
  if (defined == 0) {
    throw std::runtime_error(
        "aggregate_runs: no run produced a defined coefficient");
  }
  CorrelationReport pooled =
      correlate(pooled_xs, pooled_ys, runs[0].alpha);
  CorrelationReport out;
  out.rho = sum / static_cast<double>(defined);
  out.rho_pooled = pooled.rho;
  out.p_value = pooled.p_value;
  out.significant = pooled.significant;
  out.n_pairs = pooled_xs.size();
  out.n_runs = runs.size();
  out.alpha = runs[0].alpha;
  return out;
}

std::string format_table(const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw std::invalid_argument("format_table: ragged rows");
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  auto emit = [&](const std::vector<std::string>& row, std::string& out) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) out += "  ";
      // First column left-aligned (names), the rest right-aligned (numbers).
      if (c == 0) {
        out += row[c];
        out += std::string(width[c] - row[c].size(), ' ');
      } else {
        out += std::string(width[c] - row[c].size(), ' ');
        out += row[c];
      }
    }
    out += '\n';
  };
  std::string out;
  emit(header, out);
  std::size_t total = 0;
  for (std::size_t c = 0; c < width.size(); ++c) total += width[c];
  out += std::string(total + 2 * (width.size() - 1), '-');
  out += '\n';
  for (const auto& row : rows) emit(row, out);
  return out;
}

std::string fmt_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string fmt_optional(const std::optional<double>& v, int precision) {
  return v ? fmt_double(*v, precision) : "undefined";
}

}  // namespace uxai
