#include "uxai/uncertainty.hpp"

#include <algorithm>
#include <cmath>

namespace uxai {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::ensemble_entropy: return "ensemble";
    case Strategy::centroid_rbf: return "centroid";
    case Strategy::belief: return "belief";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view name) {
  if (name == "ensemble") return Strategy::ensemble_entropy;
  if (name == "centroid") return Strategy::centroid_rbf;
  if (name == "belief") return Strategy::belief;
  return std::nullopt;
}

double shannon_entropy_bits(std::span<const double> p) {
  double total = 0.0, h = 0.0;
  for (double v : p) {
    if (v < -1e-12) {
      throw std::invalid_argument("shannon_entropy_bits: negative probability");
    }
    total += v;
    if (v > 0.0) h -= v * std::log2(v);
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument(
        "shannon_entropy_bits: probabilities sum to " + std::to_string(total));
  }
  return h;
}

UncertaintyEstimate entropy_decompose(
    const std::vector<std::vector<double>>& member_distributions) {
  if (member_distributions.empty()) {
    throw std::invalid_argument("entropy_decompose: no ensemble members");
  }
  std::size_t c = member_distributions[0].size();
  std::vector<double> mean(c, 0.0);
  double aleatoric = 0.0;
  for (const auto& p : member_distributions) {
    if (p.size() != c) {
      throw std::invalid_argument("entropy_decompose: member sizes differ");
    }
    aleatoric += shannon_entropy_bits(p);
    for (std::size_t i = 0; i < c; ++i) mean[i] += p[i];
  }
  double k = static_cast<double>(member_distributions.size());
  aleatoric /= k;
  for (double& v : mean) v /= k;

  UncertaintyEstimate u;
  u.strategy = Strategy::ensemble_entropy;
  u.total = shannon_entropy_bits(mean);
  u.aleatoric = aleatoric;
  // Jensen's inequality makes the gap nonnegative up to rounding.
  u.epistemic = std::max(0.0, u.total - u.aleatoric);
  return u;
}

CentroidModel centroid_fit(const Dataset& train, double sigma,
                           CentroidAleatoric aleatoric) {
  if (sigma <= 0.0) throw std::invalid_argument("centroid_fit: sigma <= 0");
  std::size_t c = train.num_classes(), q = train.num_features();
  CentroidModel m;
  m.sigma = sigma;
  m.aleatoric = aleatoric;
  m.centroids = Matrix(c, q);
  std::vector<double> counts(c, 0.0);
  for (std::size_t r = 0; r < train.size(); ++r) {
    counts[train.labels[r]] += 1.0;
    auto row = train.features.row(r);
    for (std::size_t j = 0; j < q; ++j) {
      m.centroids(train.labels[r], j) += row[j];
    }
  }
  for (std::size_t i = 0; i < c; ++i) {
    if (counts[i] == 0.0) {
      throw std::invalid_argument("centroid_fit: class " + std::to_string(i) +
                                  " has no training rows");
    }
    for (std::size_t j = 0; j < q; ++j) m.centroids(i, j) /= counts[i];
  }
  return m;
}

std::vector<double> centroid_supports(const CentroidModel& m,
                                      std::span<const double> x) {
  if (x.size() != m.centroids.cols()) {
    throw std::invalid_argument("centroid_supports: dimension mismatch");
  }
  double q = static_cast<double>(m.centroids.cols());
  std::vector<double> u(m.centroids.rows());
  for (std::size_t c = 0; c < m.centroids.rows(); ++c) {
    double d2 = squared_distance(x, m.centroids.row(c));
    u[c] = std::exp(-(d2 / q) / (2.0 * m.sigma * m.sigma));
  }
  return u;
}

UncertaintyEstimate centroid_uncertainty(const CentroidModel& m,
                                         std::span<const double> x) {
  auto u = centroid_supports(m, x);
  double best = *std::max_element(u.begin(), u.end());

  // Softmax over raw supports (temperature 1).
  std::vector<double> soft(u.size());
  double z = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) z += (soft[i] = std::exp(u[i]));
  for (double& v : soft) v /= z;

  UncertaintyEstimate out;
  out.strategy = Strategy::centroid_rbf;
  out.epistemic = 1.0 / best;  // supports are in (0, 1], so this is >= 1
  double soft_entropy = shannon_entropy_bits(soft);
  if (m.aleatoric == CentroidAleatoric::softmax_entropy) {
    out.aleatoric = soft_entropy;
    out.total = out.aleatoric + out.epistemic;
  } else {
    out.total = soft_entropy;
    out.aleatoric = out.total - out.epistemic;
  }
  return out;
}

UncertaintyEstimate belief_uncertainty(const MassFunction& m) {
  UncertaintyEstimate u;
  u.strategy = Strategy::belief;
  u.epistemic = nonspecificity(m);
  u.aleatoric = discord(m);
  u.total = u.epistemic + u.aleatoric;
  return u;
}

namespace {

class EnsembleQuantifier final : public UncertaintyQuantifier {
 public:
  explicit EnsembleQuantifier(TreeEnsemble model) : model_(std::move(model)) {}
  Strategy strategy() const override { return Strategy::ensemble_entropy; }
  UncertaintyEstimate evaluate(std::span<const double> x) const override {
    return entropy_decompose(model_.member_distributions(x));
  }

 private:
  TreeEnsemble model_;
};

class CentroidQuantifier final : public UncertaintyQuantifier {
 public:
  explicit CentroidQuantifier(CentroidModel model) : model_(std::move(model)) {}
  Strategy strategy() const override { return Strategy::centroid_rbf; }
  UncertaintyEstimate evaluate(std::span<const double> x) const override {
    return centroid_uncertainty(model_, x);
  }

 private:
  CentroidModel model_;
};

class BeliefQuantifier final : public UncertaintyQuantifier {
 public:
  explicit BeliefQuantifier(EknnModel model) : model_(std::move(model)) {}
  Strategy strategy() const override { return Strategy::belief; }
  UncertaintyEstimate evaluate(std::span<const double> x) const override {
    return belief_uncertainty(eknn_mass(model_, x));
  }

 private:
  EknnModel model_;
};

}  // namespace

std::unique_ptr<UncertaintyQuantifier> fit_quantifier(
    Strategy s, const Dataset& train, const QuantifierParams& params) {
  switch (s) {
    case Strategy::ensemble_entropy:
      return std::make_unique<EnsembleQuantifier>(
          TreeEnsemble::fit(train, params.ensemble_trees,
                            params.ensemble_depth, params.ensemble_seed));
    case Strategy::centroid_rbf:
      return std::make_unique<CentroidQuantifier>(centroid_fit(
          train, params.centroid_sigma, params.centroid_aleatoric));
    case Strategy::belief:
      return std::make_unique<BeliefQuantifier>(
          eknn_fit(train, params.eknn_k, params.eknn_alpha));
  }
  throw std::invalid_argument("fit_quantifier: unknown strategy");
}

std::unique_ptr<UncertaintyQuantifier> fit_quantifier(
    std::string_view name, const Dataset& train,
    const QuantifierParams& params) {
  if (auto s = strategy_from_string(name)) {
    return fit_quantifier(*s, train, params);
  }
  if (name == "likelihood") {
    throw StrategyUnavailableError(
        "strategy 'likelihood' is reserved but not implemented");
  }
  throw std::invalid_argument("unknown uncertainty strategy '" +
                              std::string(name) + "'");
}

}  // namespace uxai
