#include "uxai/evidence.hpp"

#include <bit>
#include <cmath>

namespace uxai {

MassFunction::MassFunction(std::size_t num_classes)
    : num_classes_(num_classes) {
  if (num_classes == 0 || num_classes > 20) {
    throw std::invalid_argument(
        "MassFunction: frame size must be in [1, 20] (subsets are bitmasks)");
  }
}

MassFunction MassFunction::vacuous(std::size_t num_classes) {
  MassFunction m(num_classes);
  m.set(m.full_set(), 1.0);
  return m;
}

void MassFunction::set(std::uint32_t subset, double mass) {
  if (subset == 0) {
    throw std::invalid_argument("MassFunction: empty set cannot carry mass");
  }
  if ((subset & ~full_set()) != 0) {
    throw std::invalid_argument("MassFunction: subset outside the frame");
  }
  if (mass == 0.0) {
    focal_.erase(subset);
  } else {
    focal_[subset] = mass;
  }
}

void MassFunction::add(std::uint32_t subset, double mass) {
  set(subset, this->mass(subset) + mass);
}

double MassFunction::mass(std::uint32_t subset) const {
  auto it = focal_.find(subset);
  return it == focal_.end() ? 0.0 : it->second;
}

void MassFunction::validate(double tol) const {
  double total = 0.0;
  for (auto [subset, m] : focal_) {
    if (m < 0.0) {
      throw std::invalid_argument("MassFunction: negative mass");
    }
    total += m;
  }
  if (std::abs(total - 1.0) > tol) {
    throw std::invalid_argument("MassFunction: total mass is " +
                                std::to_string(total) + ", expected 1");
  }
}

MassFunction dempster_combine(const MassFunction& a, const MassFunction& b) {
  if (a.num_classes() != b.num_classes()) {
    throw std::invalid_argument("dempster_combine: frames differ");
  }
  MassFunction out(a.num_classes());
  double conflict = 0.0;
  for (auto [sa, ma] : a.focal()) {
    for (auto [sb, mb] : b.focal()) {
      std::uint32_t inter = sa & sb;
      double m = ma * mb;
      if (inter == 0) {
        conflict += m;
      } else {
        out.add(inter, m);
      }
    }
  }
  double norm = 1.0 - conflict;
  if (norm <= 1e-12) {
    throw TotalConflictError(
        "dempster_combine: total conflict, nothing survives normalization");
  }
  MassFunction scaled(a.num_classes());
  for (auto [s, m] : out.focal()) scaled.set(s, m / norm);
  return scaled;
}

std::vector<double> pignistic(const MassFunction& m) {
  std::vector<double> p(m.num_classes(), 0.0);
  for (auto [subset, mass] : m.focal()) {
    double share = mass / std::popcount(subset);
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (subset & (1u << c)) p[c] += share;
    }
  }
  return p;
}

double nonspecificity(const MassFunction& m) {
  double n = 0.0;
  for (auto [subset, mass] : m.focal()) {
    n += mass * std::log2(static_cast<double>(std::popcount(subset)));
  }
  return n;
}

double discord(const MassFunction& m) {
  auto betp = pignistic(m);
  double d = 0.0;
  for (auto [subset, mass] : m.focal()) {
    double betp_subset = 0.0;
    for (std::size_t c = 0; c < m.num_classes(); ++c) {
      if (subset & (1u << c)) betp_subset += betp[c];
    }
    d -= mass * std::log2(betp_subset);
  }
  // -0.0 from a dirac assignment is just 0.
  return d == 0.0 ? 0.0 : d;
}

EknnModel eknn_fit(const Dataset& train, std::size_t k, double alpha) {
  if (k == 0 || k > train.size()) {
    throw std::invalid_argument("eknn_fit: k must be in [1, training size]");
  }
  if (alpha <= 0.0 || alpha >= 1.0) {
    throw std::invalid_argument("eknn_fit: alpha must be in (0, 1)");
  }
  EknnModel m;
  m.train_features = train.features;
  m.train_labels = train.labels;
  m.num_classes = train.num_classes();
  m.k = k;
  m.alpha = alpha;

  // gamma_c = 1 / mean pairwise squared distance within class c.
  m.gamma.assign(m.num_classes, 0.0);
  std::vector<double> defined;
  std::vector<std::vector<std::size_t>> members(m.num_classes);
  for (std::size_t i = 0; i < train.size(); ++i) {
    members[train.labels[i]].push_back(i);
  }
  for (std::size_t c = 0; c < m.num_classes; ++c) {
    const auto& rows = members[c];
    if (rows.size() < 2) continue;
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = i + 1; j < rows.size(); ++j) {
        sum += squared_distance(train.features.row(rows[i]),
                                train.features.row(rows[j]));
        ++pairs;
      }
    }
    double mean = sum / static_cast<double>(pairs);
    if (mean > 0.0) {
      m.gamma[c] = 1.0 / mean;
      defined.push_back(m.gamma[c]);
    }
  }
  double fallback = 1.0;
  if (!defined.empty()) {
    double s = 0.0;
    for (double g : defined) s += g;
    fallback = s / static_cast<double>(defined.size());
  }
  for (double& g : m.gamma) {
    if (g == 0.0) g = fallback;
  }
  return m;
}

MassFunction eknn_mass(const EknnModel& m, std::span<const double> x) {
  auto nn = k_nearest(m.train_features, x, m.k);
  MassFunction fused = MassFunction::vacuous(m.num_classes);
  for (auto [idx, d2] : nn) {
    int label = m.train_labels[idx];
    double support = m.alpha * std::exp(-m.gamma[label] * d2);
    MassFunction piece(m.num_classes);
    piece.set(1u << label, support);
    piece.set(piece.full_set(), 1.0 - support);
    fused = dempster_combine(fused, piece);
  }
  return fused;
}

}  // namespace uxai
