#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <vector>

#include "uxai/dataset.hpp"
#include "uxai/matrix.hpp"

namespace uxai {

// Raised by Dempster's rule when two sources disagree completely and the
// normalizer 1 - conflict vanishes.
class TotalConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Basic belief assignment over subsets of a frame of up to 20 classes.
// Subsets are bitmasks (bit c set = class c in the subset); only focal
// elements (nonzero mass) are stored, in an ordered map so iteration order
// is deterministic.
class MassFunction {
 public:
  explicit MassFunction(std::size_t num_classes);

  static MassFunction vacuous(std::size_t num_classes);

  std::size_t num_classes() const { return num_classes_; }
  std::uint32_t full_set() const {
    return (num_classes_ == 32 ? 0xffffffffu
                               : (1u << num_classes_) - 1u);
  }

  // Sets m(subset). Zero mass erases the entry.
  void set(std::uint32_t subset, double mass);
  void add(std::uint32_t subset, double mass);
  double mass(std::uint32_t subset) const;

  const std::map<std::uint32_t, double>& focal() const { return focal_; }

  // Checks nonnegativity, zero mass on the empty set, and total mass 1
  // within tol.
  void validate(double tol = 1e-9) const;

 private:
  std::size_t num_classes_;
  std::map<std::uint32_t, double> focal_;
};

// Dempster's normalized conjunctive combination. Throws TotalConflictError
// when the sources fully contradict each other.
MassFunction dempster_combine(const MassFunction& a, const MassFunction& b);

// Pignistic transform: each focal element spreads its mass uniformly over
// its members. Returns one probability per class.
std::vector<double> pignistic(const MassFunction& m);

// Nonspecificity: sum over focal A of m(A) * log2|A|. Zero iff all mass is
// on singletons; log2(C) for the vacuous assignment.
double nonspecificity(const MassFunction& m);

// Discord: -sum over focal A of m(A) * log2 BetP(A), the Shannon-like
// conflict part of the total uncertainty.
double discord(const MassFunction& m);

// Evidential k-NN: each neighbor contributes mass alpha*exp(-gamma_c * d^2)
// to its own class and the rest to the whole frame; contributions are fused
// with Dempster's rule.
struct EknnModel {
  Matrix train_features;
  std::vector<int> train_labels;
  std::size_t num_classes = 0;
  std::size_t k = 0;
  double alpha = 0.95;
  std::vector<double> gamma;  // one per class
};

// gamma_c is the reciprocal of the mean intra-class squared distance.
// Classes with fewer than two members fall back to the global mean over all
// classes that have one, and to 1.0 if no class does.
EknnModel eknn_fit(const Dataset& train, std::size_t k, double alpha = 0.95);

MassFunction eknn_mass(const EknnModel& m, std::span<const double> x);

}  // namespace uxai
