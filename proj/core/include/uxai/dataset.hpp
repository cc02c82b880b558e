#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uxai/matrix.hpp"

namespace uxai {

// Anything wrong with input data: unreadable files, malformed cells, label
// problems. The message always names the offending location.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix features;                         // T x Q
  std::vector<int> labels;                 // values in [0, num_classes)
  std::vector<std::string> feature_names;  // size Q
  std::vector<std::string> class_names;    // size C, in order of first appearance

  std::size_t size() const { return features.rows(); }
  std::size_t num_features() const { return features.cols(); }
  std::size_t num_classes() const { return class_names.size(); }

  Dataset take(std::span<const std::size_t> rows) const;

  // Throws DataError if shapes disagree, a value is non-finite, or a label
  // is out of range.
  void validate() const;
};

// Reads a comma-separated file with a header row. label_column is either a
// header name or (failing that) a zero-based column index given as digits.
// Class labels may be arbitrary strings; they are encoded in order of first
// appearance. Rejects files with fewer than two distinct labels.
Dataset load_csv(const std::filesystem::path& path,
                 const std::string& label_column);

// Same format, no label column: every field is a feature. Used for routing
// instances. If drop_column names/indexes a column that exists, it is
// ignored (so a labeled file can be reused as instance input).
Matrix load_feature_csv(const std::filesystem::path& path,
                        const std::string& drop_column = "");

// Per-column min-max statistics fitted on a training split.
struct NormParams {
  std::vector<double> min;
  std::vector<double> max;

  std::size_t size() const { return min.size(); }
};

NormParams fit_minmax(const Dataset& train);

// Maps each column through (x - min) / (max - min). Columns that were
// constant on the fitting split map to 0.5. Rows from another split may
// land outside [0, 1]; that is intentional and preserved.
Dataset apply_minmax(const NormParams& p, const Dataset& d);
std::vector<double> apply_minmax(const NormParams& p,
                                 std::span<const double> x);
std::vector<double> invert_minmax(const NormParams& p,
                                  std::span<const double> x);

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = false;
};

// Random train/test partition. Train size is llround(fraction * T), clamped
// so both sides are nonempty; the stratified variant applies the same rule
// per class. Equal seeds give identical partitions.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    const std::vector<int>& labels, const SplitSpec& spec);
std::pair<Dataset, Dataset> train_test_split(const Dataset& d,
                                             const SplitSpec& spec);

// Two interleaved half-circles with isotropic Gaussian noise; the standard
// two-moons toy problem. n points per class, feature names "x"/"y", class
// names "upper"/"lower".
Dataset make_toy_moons(std::size_t n_per_class, double noise,
                       std::uint64_t seed);

}  // namespace uxai
