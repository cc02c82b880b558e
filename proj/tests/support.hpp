#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "uxai/dataset.hpp"
#include "uxai/rng.hpp"

namespace testsupport {

// Gaussian blobs with well-separated class centers, for tests that need a
// learnable dataset without loading files.
inline uxai::Dataset make_blobs(std::size_t n_per_class, std::size_t q,
                                std::size_t classes, double spread,
                                std::uint64_t seed) {
  uxai::Rng rng(seed);
  uxai::Dataset d;
  d.features = uxai::Matrix(n_per_class * classes, q);
  d.labels.resize(n_per_class * classes);
  std::size_t r = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      d.labels[r] = static_cast<int>(c);
      for (std::size_t j = 0; j < q; ++j) {
        double center = (j % classes == c) ? 1.0 : 0.0;
        d.features(r, j) = center + spread * rng.normal();
      }
    }
  }
  for (std::size_t j = 0; j < q; ++j) {
    d.feature_names.push_back("f" + std::to_string(j));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    d.class_names.push_back("c" + std::to_string(c));
  }
  return d;
}

inline std::filesystem::path test_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "uxai_tests" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::filesystem::path write_file(const std::filesystem::path& path,
                                        const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  out << text;
  return path;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

// One-sided Mann-Whitney U test (x stochastically greater than y), normal
// approximation with tie correction and continuity correction.
inline double mann_whitney_greater(std::span<const double> x,
                                   std::span<const double> y) {
  double u = 0.0;
  for (double a : x) {
    for (double b : y) {
      if (a > b) u += 1.0;
      else if (a == b) u += 0.5;
    }
  }
  double n1 = static_cast<double>(x.size());
  double n2 = static_cast<double>(y.size());
  double n = n1 + n2;
  std::map<double, double> tally;
  for (double a : x) tally[a] += 1.0;
  for (double b : y) tally[b] += 1.0;
  double tie_sum = 0.0;
  for (auto [value, t] : tally) {
    (void)value;
    tie_sum += t * t * t - t;
  }
  double var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
  if (var <= 0.0) return 1.0;
  double z = (u - n1 * n2 / 2.0 - 0.5) / std::sqrt(var);
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

}  // namespace testsupport
