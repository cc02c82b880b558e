#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace uxai {

// Dense row-major matrix of doubles. Rows are handed out as spans so feature
// vectors can flow through the library without copies.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void push_row(std::span<const double> values);

  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

// Indices and squared distances of the k rows of m closest to x, sorted by
// (distance, row index) ascending. Ties on distance go to the lower index.
std::vector<std::pair<std::size_t, double>> k_nearest(
    const Matrix& m, std::span<const double> x, std::size_t k);

}  // namespace uxai
