#include "uxai/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace uxai {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m;
  if (rows.empty()) return m;
  m.rows_ = rows.size();
  m.cols_ = rows[0].size();
  m.data_.reserve(m.rows_ * m.cols_);
  for (const auto& r : rows) {
    if (r.size() != m.cols_) {
      throw std::invalid_argument("Matrix::from_rows: ragged input");
    }
    m.data_.insert(m.data_.end(), r.begin(), r.end());
  }
  return m;
}

void Matrix::push_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  } else if (values.size() != cols_) {
    throw std::invalid_argument("Matrix::push_row: width mismatch");
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("squared_distance: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double euclidean_distance(std::span<const double> a,
                          std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<std::pair<std::size_t, double>> k_nearest(
    const Matrix& m, std::span<const double> x, std::size_t k) {
  if (k == 0 || k > m.rows()) {
    throw std::invalid_argument("k_nearest: k must be in [1, rows]");
  }
  // Max-heap on (distance, index): the root is the worst of the current k,
  // so a closer row replaces it. Comparing the pair keeps ties on distance
  // resolved toward lower indices.
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double d2 = squared_distance(m.row(i), x);
    if (heap.size() < k) {
      heap.emplace_back(d2, i);
      std::push_heap(heap.begin(), heap.end());
    } else if (std::pair(d2, i) < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = {d2, i};
      std::push_heap(heap.begin(), heap.end());
    }
  }
  std::sort(heap.begin(), heap.end());
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(k);
  for (auto [d2, i] : heap) out.emplace_back(i, d2);
  return out;
}

}  // namespace uxai
