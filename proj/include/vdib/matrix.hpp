#pragma once

#include <cstring>
#include <span>
#include <vector>

#include "vdib/check.hpp"

namespace vdib {

// Dense row-major matrix of doubles. Desk-scale sizes; no tricks.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0)
      : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
    VDIB_CHECK(r >= 0 && c >= 0);
  }

  double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
  double operator()(int i, int j) const {
    return data[static_cast<size_t>(i) * cols + j];
  }

  std::span<double> row(int i) {
    return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
  }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<size_t>(i) * cols, static_cast<size_t>(cols)};
  }

  size_t size() const { return data.size(); }
  void fill(double v) { std::fill(data.begin(), data.end(), v); }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

// out_i = sum_j m(i,j) x_j
inline void matvec(const Matrix& m, std::span<const double> x,
                   std::span<double> out) {
  VDIB_CHECK(static_cast<int>(x.size()) == m.cols &&
             static_cast<int>(out.size()) == m.rows);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    double acc = 0.0;
    for (int j = 0; j < m.cols; ++j) acc += row[j] * x[j];
    out[i] = acc;
  }
}

// out_j = sum_i m(i,j) x_i
inline void matvec_transposed(const Matrix& m, std::span<const double> x,
                              std::span<double> out) {
  VDIB_CHECK(static_cast<int>(x.size()) == m.rows &&
             static_cast<int>(out.size()) == m.cols);
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < m.rows; ++i) {
    const double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    const double xi = x[i];
    for (int j = 0; j < m.cols; ++j) out[j] += row[j] * xi;
  }
}

// m(i,j) += scale * a_i * b_j
inline void add_outer(Matrix& m, double scale, std::span<const double> a,
                      std::span<const double> b) {
  VDIB_CHECK(static_cast<int>(a.size()) == m.rows &&
             static_cast<int>(b.size()) == m.cols);
  for (int i = 0; i < m.rows; ++i) {
    double* row = m.data.data() + static_cast<size_t>(i) * m.cols;
    const double s = scale * a[i];
    if (s == 0.0) continue;
    for (int j = 0; j < m.cols; ++j) row[j] += s * b[j];
  }
}

inline void axpy(double scale, std::span<const double> x,
                 std::span<double> y) {
  VDIB_CHECK(x.size() == y.size());
  for (size_t i = 0; i < x.size(); ++i) y[i] += scale * x[i];
}

}  // namespace vdib
