#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace newsrel {

// Row-major dense matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix row_vector(std::span<const double> v) {
    Matrix m(1, v.size());
    std::copy(v.begin(), v.end(), m.data.begin());
    return m;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }

  bool all_finite() const {
    for (double v : data) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  bool operator==(const Matrix&) const = default;
};

// out (+)= a * b
inline void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  if (!accumulate) out.zero();
  const std::size_t n = b.cols;
  for (std::size_t i = 0; i < a.rows; ++i) {
    double* o = out.data.data() + i * n;
    const double* ai = a.data.data() + i * a.cols;
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double av = ai[k];
      if (av == 0.0) continue;
      const double* bk = b.data.data() + k * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * bk[j];
    }
  }
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) t(c, r) = m(r, c);
  }
  return t;
}

// out (+)= a * b^T. Goes through an explicit transpose so the inner loop is
// a vectorizable axpy rather than a dot-product reduction.
inline void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  gemm_nn(a, transpose(b), out, accumulate);
}

// out (+)= a^T * b
inline void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out, bool accumulate) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  if (!accumulate) out.zero();
  const std::size_t n = b.cols;
  for (std::size_t k = 0; k < a.rows; ++k) {
    const double* ak = a.data.data() + k * a.cols;
    const double* bk = b.data.data() + k * n;
    for (std::size_t i = 0; i < a.cols; ++i) {
      const double av = ak[i];
      if (av == 0.0) continue;
      double* o = out.data.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) o[j] += av * bk[j];
    }
  }
}

}  // namespace newsrel
