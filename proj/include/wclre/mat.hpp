#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

#include "wclre/common.hpp"

namespace wclre {

// Dense row-major matrix of doubles. Vectors are stored as 1 x n.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  std::size_t size() const { return a.size(); }
  void zero() { std::fill(a.begin(), a.end(), 0.0); }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// out = x * w (+ bias on every row when given); x: m x k, w: k x n.
inline void matmul_bias(const Mat& x, const Mat& w, const Mat* bias, Mat& out) {
  assert(x.cols == w.rows);
  out.rows = x.rows;
  out.cols = w.cols;
  out.a.assign(x.rows * w.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i) {
    double* o = out.row(i);
    if (bias) {
      const double* b = bias->a.data();
      for (std::size_t j = 0; j < w.cols; ++j) o[j] = b[j];
    }
    const double* xi = x.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xv = xi[k];
      const double* wk = w.row(k);
      for (std::size_t j = 0; j < w.cols; ++j) o[j] += xv * wk[j];
    }
  }
}

inline void matmul(const Mat& x, const Mat& w, Mat& out) { matmul_bias(x, w, nullptr, out); }

// dX += dOut * W^T; dOut: m x n, w: k x n, dX: m x k.
inline void add_matmul_bt(const Mat& d_out, const Mat& w, Mat& dx) {
  assert(d_out.cols == w.cols && dx.rows == d_out.rows && dx.cols == w.rows);
  for (std::size_t i = 0; i < d_out.rows; ++i) {
    const double* di = d_out.row(i);
    double* xi = dx.row(i);
    for (std::size_t k = 0; k < w.rows; ++k) {
      const double* wk = w.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < w.cols; ++j) acc += di[j] * wk[j];
      xi[k] += acc;
    }
  }
}

// dW += X^T * dOut; x: m x k, dOut: m x n, dW: k x n.
inline void add_matmul_at(const Mat& x, const Mat& d_out, Mat& dw) {
  assert(x.rows == d_out.rows && dw.rows == x.cols && dw.cols == d_out.cols);
  for (std::size_t i = 0; i < x.rows; ++i) {
    const double* xi = x.row(i);
    const double* di = d_out.row(i);
    for (std::size_t k = 0; k < x.cols; ++k) {
      const double xv = xi[k];
      if (xv == 0.0) continue;
      double* wk = dw.row(k);
      for (std::size_t j = 0; j < d_out.cols; ++j) wk[j] += xv * di[j];
    }
  }
}

// db += column sums of dOut; db: 1 x n.
inline void add_col_sums(const Mat& d_out, Mat& db) {
  assert(db.size() == d_out.cols);
  for (std::size_t i = 0; i < d_out.rows; ++i) {
    const double* di = d_out.row(i);
    for (std::size_t j = 0; j < d_out.cols; ++j) db.a[j] += di[j];
  }
}

inline double dot(const double* u, const double* v, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += u[i] * v[i];
  return acc;
}

inline double norm2(const double* u, std::size_t n) { return std::sqrt(dot(u, u, n)); }

}  // namespace wclre
