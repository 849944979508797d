#pragma once
// Minimal dense linear algebra on top of the kernel layer: just what the GP
// fit/predict path needs (SPD Cholesky and triangular solves).

#include <cstddef>
#include <vector>

namespace codesign::linalg {

struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

  double& at(std::size_t i, std::size_t j) { return a[i * cols + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * cols + j]; }
  double* row(std::size_t i) { return a.data() + i * cols; }
  const double* row(std::size_t i) const { return a.data() + i * cols; }
};

// In-place lower Cholesky of a symmetric positive-definite matrix (only the
// lower triangle of `m` is read; the strict upper triangle is zeroed on
// success).  Returns false if a non-positive pivot is hit.
bool cholesky_inplace(Matrix& m);

// Solve L x = b (L lower-triangular, from cholesky_inplace).
void solve_lower(const Matrix& l, const double* b, double* x);

// Solve L^T x = b without forming the transpose.
void solve_lower_transposed(const Matrix& l, const double* b, double* x);

// Convenience: solve (L L^T) x = b.
std::vector<double> solve_cholesky(const Matrix& l, const std::vector<double>& b);

}  // namespace codesign::linalg
