#include "codesign/linalg.hpp"

#include <cmath>
#include <cassert>

#include "codesign/kernels.hpp"

namespace codesign::linalg {

bool cholesky_inplace(Matrix& m) {
  assert(m.rows == m.cols);
  const std::size_t n = m.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double* ri = m.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double* rj = m.row(j);
      ri[j] = (ri[j] - kern::dot(ri, rj, j)) / rj[j];
    }
    double d = ri[i] - kern::dot(ri, ri, i);
    if (!(d > 0.0)) return false;
    ri[i] = std::sqrt(d);
    for (std::size_t j = i + 1; j < n; ++j) ri[j] = 0.0;
  }
  return true;
}

void solve_lower(const Matrix& l, const double* b, double* x) {
  const std::size_t n = l.rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ri = l.row(i);
    x[i] = (b[i] - kern::dot(ri, x, i)) / ri[i];
  }
}

void solve_lower_transposed(const Matrix& l, const double* b, double* x) {
  const std::size_t n = l.rows;
  // Column-oriented back substitution: once x[i] is known, subtract its
  // contribution from all earlier rows using the contiguous row prefix of L.
  std::vector<double> work(b, b + n);
  for (std::size_t ii = n; ii-- > 0;) {
    const double* ri = l.row(ii);
    x[ii] = work[ii] / ri[ii];
    if (ii > 0) kern::axpy(-x[ii], ri, work.data(), ii);
  }
}

std::vector<double> solve_cholesky(const Matrix& l, const std::vector<double>& b) {
  assert(l.rows == b.size());
  std::vector<double> y(b.size()), x(b.size());
  solve_lower(l, b.data(), y.data());
  solve_lower_transposed(l, y.data(), x.data());
  return x;
}

}  // namespace codesign::linalg
