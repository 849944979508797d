#include "codesign/kernels.hpp"

#include <cstdlib>

namespace codesign::kern {

namespace {

Isa resolve_isa() {
#if defined(CODESIGN_HAVE_AVX2)
  const char* force = std::getenv("CODESIGN_FORCE_SCALAR");
  if (force && force[0] == '1') return Isa::scalar;
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
    return Isa::avx2;
#endif
  return Isa::scalar;
}

}  // namespace

Isa active_isa() {
  static const Isa isa = resolve_isa();
  return isa;
}

const char* isa_name(Isa isa) {
  return isa == Isa::avx2 ? "avx2" : "scalar";
}

double dot(const double* a, const double* b, std::size_t n) {
#if defined(CODESIGN_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return detail::dot_avx2(a, b, n);
#endif
  return detail::dot_scalar(a, b, n);
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
#if defined(CODESIGN_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return detail::axpy_avx2(alpha, x, y, n);
#endif
  detail::axpy_scalar(alpha, x, y, n);
}

void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols) {
#if defined(CODESIGN_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return detail::matvec_avx2(a, x, y, rows, cols);
#endif
  detail::matvec_scalar(a, x, y, rows, cols);
}

void sqdist_rows(const double* xs, std::size_t n, std::size_t d,
                 const double* q, double* out) {
#if defined(CODESIGN_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return detail::sqdist_rows_avx2(xs, n, d, q, out);
#endif
  detail::sqdist_rows_scalar(xs, n, d, q, out);
}

void vexp(const double* x, double* y, std::size_t n) {
#if defined(CODESIGN_HAVE_AVX2)
  if (active_isa() == Isa::avx2) return detail::vexp_avx2(x, y, n);
#endif
  detail::vexp_scalar(x, y, n);
}

}  // namespace codesign::kern
