#pragma once
// Hot numeric kernels used by the GP surrogate and the LSTM controller.
// Each kernel has a scalar reference implementation and (on x86) an AVX2+FMA
// variant; the active variant is chosen once at startup from cpuid.  Set
// CODESIGN_FORCE_SCALAR=1 in the environment to pin the scalar path.

#include <cstddef>

namespace codesign::kern {

enum class Isa { scalar, avx2 };

// Resolved once on first use.
Isa active_isa();
const char* isa_name(Isa isa);

// dot(a, b) over n elements.
double dot(const double* a, const double* b, std::size_t n);

// y += alpha * x over n elements.
void axpy(double alpha, const double* x, double* y, std::size_t n);

// y = A * x for row-major A (rows x cols). y must not alias A or x.
void matvec(const double* a, const double* x, double* y,
            std::size_t rows, std::size_t cols);

// out[i] = squared Euclidean distance between row i of xs (n x d, row-major)
// and the query q.
void sqdist_rows(const double* xs, std::size_t n, std::size_t d,
                 const double* q, double* out);

// y[i] = exp(x[i]).  The AVX2 variant flushes results below the smallest
// normal double to 0 instead of producing subnormals.
void vexp(const double* x, double* y, std::size_t n);

// Raw variants, exposed so equivalence tests can compare them directly.
namespace detail {

double dot_scalar(const double* a, const double* b, std::size_t n);
void axpy_scalar(double alpha, const double* x, double* y, std::size_t n);
void matvec_scalar(const double* a, const double* x, double* y,
                   std::size_t rows, std::size_t cols);
void sqdist_rows_scalar(const double* xs, std::size_t n, std::size_t d,
                        const double* q, double* out);
void vexp_scalar(const double* x, double* y, std::size_t n);

#if defined(CODESIGN_HAVE_AVX2)
double dot_avx2(const double* a, const double* b, std::size_t n);
void axpy_avx2(double alpha, const double* x, double* y, std::size_t n);
void matvec_avx2(const double* a, const double* x, double* y,
                 std::size_t rows, std::size_t cols);
void sqdist_rows_avx2(const double* xs, std::size_t n, std::size_t d,
                      const double* q, double* out);
void vexp_avx2(const double* x, double* y, std::size_t n);
#endif

}  // namespace detail

}  // namespace codesign::kern
