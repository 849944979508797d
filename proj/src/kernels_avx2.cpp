// AVX2 + FMA kernel variants.  This translation unit is compiled with
// -mavx2 -mfma; nothing here runs unless cpuid reports both features.
#include "codesign/kernels.hpp"

#if defined(CODESIGN_HAVE_AVX2)

#include <immintrin.h>

#include <cmath>

namespace codesign::kern::detail {

namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d hi64 = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, hi64));
}

}  // namespace

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  if (i + 4 <= n) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    i += 4;
  }
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  // Leftovers
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d av = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i),
                                            _mm256_loadu_pd(y + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void matvec_avx2(const double* a, const double* x, double* y,
                 std::size_t rows, std::size_t cols) {
  // Four rows at a time so each load of x feeds four accumulators.
  std::size_t r = 0;
  for (; r + 4 <= rows; r += 4) {
    const double* a0 = a + (r + 0) * cols;
    const double* a1 = a + (r + 1) * cols;
    const double* a2 = a + (r + 2) * cols;
    const double* a3 = a + (r + 3) * cols;
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    __m256d s2 = _mm256_setzero_pd();
    __m256d s3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      __m256d xv = _mm256_loadu_pd(x + c);
      s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a0 + c), xv, s0);
      s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a1 + c), xv, s1);
      s2 = _mm256_fmadd_pd(_mm256_loadu_pd(a2 + c), xv, s2);
      s3 = _mm256_fmadd_pd(_mm256_loadu_pd(a3 + c), xv, s3);
    }
    double t0 = hsum(s0), t1 = hsum(s1), t2 = hsum(s2), t3 = hsum(s3);
    for (; c < cols; ++c) {
      t0 += a0[c] * x[c];
      t1 += a1[c] * x[c];
      t2 += a2[c] * x[c];
      t3 += a3[c] * x[c];
    }
    y[r + 0] = t0;
    y[r + 1] = t1;
    y[r + 2] = t2;
    y[r + 3] = t3;
  }
  for (; r < rows; ++r) y[r] = dot_avx2(a + r * cols, x, cols);
}

void sqdist_rows_avx2(const double* xs, std::size_t n, std::size_t d,
                      const double* q, double* out) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = xs + i * d;
    __m256d acc = _mm256_setzero_pd();
    std::size_t j = 0;
    for (; j + 4 <= d; j += 4) {
      __m256d diff = _mm256_sub_pd(_mm256_loadu_pd(row + j), _mm256_loadu_pd(q + j));
      acc = _mm256_fmadd_pd(diff, diff, acc);
    }
    double s = hsum(acc);
    for (; j < d; ++j) {
      double diff = row[j] - q[j];
      s += diff * diff;
    }
    out[i] = s;
  }
}

// ---------------------------------------------------------------------------
// Vectorized exp, classic rational approximation over a reduced argument:
//   exp(x) = 2^n * expr(r),  r = x - n*ln(2),  n = round(x / ln 2)
//   expr(r) = 1 + 2*r*P(r^2) / (Q(r^2) - r*P(r^2))
// The 2^n scale is applied in two halves so results stay correct down into
// the subnormal range.  Accurate to a couple of ulps on [-708, 709].

namespace {

constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kC1 = 6.93145751953125e-1;           // ln(2) high bits
constexpr double kC2 = 1.42860682030941723212e-6;     // ln(2) low bits
constexpr double kP0 = 1.26177193074810590878e-4;
constexpr double kP1 = 3.02994407707441961300e-2;
constexpr double kP2 = 9.99999999999999999910e-1;
constexpr double kQ0 = 3.00198505138664455042e-6;
constexpr double kQ1 = 2.52448340349684104192e-3;
constexpr double kQ2 = 2.27265548208155028766e-1;
constexpr double kQ3 = 2.00000000000000000005e0;
constexpr double kOverflowX = 709.782712893383973096;  // above: exp -> inf
constexpr double kUnderflowX = -745.5;                 // below: exp -> 0

inline __m256d pow2i(__m128i k32) {
  __m256i k = _mm256_cvtepi32_epi64(k32);
  k = _mm256_add_epi64(k, _mm256_set1_epi64x(1023));
  k = _mm256_slli_epi64(k, 52);
  return _mm256_castsi256_pd(k);
}

// Scalar replica of the vector lane math (std::fma mirrors vfmadd rounding),
// used for leftover elements so a value's result never depends on its index.
inline double exp_lane(double x) {
  if (x != x) return x;
  if (x > kOverflowX) return HUGE_VAL;
  if (x < kUnderflowX) return 0.0;
  double nf = std::nearbyint(x * kLog2E);
  double r = std::fma(-nf, kC1, x);
  r = std::fma(-nf, kC2, r);
  double z = r * r;
  double p = std::fma(kP0, z, kP1);
  p = std::fma(p, z, kP2);
  p *= r;
  double q = std::fma(kQ0, z, kQ1);
  q = std::fma(q, z, kQ2);
  q = std::fma(q, z, kQ3);
  double e = 1.0 + (2.0 * p) / (q - p);
  int n = static_cast<int>(nf);
  int n1 = n >> 1;
  int n2 = n - n1;
  return e * std::ldexp(1.0, n1) * std::ldexp(1.0, n2);
}

}  // namespace

void vexp_avx2(const double* x, double* y, std::size_t n) {
  const __m256d log2e = _mm256_set1_pd(kLog2E);
  const __m256d c1 = _mm256_set1_pd(kC1);
  const __m256d c2 = _mm256_set1_pd(kC2);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d two = _mm256_set1_pd(2.0);
  const __m256d inf = _mm256_set1_pd(HUGE_VAL);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    __m256d over = _mm256_cmp_pd(xv, _mm256_set1_pd(kOverflowX), _CMP_GT_OQ);
    __m256d under = _mm256_cmp_pd(xv, _mm256_set1_pd(kUnderflowX), _CMP_LT_OQ);
    __m256d isnan = _mm256_cmp_pd(xv, xv, _CMP_UNORD_Q);
    // Keep the lane math in-range so the int conversion below stays defined
    // even for lanes that the masks will overwrite.
    __m256d xs = _mm256_max_pd(_mm256_min_pd(xv, _mm256_set1_pd(kOverflowX)),
                               _mm256_set1_pd(kUnderflowX));
    __m256d nf = _mm256_round_pd(_mm256_mul_pd(xs, log2e),
                                 _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(nf, c1, xs);
    r = _mm256_fnmadd_pd(nf, c2, r);
    __m256d z = _mm256_mul_pd(r, r);
    __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kP0), z, _mm256_set1_pd(kP1));
    p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(kP2));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), z, _mm256_set1_pd(kQ1));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(kQ2));
    q = _mm256_fmadd_pd(q, z, _mm256_set1_pd(kQ3));
    __m256d e = _mm256_add_pd(one, _mm256_div_pd(_mm256_mul_pd(two, p),
                                                 _mm256_sub_pd(q, p)));
    __m128i n32 = _mm256_cvtpd_epi32(nf);
    __m128i n1 = _mm_srai_epi32(n32, 1);
    __m128i n2 = _mm_sub_epi32(n32, n1);
    __m256d res = _mm256_mul_pd(_mm256_mul_pd(e, pow2i(n1)), pow2i(n2));
    res = _mm256_blendv_pd(res, inf, over);
    res = _mm256_blendv_pd(res, zero, under);
    res = _mm256_blendv_pd(res, xv, isnan);
    _mm256_storeu_pd(y + i, res);
  }
  for (; i < n; ++i) y[i] = exp_lane(x[i]);
}

}  // namespace codesign::kern::detail

#endif  // CODESIGN_HAVE_AVX2
