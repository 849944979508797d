#include "codesign/kernels.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "codesign/rng.hpp"
#include "doctest.h"

using namespace codesign;

namespace {

std::vector<double> random_vec(std::size_t n, rng::Xoshiro256& gen,
                               double lo = -3.0, double hi = 3.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = gen.range(lo, hi);
  return v;
}

bool close_rel(double a, double b, double rel, double abs = 1e-300) {
  const double diff = std::fabs(a - b);
  return diff <= abs || diff <= rel * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

TEST_SUITE_BEGIN("kernels");

TEST_CASE("scalar dot and axpy reference values") {
  const double a[] = {1.0, 2.0, 3.0};
  const double b[] = {4.0, -5.0, 6.0};
  CHECK(kern::detail::dot_scalar(a, b, 3) == doctest::Approx(12.0));
  double y[] = {1.0, 1.0, 1.0};
  kern::detail::axpy_scalar(2.0, a, y, 3);
  CHECK(y[0] == doctest::Approx(3.0));
  CHECK(y[2] == doctest::Approx(7.0));
}

TEST_CASE("matvec matches per-row dot") {
  rng::Xoshiro256 gen = rng::Xoshiro256::seeded(7);
  const std::size_t rows = 13, cols = 29;
  auto a = random_vec(rows * cols, gen);
  auto x = random_vec(cols, gen);
  std::vector<double> y(rows);
  kern::matvec(a.data(), x.data(), y.data(), rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double want = kern::detail::dot_scalar(a.data() + r * cols, x.data(), cols);
    CHECK(close_rel(y[r], want, 1e-12));
  }
}

TEST_CASE("dispatch reports a valid isa") {
  const kern::Isa isa = kern::active_isa();
  CHECK((isa == kern::Isa::scalar || isa == kern::Isa::avx2));
  std::printf("active kernel isa: %s\n", kern::isa_name(isa));
}

#if defined(CODESIGN_HAVE_AVX2)

TEST_CASE("avx2 variants match scalar across sizes including tails") {
  if (kern::active_isa() != kern::Isa::avx2) {
    MESSAGE("avx2 not available at runtime; skipping equivalence checks");
    return;
  }
  rng::Xoshiro256 gen = rng::Xoshiro256::seeded(11);
  for (std::size_t n : {0u, 1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u,
                        31u, 33u, 64u, 77u, 136u, 251u}) {
    auto a = random_vec(n, gen);
    auto b = random_vec(n, gen);

    CHECK(close_rel(kern::detail::dot_avx2(a.data(), b.data(), n),
                    kern::detail::dot_scalar(a.data(), b.data(), n), 1e-12, 1e-13));

    auto y1 = random_vec(n, gen);
    auto y2 = y1;
    kern::detail::axpy_scalar(1.7, a.data(), y1.data(), n);
    kern::detail::axpy_avx2(1.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(y1[i], y2[i], 1e-13));

    std::vector<double> d1(n), d2(n);
    if (n > 0) {
      // n rows of dimension 17 (the feature width used by the surrogate).
      const std::size_t d = 17;
      auto xs = random_vec(n * d, gen);
      auto q = random_vec(d, gen);
      kern::detail::sqdist_rows_scalar(xs.data(), n, d, q.data(), d1.data());
      kern::detail::sqdist_rows_avx2(xs.data(), n, d, q.data(), d2.data());
      for (std::size_t i = 0; i < n; ++i) CHECK(close_rel(d1[i], d2[i], 1e-12));
    }
  }
}

TEST_CASE("avx2 matvec matches scalar on odd shapes") {
  if (kern::active_isa() != kern::Isa::avx2) return;
  rng::Xoshiro256 gen = rng::Xoshiro256::seeded(13);
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1},
                            {3, 5}, {4, 4}, {5, 3}, {6, 7}, {480, 136},
                            {7, 129}, {121, 1}}) {
    auto a = random_vec(rows * cols, gen);
    auto x = random_vec(cols, gen);
    std::vector<double> y1(rows), y2(rows);
    kern::detail::matvec_scalar(a.data(), x.data(), y1.data(), rows, cols);
    kern::detail::matvec_avx2(a.data(), x.data(), y2.data(), rows, cols);
    for (std::size_t r = 0; r < rows; ++r) CHECK(close_rel(y1[r], y2[r], 1e-12));
  }
}

TEST_CASE("avx2 vexp matches std::exp over the working range") {
  if (kern::active_isa() != kern::Isa::avx2) return;
  rng::Xoshiro256 gen = rng::Xoshiro256::seeded(17);
  std::vector<double> xs;
  for (int i = 0; i < 4003; ++i) xs.push_back(gen.range(-60.0, 5.0));
  // Exercise the extremes and the lane/leftover boundary.
  for (double v : {0.0, -0.0, 1.0, -1.0, 700.0, -700.0, 708.0, -708.0})
    xs.push_back(v);
  std::vector<double> got(xs.size()), want(xs.size());
  kern::detail::vexp_avx2(xs.data(), got.data(), xs.size());
  kern::detail::vexp_scalar(xs.data(), want.data(), xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK_MESSAGE(close_rel(got[i], want[i], 1e-13), "x=", xs[i]);
}

TEST_CASE("avx2 vexp edge behaviour") {
  if (kern::active_isa() != kern::Isa::avx2) return;
  const double xs[] = {800.0, -800.0, std::numeric_limits<double>::infinity(),
                       -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::quiet_NaN()};
  double ys[5];
  kern::detail::vexp_avx2(xs, ys, 5);
  CHECK(std::isinf(ys[0]));
  CHECK(ys[1] == 0.0);
  CHECK(std::isinf(ys[2]));
  CHECK(ys[3] == 0.0);
  CHECK(std::isnan(ys[4]));
}

TEST_CASE("vexp result does not depend on element position") {
  if (kern::active_isa() != kern::Isa::avx2) return;
  // Same value placed in a vector lane and in the leftover tail.
  std::vector<double> xs(5, -12.345);
  std::vector<double> ys(5);
  kern::detail::vexp_avx2(xs.data(), ys.data(), xs.size());
  for (int i = 1; i < 5; ++i) CHECK(ys[i] == ys[0]);
}

#endif  // CODESIGN_HAVE_AVX2

TEST_SUITE_END();
