#include "codesign/surrogate.hpp"

#include <cmath>
#include <tuple>
#include <vector>

#include "codesign/rng.hpp"
#include "doctest.h"

using namespace codesign;
using namespace codesign::surrogate;

namespace {

bool close_rel(double a, double b, double rel) {
  return std::abs(a - b) <= rel * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Independent GP pipeline: plain loops, explicit Gauss-Jordan inverse.
struct NaiveGP {
  std::vector<std::vector<double>> x;  // standardized
  std::vector<double> mean_x, std_x;
  double mean_y = 0, std_y = 1;
  std::vector<std::vector<double>> kinv;
  std::vector<double> ys;
  double tau, sigma2;

  NaiveGP(const Dataset& ds, double tau_, double sigma2_) : tau(tau_), sigma2(sigma2_) {
    const std::size_t n = ds.x.rows, d = ds.x.cols;
    mean_x.assign(d, 0);
    std_x.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j) {
      for (std::size_t i = 0; i < n; ++i) mean_x[j] += ds.x.at(i, j);
      mean_x[j] /= double(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = ds.x.at(i, j) - mean_x[j];
        std_x[j] += v * v;
      }
      std_x[j] = std::sqrt(std_x[j] / double(n));
      if (std_x[j] == 0) std_x[j] = 1;
    }
    x.assign(n, std::vector<double>(d));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j)
        x[i][j] = (ds.x.at(i, j) - mean_x[j]) / std_x[j];
    for (double v : ds.y) mean_y += v;
    mean_y /= double(n);
    std_y = 0;
    for (double v : ds.y) std_y += (v - mean_y) * (v - mean_y);
    std_y = std::sqrt(std_y / double(n));
    if (std_y == 0) std_y = 1;
    ys.resize(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = (ds.y[i] - mean_y) / std_y;

    std::vector<std::vector<double>> k(n, std::vector<double>(2 * n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double d2 = 0;
        for (std::size_t c = 0; c < d; ++c) {
          const double dd = x[i][c] - x[j][c];
          d2 += dd * dd;
        }
        k[i][j] = std::exp(-d2 / (2 * tau * tau));
      }
      k[i][i] += sigma2;
      k[i][n + i] = 1.0;
    }
    // Gauss-Jordan with partial pivoting.
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::abs(k[r][col]) > std::abs(k[piv][col])) piv = r;
      std::swap(k[piv], k[col]);
      const double p = k[col][col];
      for (std::size_t c = 0; c < 2 * n; ++c) k[col][c] /= p;
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = k[r][col];
        if (f == 0) continue;
        for (std::size_t c = 0; c < 2 * n; ++c) k[r][c] -= f * k[col][c];
      }
    }
    kinv.assign(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) kinv[i][j] = k[i][n + j];
  }

  std::pair<double, double> predict(const std::vector<double>& q) const {
    const std::size_t n = x.size(), d = q.size();
    std::vector<double> z(d), kstar(n);
    for (std::size_t j = 0; j < d; ++j) z[j] = (q[j] - mean_x[j]) / std_x[j];
    for (std::size_t i = 0; i < n; ++i) {
      double d2 = 0;
      for (std::size_t c = 0; c < d; ++c) {
        const double dd = z[c] - x[i][c];
        d2 += dd * dd;
      }
      kstar[i] = std::exp(-d2 / (2 * tau * tau));
    }
    double mean = 0, reduced = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double kiy = 0, kik = 0;
      for (std::size_t j = 0; j < n; ++j) {
        kiy += kinv[i][j] * ys[j];
        kik += kinv[i][j] * kstar[j];
      }
      mean += kstar[i] * kiy;
      reduced += kstar[i] * kik;
    }
    return {mean_y + std_y * mean, std::max(0.0, 1.0 - reduced) * std_y * std_y};
  }
};

Dataset synthetic_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
  rng::Xoshiro256 g = rng::Xoshiro256::seeded(seed);
  Dataset ds;
  ds.x = linalg::Matrix(n, d);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.x.at(i, j) = g.range(-2, 2);
    double y = std::sin(ds.x.at(i, 0));
    if (d > 1) y += 0.5 * std::cos(2 * ds.x.at(i, 1)) + 0.1 * ds.x.at(i, 0) * ds.x.at(i, 1);
    ds.y[i] = 3 + 2 * y + 0.01 * g.range(-1, 1);
  }
  return ds;
}

Collection quick_collection(int n, std::uint64_t seed) {
  const auto schema = space::build_schema(space::ChoiceLists::defaults());
  CollectConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  return collect_dataset(schema, cfg);
}

}  // namespace

TEST_SUITE_BEGIN("surrogate");

TEST_CASE("feature layout and locality") {
  const auto schema = space::build_schema(space::ChoiceLists::defaults());
  space::DesignPoint p = space::uniform_sample(schema, 7);
  p.accel = {{16, 32}, 512, 128, space::Dataflow::WS};
  const auto f = featurize(p);
  CHECK(f[10] == 16);
  CHECK(f[11] == 32);
  CHECK(f[12] == 9);   // log2(512)
  CHECK(f[13] == 7);   // log2(128)
  CHECK(f[14] == 1);   // WS one-hot
  CHECK(f[14] + f[15] + f[16] + f[17] == 1);

  space::DesignPoint q = p;
  q.accel.dataflow = space::Dataflow::RS;
  const auto g = featurize(q);
  for (int i = 0; i < 14; ++i) CHECK(f[i] == g[i]);
  CHECK(g[16] == 1);
  CHECK(g[14] == 0);

  double frac = 0;
  for (int i = 3; i < 9; ++i) frac += f[i];
  CHECK(close_rel(frac, 1.0, 1e-12));
  CHECK(featurize(p) == f);
}

TEST_CASE("matches the naive dense-inverse pipeline") {
  const std::tuple<std::size_t, double, double> cases[] = {{40, 1.0, 1e-3},
                                                           {200, 2.5, 1e-2}};
  for (auto [n, tau, sigma2] : cases) {
    const Dataset ds = synthetic_dataset(n, 3, 11 + n);
    const GPModel m = gp_fit(ds, tau, sigma2);
    const NaiveGP naive(ds, tau, sigma2);
    rng::Xoshiro256 g = rng::Xoshiro256::seeded(5);
    for (int rep = 0; rep < 50; ++rep) {
      const std::vector<double> q{g.range(-2, 2), g.range(-2, 2), g.range(-2, 2)};
      const Prediction got = gp_predict(m, q);
      const auto [mean, variance] = naive.predict(q);
      REQUIRE(close_rel(got.mean, mean, 1e-8));
      REQUIRE(std::abs(got.variance - variance) <= 1e-8 * std::max(1.0, variance));
    }
  }
}

TEST_CASE("interpolates its training data at zero noise") {
  // Noiseless smooth targets: white observation noise has energy in the
  // numerically-null eigenspace of the Gram matrix, which no solver can
  // reproduce at sigma2 = 0, so this invariant is stated for smooth data.
  // The length-scale stays moderate for the same reason: the wider the
  // kernel, the more of the smooth target leaks below the jitter floor.
  rng::Xoshiro256 g = rng::Xoshiro256::seeded(3);
  Dataset ds;
  const std::size_t n = 60;
  ds.x = linalg::Matrix(n, 2);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = g.range(-2, 2), x1 = g.range(-2, 2);
    ds.x.at(i, 0) = x0;
    ds.x.at(i, 1) = x1;
    ds.y[i] = 3.0 + 2.0 * (std::sin(x0) + 0.5 * std::cos(2 * x1) + 0.1 * x0 * x1);
  }
  const GPModel m = gp_fit(ds, 0.8, 0.0);
  CHECK(m.jittered);
  for (std::size_t i = 0; i < ds.x.rows; ++i) {
    std::vector<double> q(ds.x.row(i), ds.x.row(i) + ds.x.cols);
    const Prediction p = gp_predict(m, q);
    REQUIRE(close_rel(p.mean, ds.y[i], 1e-6));
    CHECK(p.variance >= 0);
    CHECK(p.variance <= m.y_stdev * m.y_stdev * (1 + 1e-12));
  }
}

TEST_CASE("far queries fall back to the prior") {
  const Dataset ds = synthetic_dataset(50, 2, 9);
  const GPModel m = gp_fit(ds, 1.0, 1e-3);
  const Prediction p = gp_predict(m, {300.0, -300.0});
  CHECK(close_rel(p.mean, m.y_mean, 1e-6));
  CHECK(close_rel(p.variance, m.y_stdev * m.y_stdev, 1e-6));
}

TEST_CASE("single training point") {
  Dataset ds;
  ds.x = linalg::Matrix(1, 1);
  ds.x.at(0, 0) = 0.7;
  ds.y = {42.0};
  for (double sigma2 : {0.0, 0.5}) {
    const GPModel m = gp_fit(ds, 1.0, sigma2);
    // Standardized target is 0, so the standardized prediction 0/(1+sigma2)
    // de-standardizes back to the target for every noise level.
    CHECK(close_rel(gp_predict(m, {0.7}).mean, 42.0, 1e-12));
  }
}

TEST_CASE("two points against the hand-solved 2x2 system") {
  Dataset ds;
  ds.x = linalg::Matrix(2, 1);
  ds.x.at(0, 0) = -1;
  ds.x.at(1, 0) = 3;
  ds.y = {10.0, 14.0};
  const double tau = 2.0, sigma2 = 0.01;
  const GPModel m = gp_fit(ds, tau, sigma2);

  // Standardization: mean 1, stdev 2 -> xs = {-1, +1}; ys = {-1, +1}.
  const double k = std::exp(-4.0 / (2 * tau * tau));  // standardized distance 2
  const double a = 1 + sigma2;
  // alpha = (K + sigma2 I)^-1 ys = 1/det [[a, -k], [-k, a]] (-1, 1).
  const double det = a * a - k * k;
  const double e0 = (-a - k) / det, e1 = (k + a) / det;

  const double q = 1.0;  // raw x = 1 -> standardized 0, distance 1 to both
  const double ks = std::exp(-1.0 / (2 * tau * tau));
  const double mean_s = ks * e0 + ks * e1;  // = 0 by symmetry
  CHECK(close_rel(gp_predict(m, {q}).mean, 12.0 + 2.0 * mean_s, 1e-12));

  const double q2 = 3.0;  // standardized 1: distance 2 to x0, 0 to x1
  const double k0 = std::exp(-4.0 / (2 * tau * tau)), k1 = 1.0;
  CHECK(close_rel(gp_predict(m, {q2}).mean, 12.0 + 2.0 * (k0 * e0 + k1 * e1), 1e-12));
}

TEST_CASE("duplicate rows regularized by noise or jitter") {
  Dataset ds;
  ds.x = linalg::Matrix(4, 2);
  for (int i = 0; i < 4; ++i) {
    ds.x.at(i, 0) = i < 2 ? 0.0 : 1.0;  // two duplicate pairs
    ds.x.at(i, 1) = i < 2 ? 0.0 : 1.0;
  }
  ds.y = {1.0, 2.0, 3.0, 4.0};
  CHECK_NOTHROW(gp_fit(ds, 1.0, 1e-2));
  const GPModel m = gp_fit(ds, 1.0, 0.0);  // jitter floor carries it
  CHECK(m.jittered);
  // Conflicting duplicate targets average out at the shared input.
  CHECK(close_rel(gp_predict(m, {0.0, 0.0}).mean, 1.5, 1e-3));
}

TEST_CASE("fit and predict input validation") {
  const Dataset ds = synthetic_dataset(10, 2, 1);
  CHECK_THROWS_AS(gp_fit(ds, 0.0, 0.1), ConfigError);
  CHECK_THROWS_AS(gp_fit(ds, -1.0, 0.1), ConfigError);
  CHECK_THROWS_AS(gp_fit(ds, 1.0, -0.1), ConfigError);
  Dataset empty;
  CHECK_THROWS_AS(gp_fit(empty, 1.0, 0.1), ConfigError);
  Dataset big;
  big.x = linalg::Matrix(kMaxGpPoints + 1, 1);
  big.y.assign(kMaxGpPoints + 1, 0.0);
  CHECK_THROWS_AS(gp_fit(big, 1.0, 0.1), ConfigError);
  const GPModel m = gp_fit(ds, 1.0, 0.1);
  CHECK_THROWS_AS(gp_predict(m, {1.0}), ConfigError);
  CHECK_THROWS_AS(gp_predict(m, {1.0, 2.0, 3.0}), ConfigError);
}

TEST_CASE("hyperparameter selection recovers the generating length-scale") {
  // Draw y ~ GP(0, RBF(tau=2)) + noise on 200 points, d=2.  Three details
  // keep the generating tau identifiable on the model's own scale: inputs are
  // pre-standardized (so gp_fit's standardization is the identity and tau=2
  // sits exactly on the grid), they mix a wide tail into a dense core (a
  // stdev-1 uniform cloud spans under two length-scales, too few degrees of
  // freedom to pin tau down), and the drawn surface is renormalized to unit
  // sample stdev (target standardization otherwise rescales the amplitude
  // away from the model's fixed unit signal variance).
  const double true_tau = 2.0;
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    rng::Xoshiro256 g = rng::Xoshiro256::seeded(900 + seed);
    const std::size_t n = 200;
    Dataset ds;
    ds.x = linalg::Matrix(n, 2);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        const double a = g.uniform() < 0.25 ? 7.0 : 1.2;
        ds.x.at(i, j) = g.range(-a, a);
      }
    const Standardization st = fit_standardization(ds.x);
    for (std::size_t i = 0; i < n; ++i)
      standardize_row(st, ds.x.row(i), ds.x.row(i));
    linalg::Matrix k(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const double dx = ds.x.at(i, 0) - ds.x.at(j, 0);
        const double dy = ds.x.at(i, 1) - ds.x.at(j, 1);
        k.at(i, j) = std::exp(-(dx * dx + dy * dy) / (2 * true_tau * true_tau));
        if (i == j) k.at(i, j) += 1e-8;
      }
    REQUIRE(linalg::cholesky_inplace(k));
    std::vector<double> z(n);
    for (std::size_t i = 0; i < n; i += 2) {
      // Box-Muller from the owned uniform stream.
      const double u1 = std::max(g.uniform(), 1e-300), u2 = g.uniform();
      const double r = std::sqrt(-2 * std::log(u1));
      z[i] = r * std::cos(2 * 3.14159265358979323846 * u2);
      if (i + 1 < n) z[i + 1] = r * std::sin(2 * 3.14159265358979323846 * u2);
    }
    ds.y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j <= i; ++j) ds.y[i] += k.at(i, j) * z[j];
    double mu = 0;
    for (double v : ds.y) mu += v;
    mu /= double(n);
    double var = 0;
    for (double v : ds.y) var += (v - mu) * (v - mu);
    const double s = std::sqrt(var / double(n));
    for (double& v : ds.y) v = (v - mu) / s;
    for (std::size_t i = 0; i < n; ++i) ds.y[i] += 0.01 * g.range(-1, 1);

    if (select_hyperparams(ds).tau == true_tau) ++hits;
  }
  CHECK(hits >= 9);
}

TEST_CASE("selection grids and tie-breaks") {
  const Dataset ds = synthetic_dataset(30, 2, 17);
  const HyperparamChoice one = select_hyperparams(ds, {3.0}, {1e-2});
  CHECK(one.tau == 3.0);
  CHECK(one.sigma2 == 1e-2);
  const HyperparamChoice a = select_hyperparams(ds, {0.5, 1, 2, 4, 8}, {1e-4, 1e-3, 1e-2, 1e-1});
  const HyperparamChoice b = select_hyperparams(ds, {8, 4, 2, 1, 0.5}, {1e-1, 1e-2, 1e-3, 1e-4});
  CHECK(a.tau == b.tau);
  CHECK(a.sigma2 == b.sigma2);
  CHECK_THROWS_AS(select_hyperparams(ds, {}, {1e-2}), ConfigError);
}

TEST_CASE("collection is deterministic and feasible on the default space") {
  const Collection a = quick_collection(24, 42);
  const Collection b = quick_collection(24, 42);
  REQUIRE(a.rows.size() == 24);
  CHECK(a.redraws.empty());  // in-range buffers always admit a minimal tiling
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    CHECK(a.rows[i].decisions == b.rows[i].decisions);
    CHECK(a.rows[i].features == b.rows[i].features);
    CHECK(a.rows[i].latency_ms == b.rows[i].latency_ms);
    CHECK(a.rows[i].energy_mj == b.rows[i].energy_mj);
    CHECK(a.rows[i].latency_ms > 0);
    CHECK(a.rows[i].energy_mj > 0);
    CHECK(a.rows[i].decisions.size() == 44);
  }
  const Collection c = quick_collection(24, 43);
  bool differs = false;
  for (std::size_t i = 0; i < 24; ++i)
    if (c.rows[i].decisions != a.rows[i].decisions) differs = true;
  CHECK(differs);

  CHECK(quick_collection(2, 1).rows.size() == 2);
  const auto schema = space::build_schema(space::ChoiceLists::defaults());
  CollectConfig bad;
  bad.n = 1;
  CHECK_THROWS_AS(collect_dataset(schema, bad), ConfigError);
  bad.n = 2;
  bad.attempt_cap = 0;
  CHECK_THROWS_AS(collect_dataset(schema, bad), ConfigError);
}

TEST_CASE("dataset extraction and log targets") {
  const Collection c = quick_collection(10, 5);
  const Dataset lat = make_dataset(c, Metric::Latency, false, 0, 10);
  const Dataset loge = make_dataset(c, Metric::Energy, true, 2, 10);
  CHECK(lat.x.rows == 10);
  CHECK(loge.x.rows == 8);
  CHECK(lat.y[3] == c.rows[3].latency_ms);
  CHECK(close_rel(loge.y[0], std::log10(c.rows[2].energy_mj), 1e-15));
  CHECK_THROWS_AS(make_dataset(c, Metric::Latency, false, 5, 3), ConfigError);
  CHECK_THROWS_AS(make_dataset(c, Metric::Latency, false, 0, 11), ConfigError);
}

TEST_CASE("sample table text round trip") {
  const auto schema = space::build_schema(space::ChoiceLists::defaults());
  const Collection c = quick_collection(6, 77);
  const std::string text = collection_to_text(c, schema);
  const Collection back = collection_from_text(text, schema);
  REQUIRE(back.rows.size() == c.rows.size());
  for (std::size_t i = 0; i < c.rows.size(); ++i) {
    CHECK(back.rows[i].decisions == c.rows[i].decisions);
    CHECK(back.rows[i].features == c.rows[i].features);
    CHECK(back.rows[i].latency_ms == c.rows[i].latency_ms);
    CHECK(back.rows[i].energy_mj == c.rows[i].energy_mj);
  }
  CHECK_THROWS_AS(collection_from_text("bogus header\n1 2 3\n", schema), DecodeError);
  const std::string truncated = text.substr(0, text.size() - 20);
  CHECK_THROWS_AS(collection_from_text(truncated, schema), DecodeError);
  CHECK_THROWS_AS(collection_from_text(text + "7 7 7\n", schema), DecodeError);
}

TEST_CASE("model text round trip preserves predictions bitwise") {
  const Dataset ds = synthetic_dataset(80, 3, 23);
  const GPModel m = gp_fit(ds, 1.7, 1e-3);
  const GPModel r = model_from_text(model_to_text(m));
  CHECK(r.tau == m.tau);
  CHECK(r.sigma2 == m.sigma2);
  rng::Xoshiro256 g = rng::Xoshiro256::seeded(3);
  for (int i = 0; i < 20; ++i) {
    const std::vector<double> q{g.range(-2, 2), g.range(-2, 2), g.range(-2, 2)};
    const Prediction a = gp_predict(m, q);
    const Prediction b = gp_predict(r, q);
    CHECK(a.mean == b.mean);
    CHECK(a.variance == b.variance);
  }
  CHECK(model_to_text(r) == model_to_text(m));
  CHECK_THROWS_AS(model_from_text("gp-model x"), DecodeError);
  std::string text = model_to_text(m);
  CHECK_THROWS_AS(model_from_text(text + "extra"), DecodeError);
  CHECK_THROWS_AS(model_from_text(text.substr(0, text.size() / 2)), DecodeError);
}

TEST_CASE("harness on constant targets") {
  Dataset train = synthetic_dataset(50, 2, 31), test = synthetic_dataset(20, 2, 32);
  std::fill(train.y.begin(), train.y.end(), 5.0);
  std::fill(test.y.begin(), test.y.end(), 5.0);
  const HarnessResult r = mse_harness(train, test, {"gp", "knn5", "ridge"}, false);
  REQUIRE(r.rows.size() == 3);
  for (const RegressorReport& row : r.rows) {
    CHECK(row.mse <= 1e-6);
    CHECK(row.predicts_per_second > 0);
  }
  CHECK(r.rows[0].mse <= 1e-6);
  const std::string text = harness_to_text(r);
  CHECK(text.find("gp ") != std::string::npos);
  CHECK(text.find("ridge ") != std::string::npos);
  CHECK_THROWS_AS(mse_harness(train, test, {"forest"}, false), ConfigError);
}

TEST_CASE("gp beats ridge on a smooth nonlinear surface") {
  const Dataset train = synthetic_dataset(300, 2, 41);
  const Dataset test = synthetic_dataset(100, 2, 42);
  const HarnessResult r = mse_harness(train, test, {"gp", "ridge"}, false, 0.02);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].mse <= r.rows[1].mse);
  CHECK(r.gp_speedup_vs_simulator > 0);
}

TEST_SUITE_END();
