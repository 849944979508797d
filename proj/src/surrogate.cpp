#include "codesign/surrogate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "codesign/kernels.hpp"
#include "codesign/rng.hpp"

namespace codesign::surrogate {

const std::array<const char*, kFeatureDim> kFeatureNames = {
    "log10_macs",    "log10_params",  "depth",          "frac_conv3x3",
    "frac_conv5x5",  "frac_dwconv3x3", "frac_dwconv5x5", "frac_maxpool",
    "frac_avgpool",  "reductions",    "pe_rows",        "pe_cols",
    "log2_gbuf_kb",  "log2_rbuf_bytes", "df_ws",        "df_os",
    "df_rs",         "df_nlr"};

std::array<double, kFeatureDim> featurize(const lower::ArchSummary& s,
                                          const space::AcceleratorConfig& a) {
  std::array<double, kFeatureDim> f{};
  f[0] = std::log10(double(s.total_macs));
  f[1] = std::log10(double(s.total_params));
  f[2] = double(s.depth);
  int ops = 0;
  for (int k = 0; k < space::kOpCount; ++k) ops += s.op_hist[k];
  for (int k = 0; k < space::kOpCount; ++k)
    f[3 + k] = ops ? double(s.op_hist[k]) / double(ops) : 0.0;
  f[9] = double(s.reductions);
  f[10] = double(a.pe.rows);
  f[11] = double(a.pe.cols);
  f[12] = std::log2(double(a.g_buf_kb));
  f[13] = std::log2(double(a.r_buf_bytes));
  f[14 + static_cast<int>(a.dataflow)] = 1.0;
  return f;
}

std::array<double, kFeatureDim> featurize(const space::DesignPoint& point,
                                          const lower::MacroConfig& macro) {
  return featurize(lower::arch_summary(lower::derive_network(point.dnn, macro)),
                   point.accel);
}

Standardization fit_standardization(const linalg::Matrix& x) {
  Standardization s;
  s.mean.assign(x.cols, 0.0);
  s.stdev.assign(x.cols, 1.0);
  s.constant.assign(x.cols, false);
  if (x.rows == 0) return s;
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) s.mean[j] += x.at(i, j);
  for (double& m : s.mean) m /= double(x.rows);
  std::vector<double> var(x.cols, 0.0);
  for (std::size_t i = 0; i < x.rows; ++i)
    for (std::size_t j = 0; j < x.cols; ++j) {
      const double d = x.at(i, j) - s.mean[j];
      var[j] += d * d;
    }
  for (std::size_t j = 0; j < x.cols; ++j) {
    const double sd = std::sqrt(var[j] / double(x.rows));
    if (sd > 0) {
      s.stdev[j] = sd;
    } else {
      s.stdev[j] = 1.0;
      s.constant[j] = true;
    }
  }
  return s;
}

void standardize_row(const Standardization& s, const double* in, double* out) {
  for (std::size_t j = 0; j < s.mean.size(); ++j)
    out[j] = (in[j] - s.mean[j]) / s.stdev[j];
}

namespace {

// K = exp(-sqdist / (2 tau^2)) over the rows of xs, plus `diag` on the
// diagonal.
linalg::Matrix kernel_matrix(const linalg::Matrix& xs, double tau, double diag) {
  const std::size_t n = xs.rows;
  linalg::Matrix k(n, n);
  const double scale = -1.0 / (2.0 * tau * tau);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    kern::sqdist_rows(xs.a.data(), n, xs.cols, xs.row(i), d2.data());
    for (double& v : d2) v *= scale;
    kern::vexp(d2.data(), k.row(i), n);
    k.at(i, i) += diag;
  }
  return k;
}

void kernel_vector(const linalg::Matrix& xs, double tau, const double* z,
                   std::vector<double>& out) {
  out.resize(xs.rows);
  kern::sqdist_rows(xs.a.data(), xs.rows, xs.cols, z, out.data());
  const double scale = -1.0 / (2.0 * tau * tau);
  for (double& v : out) v *= scale;
  kern::vexp(out.data(), out.data(), xs.rows);
}

std::vector<double> standardized_query(const GPModel& m, const std::vector<double>& x) {
  if (x.size() != m.fstd.mean.size())
    throw ConfigError("prediction input has dimension " + std::to_string(x.size()) +
                      ", model expects " + std::to_string(m.fstd.mean.size()));
  std::vector<double> z(x.size());
  standardize_row(m.fstd, x.data(), z.data());
  return z;
}

// Factor the kernel, solve for alpha with one round of iterative refinement
// (keeps training residuals near machine precision on badly conditioned
// kernels), and recompute the log marginal.  Shared by fit and model load so
// loaded models reproduce fitted predictions bitwise.
void factor_solve_refine(GPModel& m, const char* fail_msg) {
  const std::size_t n = m.xs.rows;
  const double diag = m.sigma2 + (m.jittered ? kJitterFloor : 0.0);
  const linalg::Matrix k = kernel_matrix(m.xs, m.tau, diag);
  m.chol = k;
  if (!linalg::cholesky_inplace(m.chol)) throw ConditioningError(fail_msg);
  m.alpha = linalg::solve_cholesky(m.chol, m.ys);
  std::vector<double> resid(n);
  kern::matvec(k.a.data(), m.alpha.data(), resid.data(), n, n);
  for (std::size_t i = 0; i < n; ++i) resid[i] = m.ys[i] - resid[i];
  const std::vector<double> corr = linalg::solve_cholesky(m.chol, resid);
  for (std::size_t i = 0; i < n; ++i) m.alpha[i] += corr[i];

  double fit = 0, logdet = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fit += m.ys[i] * m.alpha[i];
    logdet += std::log(m.chol.at(i, i));
  }
  m.log_marginal = -0.5 * fit - logdet -
                   0.5 * double(n) * std::log(2.0 * 3.141592653589793238462643383279502884);
}

}  // namespace

GPModel gp_fit(const Dataset& ds, double tau, double sigma2) {
  if (!(tau > 0)) throw ConfigError("gp_fit requires tau > 0");
  if (!(sigma2 >= 0)) throw ConfigError("gp_fit requires sigma2 >= 0");
  const std::size_t n = ds.x.rows;
  if (n < 1) throw ConfigError("gp_fit requires at least one sample");
  if (n != ds.y.size()) throw ConfigError("feature/target row counts disagree");
  if (n > kMaxGpPoints)
    throw ConfigError("gp_fit is capped at " + std::to_string(kMaxGpPoints) +
                      " points, got " + std::to_string(n));

  GPModel m;
  m.tau = tau;
  m.sigma2 = sigma2;
  m.jittered = sigma2 == 0;
  m.fstd = fit_standardization(ds.x);
  m.xs = linalg::Matrix(n, ds.x.cols);
  for (std::size_t i = 0; i < n; ++i)
    standardize_row(m.fstd, ds.x.row(i), m.xs.row(i));

  m.y_mean = std::accumulate(ds.y.begin(), ds.y.end(), 0.0) / double(n);
  double var = 0;
  for (double v : ds.y) var += (v - m.y_mean) * (v - m.y_mean);
  m.y_stdev = var > 0 ? std::sqrt(var / double(n)) : 1.0;
  m.ys.resize(n);
  for (std::size_t i = 0; i < n; ++i) m.ys[i] = (ds.y[i] - m.y_mean) / m.y_stdev;

  factor_solve_refine(m,
                      "kernel factorization failed; raise sigma2 (a jitter "
                      "floor of 1e-10 is already applied when sigma2 = 0)");
  return m;
}

Prediction gp_predict(const GPModel& m, const std::vector<double>& x) {
  const std::vector<double> z = standardized_query(m, x);
  std::vector<double> kstar;
  kernel_vector(m.xs, m.tau, z.data(), kstar);
  Prediction p;
  p.mean = m.y_mean + m.y_stdev * kern::dot(kstar.data(), m.alpha.data(), kstar.size());
  std::vector<double> v(kstar.size());
  linalg::solve_lower(m.chol, kstar.data(), v.data());
  const double reduced = kern::dot(v.data(), v.data(), v.size());
  p.variance = std::max(0.0, 1.0 - reduced) * m.y_stdev * m.y_stdev;
  return p;
}

double gp_predict_mean(const GPModel& m, const std::vector<double>& x) {
  const std::vector<double> z = standardized_query(m, x);
  std::vector<double> kstar;
  kernel_vector(m.xs, m.tau, z.data(), kstar);
  return m.y_mean + m.y_stdev * kern::dot(kstar.data(), m.alpha.data(), kstar.size());
}

HyperparamChoice select_hyperparams(const Dataset& ds,
                                    const std::vector<double>& tau_grid,
                                    const std::vector<double>& sigma2_grid) {
  if (tau_grid.empty() || sigma2_grid.empty())
    throw ConfigError("hyperparameter grids must be non-empty");
  bool found = false;
  HyperparamChoice best;
  for (double tau : tau_grid)
    for (double sigma2 : sigma2_grid) {
      double lml;
      try {
        lml = gp_fit(ds, tau, sigma2).log_marginal;
      } catch (const ConditioningError&) {
        continue;
      }
      const bool better =
          !found || lml > best.log_marginal ||
          (lml == best.log_marginal &&
           (tau < best.tau || (tau == best.tau && sigma2 < best.sigma2)));
      if (better) {
        found = true;
        best = {tau, sigma2, lml};
      }
    }
  if (!found)
    throw ConditioningError("no hyperparameter grid point produced a usable fit");
  return best;
}

const char* metric_name(Metric m) {
  return m == Metric::Latency ? "latency_ms" : "energy_mj";
}

Collection collect_dataset(const space::DecisionSchema& schema,
                           const CollectConfig& cfg) {
  if (cfg.n < 2) throw ConfigError("collect_dataset requires n >= 2");
  if (cfg.attempt_cap < 1) throw ConfigError("attempt_cap must be positive");

  Collection out;
  out.rows.reserve(cfg.n);
  for (int i = 0; i < cfg.n; ++i) {
    const std::uint64_t row_seed = rng::mix_seed(cfg.seed, std::uint64_t(i));
    bool done = false;
    for (int attempt = 0; attempt < cfg.attempt_cap && !done; ++attempt) {
      const space::DesignPoint point =
          space::uniform_sample(schema, rng::mix_seed(row_seed, std::uint64_t(attempt)));
      const lower::LayerGraph graph = lower::derive_network(point.dnn, cfg.macro);
      cost::HardwareModel hw = cfg.base_hw;
      hw.accel = point.accel;
      cost::CostReport report;
      try {
        report = cost::simulate(graph, hw);
      } catch (const InfeasibleError& e) {
        out.redraws.push_back(RedrawEvent{i, attempt, e.what()});
        continue;
      }
      SampleRow row;
      row.decisions = space::encode(point, schema);
      row.features = featurize(lower::arch_summary(graph), point.accel);
      row.latency_ms = report.latency_ms;
      row.energy_mj = report.energy_mj;
      out.rows.push_back(std::move(row));
      done = true;
    }
    if (!done)
      throw CollectError("sample " + std::to_string(i) + ": no feasible design in " +
                         std::to_string(cfg.attempt_cap) + " draws");
  }
  return out;
}

Dataset make_dataset(const Collection& c, Metric metric, bool log10_targets,
                     std::size_t begin, std::size_t end) {
  if (begin >= end || end > c.rows.size())
    throw ConfigError("dataset row range out of bounds");
  Dataset ds;
  ds.x = linalg::Matrix(end - begin, kFeatureDim);
  ds.y.resize(end - begin);
  for (std::size_t i = begin; i < end; ++i) {
    const SampleRow& r = c.rows[i];
    std::copy(r.features.begin(), r.features.end(), ds.x.row(i - begin));
    const double t = metric == Metric::Latency ? r.latency_ms : r.energy_mj;
    if (log10_targets && !(t > 0))
      throw RuntimeFailure("log-space dataset needs positive targets");
    ds.y[i - begin] = log10_targets ? std::log10(t) : t;
  }
  return ds;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string collection_to_text(const Collection& c,
                               const space::DecisionSchema& schema) {
  std::ostringstream os;
  for (const auto& step : schema.steps) os << step.name << ' ';
  for (const char* name : kFeatureNames) os << name << ' ';
  os << "latency_ms energy_mj\n";
  for (const SampleRow& r : c.rows) {
    if (r.decisions.size() != schema.steps.size())
      throw ConfigError("sample decision count disagrees with the schema");
    for (int d : r.decisions) os << d << ' ';
    for (double f : r.features) os << fmt(f) << ' ';
    os << fmt(r.latency_ms) << ' ' << fmt(r.energy_mj) << "\n";
  }
  return os.str();
}

Collection collection_from_text(const std::string& text,
                                const space::DecisionSchema& schema) {
  std::istringstream is(text);
  std::string header;
  if (!std::getline(is, header)) throw DecodeError("empty sample file");
  std::istringstream hs(header);
  std::string tok;
  for (const auto& step : schema.steps) {
    if (!(hs >> tok) || tok != step.name)
      throw DecodeError("sample file header does not match the decision schema");
  }
  for (const char* name : kFeatureNames)
    if (!(hs >> tok) || tok != name)
      throw DecodeError("sample file header does not match the feature layout");
  if (!(hs >> tok) || tok != "latency_ms" || !(hs >> tok) || tok != "energy_mj" ||
      (hs >> tok))
    throw DecodeError("sample file header must end with latency_ms energy_mj");

  Collection c;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    SampleRow r;
    r.decisions.resize(schema.steps.size());
    for (int& d : r.decisions)
      if (!(ls >> d)) throw DecodeError("truncated decision columns in sample row");
    for (double& f : r.features)
      if (!(ls >> f)) throw DecodeError("truncated feature columns in sample row");
    if (!(ls >> r.latency_ms >> r.energy_mj))
      throw DecodeError("missing target columns in sample row");
    double extra;
    if (ls >> extra) throw DecodeError("trailing columns in sample row");
    c.rows.push_back(std::move(r));
  }
  if (c.rows.empty()) throw DecodeError("sample file has no rows");
  return c;
}

std::string model_to_text(const GPModel& m) {
  std::ostringstream os;
  os << "gp-model " << m.xs.rows << ' ' << m.xs.cols << "\n";
  os << "tau " << fmt(m.tau) << " sigma2 " << fmt(m.sigma2) << "\n";
  os << "y_mean " << fmt(m.y_mean) << " y_stdev " << fmt(m.y_stdev) << "\n";
  os << "feature_mean";
  for (double v : m.fstd.mean) os << ' ' << fmt(v);
  os << "\nfeature_stdev";
  for (double v : m.fstd.stdev) os << ' ' << fmt(v);
  os << "\nfeature_const";
  for (bool b : m.fstd.constant) os << ' ' << int(b);
  os << "\n";
  for (std::size_t i = 0; i < m.xs.rows; ++i) {
    os << "x";
    for (std::size_t j = 0; j < m.xs.cols; ++j) os << ' ' << fmt(m.xs.at(i, j));
    os << "\n";
  }
  os << "ys";
  for (double v : m.ys) os << ' ' << fmt(v);
  os << "\n";
  return os.str();
}

GPModel model_from_text(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  std::size_t n = 0, d = 0;
  if (!(is >> tag >> n >> d) || tag != "gp-model" || n < 1 || d < 1)
    throw DecodeError("expected 'gp-model <n> <d>' header");
  if (n > kMaxGpPoints) throw DecodeError("stored model exceeds the point cap");

  GPModel m;
  std::string t2;
  if (!(is >> tag >> m.tau >> t2 >> m.sigma2) || tag != "tau" || t2 != "sigma2")
    throw DecodeError("expected tau/sigma2 line");
  if (!(m.tau > 0) || !(m.sigma2 >= 0)) throw DecodeError("bad hyperparameters");
  if (!(is >> tag >> m.y_mean >> t2 >> m.y_stdev) || tag != "y_mean" || t2 != "y_stdev")
    throw DecodeError("expected y_mean/y_stdev line");
  if (!(m.y_stdev > 0)) throw DecodeError("y_stdev must be positive");

  m.fstd.mean.resize(d);
  m.fstd.stdev.resize(d);
  m.fstd.constant.resize(d);
  if (!(is >> tag) || tag != "feature_mean") throw DecodeError("expected feature_mean");
  for (double& v : m.fstd.mean)
    if (!(is >> v)) throw DecodeError("truncated feature_mean");
  if (!(is >> tag) || tag != "feature_stdev") throw DecodeError("expected feature_stdev");
  for (double& v : m.fstd.stdev) {
    if (!(is >> v)) throw DecodeError("truncated feature_stdev");
    if (!(v > 0)) throw DecodeError("feature stdev must be positive");
  }
  if (!(is >> tag) || tag != "feature_const") throw DecodeError("expected feature_const");
  for (std::size_t j = 0; j < d; ++j) {
    int b;
    if (!(is >> b) || (b != 0 && b != 1)) throw DecodeError("bad feature_const flag");
    m.fstd.constant[j] = b == 1;
  }

  m.xs = linalg::Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(is >> tag) || tag != "x") throw DecodeError("expected feature row");
    for (std::size_t j = 0; j < d; ++j)
      if (!(is >> m.xs.at(i, j))) throw DecodeError("truncated feature row");
  }
  if (!(is >> tag) || tag != "ys") throw DecodeError("expected ys line");
  m.ys.resize(n);
  for (double& v : m.ys)
    if (!(is >> v)) throw DecodeError("truncated ys line");
  if (is >> tag) throw DecodeError("trailing content in model file");

  // The factor and alpha are rebuilt rather than stored; the arithmetic is
  // deterministic, so predictions match the saved model exactly.
  m.jittered = m.sigma2 == 0;
  factor_solve_refine(m, "stored model kernel failed to factorize");
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double hi = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
  }
  return hi;
}

// Shared scoring: predictions arrive in fit space; errors are computed on
// linear targets.
RegressorReport score(const std::string& name, const std::vector<double>& pred_fit,
                      const std::vector<double>& truth_linear, bool log_space,
                      double fit_seconds, double predicts_per_second) {
  RegressorReport r;
  r.name = name;
  r.fit_seconds = fit_seconds;
  r.predicts_per_second = predicts_per_second;
  std::vector<double> apes;
  apes.reserve(truth_linear.size());
  double sq = 0;
  for (std::size_t i = 0; i < truth_linear.size(); ++i) {
    const double pred = log_space ? std::pow(10.0, pred_fit[i]) : pred_fit[i];
    const double err = pred - truth_linear[i];
    sq += err * err;
    apes.push_back(std::abs(err) / std::abs(truth_linear[i]));
  }
  r.mse = sq / double(truth_linear.size());
  r.median_ape = median(std::move(apes));
  return r;
}

std::vector<double> to_fit_space(const std::vector<double>& y, bool log_space) {
  if (!log_space) return y;
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0)) throw RuntimeFailure("log-space fitting needs positive targets");
    out[i] = std::log10(y[i]);
  }
  return out;
}

}  // namespace

HarnessResult mse_harness(const Dataset& train, const Dataset& test,
                          const std::vector<std::string>& regressors,
                          bool log10_targets, double sim_seconds_per_point) {
  if (train.x.cols != test.x.cols)
    throw ConfigError("train/test feature dimensions disagree");
  if (regressors.empty()) throw ConfigError("regressor list must be non-empty");
  const std::size_t n = train.x.rows, nt = test.x.rows;
  if (n < 2 || nt < 1) throw ConfigError("harness needs at least 2 train and 1 test rows");

  Dataset train_fit{train.x, to_fit_space(train.y, log10_targets)};

  HarnessResult out;
  out.sim_seconds_per_point = sim_seconds_per_point;
  for (const std::string& name : regressors) {
    std::vector<double> preds(nt);
    double fit_seconds = 0, pps = 0;

    if (name == "gp") {
      const auto t0 = Clock::now();
      const HyperparamChoice hp = select_hyperparams(train_fit);
      const GPModel model = gp_fit(train_fit, hp.tau, hp.sigma2);
      fit_seconds = seconds_since(t0);
      std::vector<double> q(train.x.cols);
      const auto p0 = Clock::now();
      std::size_t calls = 0;
      do {
        for (std::size_t i = 0; i < nt; ++i) {
          q.assign(test.x.row(i), test.x.row(i) + test.x.cols);
          preds[i] = gp_predict_mean(model, q);
        }
        calls += nt;
      } while (seconds_since(p0) < 0.2);
      pps = double(calls) / seconds_since(p0);
    } else if (name == "knn5") {
      const auto t0 = Clock::now();
      const Standardization fs = fit_standardization(train.x);
      linalg::Matrix xs(n, train.x.cols);
      for (std::size_t i = 0; i < n; ++i)
        standardize_row(fs, train.x.row(i), xs.row(i));
      fit_seconds = seconds_since(t0);
      const std::size_t k = std::min<std::size_t>(5, n);
      std::vector<double> z(train.x.cols), d2(n);
      std::vector<std::size_t> idx(n);
      const auto p0 = Clock::now();
      std::size_t calls = 0;
      do {
        for (std::size_t i = 0; i < nt; ++i) {
          standardize_row(fs, test.x.row(i), z.data());
          kern::sqdist_rows(xs.a.data(), n, xs.cols, z.data(), d2.data());
          std::iota(idx.begin(), idx.end(), std::size_t{0});
          std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(),
                           [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
          double sum = 0;
          for (std::size_t j = 0; j < k; ++j) sum += train_fit.y[idx[j]];
          preds[i] = sum / double(k);
        }
        calls += nt;
      } while (seconds_since(p0) < 0.2);
      pps = double(calls) / seconds_since(p0);
    } else if (name == "ridge") {
      const auto t0 = Clock::now();
      const Standardization fs = fit_standardization(train.x);
      const std::size_t d = train.x.cols;
      const double y_mean =
          std::accumulate(train_fit.y.begin(), train_fit.y.end(), 0.0) / double(n);
      linalg::Matrix xs(n, d);
      for (std::size_t i = 0; i < n; ++i)
        standardize_row(fs, train.x.row(i), xs.row(i));
      linalg::Matrix g(d, d);
      std::vector<double> rhs(d, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = xs.row(i);
        for (std::size_t a = 0; a < d; ++a) {
          for (std::size_t b = 0; b <= a; ++b) g.at(a, b) += row[a] * row[b];
          rhs[a] += row[a] * (train_fit.y[i] - y_mean);
        }
      }
      const double lambda = 1e-3 * double(n);
      for (std::size_t a = 0; a < d; ++a) {
        g.at(a, a) += lambda;
        for (std::size_t b = a + 1; b < d; ++b) g.at(a, b) = g.at(b, a);
      }
      if (!linalg::cholesky_inplace(g))
        throw ConditioningError("ridge normal equations failed to factorize");
      const std::vector<double> w = linalg::solve_cholesky(g, rhs);
      fit_seconds = seconds_since(t0);
      std::vector<double> z(d);
      const auto p0 = Clock::now();
      std::size_t calls = 0;
      do {
        for (std::size_t i = 0; i < nt; ++i) {
          standardize_row(fs, test.x.row(i), z.data());
          preds[i] = y_mean + kern::dot(z.data(), w.data(), d);
        }
        calls += nt;
      } while (seconds_since(p0) < 0.2);
      pps = double(calls) / seconds_since(p0);
    } else {
      throw ConfigError("unknown regressor '" + name +
                        "' (expected gp, knn5, or ridge)");
    }

    out.rows.push_back(
        score(name, preds, test.y, log10_targets, fit_seconds, pps));
    if (name == "gp" && sim_seconds_per_point > 0)
      out.gp_speedup_vs_simulator = sim_seconds_per_point * pps;
  }
  return out;
}

std::string harness_to_text(const HarnessResult& r) {
  std::ostringstream os;
  os << "regressor mse median_ape fit_seconds predicts_per_second\n";
  char buf[160];
  for (const RegressorReport& row : r.rows) {
    std::snprintf(buf, sizeof buf, "%s %.6g %.6g %.6g %.6g\n", row.name.c_str(),
                  row.mse, row.median_ape, row.fit_seconds, row.predicts_per_second);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "simulator_seconds_per_point %.6g\n",
                r.sim_seconds_per_point);
  os << buf;
  std::snprintf(buf, sizeof buf, "gp_speedup_vs_simulator %.6g\n",
                r.gp_speedup_vs_simulator);
  os << buf;
  return os.str();
}

}  // namespace codesign::surrogate
