#pragma once
// Gaussian-process regression over design points, the dataset-collection
// pipeline feeding it, and the regressor comparison harness.  One GP is fit
// per metric; features and targets are standardized inside gp_fit using the
// training data only, and predictions are de-standardized on the way out.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "codesign/cost_model.hpp"
#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"
#include "codesign/linalg.hpp"
#include "codesign/lowering.hpp"

namespace codesign::surrogate {

// log10(macs), log10(params), depth, 6 op fractions, reductions, pe_rows,
// pe_cols, log2(g_buf_kb), log2(r_buf_bytes), 4-slot dataflow one-hot.
inline constexpr int kFeatureDim = 18;

extern const std::array<const char*, kFeatureDim> kFeatureNames;

std::array<double, kFeatureDim> featurize(const lower::ArchSummary& summary,
                                          const space::AcceleratorConfig& accel);
std::array<double, kFeatureDim> featurize(const space::DesignPoint& point,
                                          const lower::MacroConfig& macro = {});

// Raw (unstandardized) feature rows with one target column.
struct Dataset {
  linalg::Matrix x;
  std::vector<double> y;
};

// Per-column affine transform fitted on training data; constant columns get
// stdev 1 so standardization stays invertible.
struct Standardization {
  std::vector<double> mean;
  std::vector<double> stdev;
  std::vector<bool> constant;
};

Standardization fit_standardization(const linalg::Matrix& x);
void standardize_row(const Standardization& s, const double* in, double* out);

struct GPModel {
  linalg::Matrix xs;            // standardized training features
  std::vector<double> ys;       // standardized training targets
  std::vector<double> alpha;    // (K + sigma2 I)^-1 ys
  linalg::Matrix chol;          // lower factor of K + (sigma2 + jitter) I
  double tau = 1.0;
  double sigma2 = 0.0;
  bool jittered = false;        // sigma2 == 0 was raised to the jitter floor
  double log_marginal = 0.0;
  Standardization fstd;
  double y_mean = 0.0;
  double y_stdev = 1.0;         // clamped to 1 for constant targets
};

inline constexpr int kMaxGpPoints = 5000;
inline constexpr double kJitterFloor = 1e-10;

// RBF kernel exp(-|a-b|^2 / (2 tau^2)) on standardized features.  Throws
// ConfigError on bad tau/sigma2 or n > kMaxGpPoints, ConditioningError when
// the factorization fails.
GPModel gp_fit(const Dataset& ds, double tau, double sigma2);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;  // clamped at 0; in target units squared
};

// Throws ConfigError on a dimension mismatch.
Prediction gp_predict(const GPModel& model, const std::vector<double>& x);
// Mean-only fast path (skips the O(n^2) variance solve); used by search.
double gp_predict_mean(const GPModel& model, const std::vector<double>& x);

struct HyperparamChoice {
  double tau = 0.0;
  double sigma2 = 0.0;
  double log_marginal = 0.0;
};

inline const std::vector<double> kDefaultTauGrid{0.5, 1, 2, 4, 8};
inline const std::vector<double> kDefaultSigma2Grid{1e-4, 1e-3, 1e-2, 1e-1};

// Maximizes the log marginal likelihood over the grid; ties prefer smaller
// tau, then smaller sigma2.  Throws ConditioningError if every grid point
// fails to factorize.
HyperparamChoice select_hyperparams(const Dataset& ds,
                                    const std::vector<double>& tau_grid = kDefaultTauGrid,
                                    const std::vector<double>& sigma2_grid = kDefaultSigma2Grid);

// One simulated design point; decisions are the encoded sequence.
struct SampleRow {
  std::vector<int> decisions;
  std::array<double, kFeatureDim> features;
  double latency_ms = 0.0;
  double energy_mj = 0.0;
};

struct RedrawEvent {
  int row = 0;       // sample slot that had to be redrawn
  int attempt = 0;   // discarded attempt number (0-based)
  std::string reason;
};

struct Collection {
  std::vector<SampleRow> rows;
  std::vector<RedrawEvent> redraws;
};

struct CollectConfig {
  int n = 3600;
  std::uint64_t seed = 0;
  int attempt_cap = 100;  // per-row draws before CollectError
  lower::MacroConfig macro;
  cost::HardwareModel base_hw;  // accel field is replaced per sample
};

// Draws uniform design points (per-row derived seeds), simulates each, and
// redraws rows whose cost evaluation is infeasible.
Collection collect_dataset(const space::DecisionSchema& schema,
                           const CollectConfig& cfg);

enum class Metric { Latency, Energy };
const char* metric_name(Metric m);

// Rows [begin, end) as a regression dataset.  log10 targets are the
// recommended fit space for these strictly positive metrics.
Dataset make_dataset(const Collection& c, Metric metric, bool log10_targets,
                     std::size_t begin, std::size_t end);

// Delimited text: one header line, then one line per sample (decisions,
// features, latency_ms, energy_mj).  Redraw events are not persisted.
std::string collection_to_text(const Collection& c, const space::DecisionSchema& schema);
Collection collection_from_text(const std::string& text, const space::DecisionSchema& schema);

std::string model_to_text(const GPModel& model);
GPModel model_from_text(const std::string& text);

struct RegressorReport {
  std::string name;
  double mse = 0.0;
  double median_ape = 0.0;      // median |pred - true| / |true|
  double fit_seconds = 0.0;
  double predicts_per_second = 0.0;
};

struct HarnessResult {
  std::vector<RegressorReport> rows;
  double sim_seconds_per_point = 0.0;  // as passed in; 0 = unknown
  double gp_speedup_vs_simulator = 0.0;
};

// Regressor names: "gp", "knn5", "ridge".  When log10_targets is set the
// models are fit in log space and errors are still computed in linear space.
HarnessResult mse_harness(const Dataset& train, const Dataset& test,
                          const std::vector<std::string>& regressors,
                          bool log10_targets,
                          double sim_seconds_per_point = 0.0);

std::string harness_to_text(const HarnessResult& r);

}  // namespace codesign::surrogate
