#pragma once
// Search orchestration: the composite reward, threshold screening, the RL
// loop that trains the controller against it, the random and two-stage
// baselines, Pareto-front extraction, and exact re-evaluation of the top
// candidates.
//
// All entry points are deterministic given the config seed.  Latency and
// energy flowing through the reward come either from the analytical cost
// model or from fitted surrogates; the evaluation function is injected so
// tests can substitute synthetic landscapes.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "codesign/accuracy_proxy.hpp"
#include "codesign/controller.hpp"
#include "codesign/cost_model.hpp"
#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"
#include "codesign/lowering.hpp"
#include "codesign/surrogate.hpp"

namespace codesign::search {

// R = A + alpha1 * (l / t_lat)^omega1 + alpha2 * (e / t_eer)^omega2.
// Negative omegas reward designs under the thresholds and penalize designs
// over them; omega = 0 turns the term into a constant alpha.
struct RewardSpec {
  double alpha1 = 0.5;
  double omega1 = -0.4;
  double alpha2 = 0.5;
  double omega2 = -0.4;
  double t_lat_ms = 1.2;
  double t_eer_mj = 9.0;
  double entropy_weight = 1e-4;
};

// Throws ConfigError on non-positive thresholds, positive omegas, negative
// alphas, a negative entropy weight, or non-finite fields.
void validate_reward_spec(const RewardSpec& spec);

// Named constant sets: "balanced" (0.5/-0.4, 0.5/-0.4), "energy-tradeoff"
// (0.6/-0.4, 0.3/-0.2), "latency-tradeoff" (0.3/-0.3, 0.6/-0.4).  Thresholds
// and entropy weight keep their defaults.  Unknown name throws ConfigError.
RewardSpec preset(const std::string& name);

// Exact evaluation of the composite reward.  Throws ConfigError when
// accuracy is outside [0, 1], latency or energy is not strictly positive, or
// the spec is invalid (fractional negative powers are undefined at zero).
double reward(double accuracy, double latency_ms, double energy_mj,
              const RewardSpec& spec);

// Strict threshold test: a design is kept only when latency < t_lat AND
// energy < t_eer; sitting exactly on a threshold violates it.  Non-finite
// metrics always violate.
bool violates_thresholds(double latency_ms, double energy_mj,
                         const RewardSpec& spec);

struct SearchConfig {
  RewardSpec reward;
  int iterations = 12000;
  int batch_size = 5;
  std::uint64_t seed = 0;
  std::string oracle = "synthetic-default";
  bool use_surrogate = true;
  // When enabled, candidates violating the thresholds are flagged in the
  // history and excluded from top-N selection; they still train the policy.
  bool hard_screen = true;
  int top_n = 10;
  double lr = ctrl::kLearningRate;
  double temperature = ctrl::kTemperature;
  double tanh_c = ctrl::kTanhC;
  double baseline_decay = ctrl::kBaselineDecay;
  int hidden = ctrl::kHiddenSize;
  int embed = ctrl::kEmbedSize;
};

// Throws ConfigError on iterations/batch_size/top_n < 1, bad controller
// constants, or an invalid RewardSpec.
void validate_config(const SearchConfig& cfg);

// One evaluated design.  latency_ms/energy_mj are surrogate predictions in
// surrogate mode and exact simulation results otherwise; an infeasible exact
// evaluation stores +inf for both, reward kInfeasibleReward, and is always
// flagged screened.
struct Candidate {
  std::vector<int> actions;  // decision sequence in schema order
  double accuracy = 0;
  double latency_ms = 0;
  double energy_mj = 0;
  double reward = 0;  // composite reward, without the entropy bonus
  int iteration = 0;
  bool screened = false;
  std::string source;  // "RL", "random", or "two-stage"
  std::optional<cost::CostReport> finalized;  // set by finalize_top_n
};

inline constexpr double kInfeasibleReward = -1.0;

struct SearchHistory {
  SearchConfig config;
  std::uint64_t schema_hash = 0;
  std::vector<Candidate> candidates;  // append-only, batch per iteration
};

// Accuracy plus hardware metrics for one decoded design.
struct EvalOutcome {
  double accuracy = 0;
  double latency_ms = 0;
  double energy_mj = 0;
  bool infeasible = false;
};

using EvalFn = std::function<EvalOutcome(const std::vector<int>& actions)>;

// Ingredients for the standard evaluator: decode, lower, score accuracy,
// then either simulate exactly or query the fitted surrogates.
struct EvalSetup {
  const space::DecisionSchema* schema = nullptr;
  lower::MacroConfig macro;
  cost::HardwareModel hardware;  // accel fields are overridden per point
  proxy::AccuracyFn accuracy;
  bool use_surrogate = false;
  const surrogate::GPModel* gp_latency = nullptr;
  const surrogate::GPModel* gp_energy = nullptr;
  bool log10_gp_targets = true;  // models predict log10(metric)
};

// Throws ConfigError on a missing schema or accuracy function, or when
// surrogate mode is requested without both fitted models.  The schema and
// models are held by pointer and must outlive the returned function.  The
// returned function throws DecodeError on invalid sequences; exact-mode
// infeasibility is reported through EvalOutcome, not thrown.  Raw-scale
// surrogate predictions are floored to a tiny positive value so the reward
// stays defined.
EvalFn make_evaluator(const EvalSetup& setup);

// Evaluation failure mid-run (oracle or surrogate breakage) aborts the run
// but hands the partial history back so callers can flush it.
struct SearchAborted : RuntimeFailure {
  SearchAborted(const std::string& msg, SearchHistory partial_history)
      : RuntimeFailure(msg), partial(std::move(partial_history)) {}
  SearchHistory partial;
};

// REINFORCE loop: per iteration, sample a batch of traces, evaluate, shape
// each reward with entropy_weight * trace entropy, update the moving-average
// baseline with the shaped batch mean, apply the policy gradient and one
// Adam step, and append the batch (unshaped rewards) to the history.
// Evaluations are memoized on the action sequence within the run.
SearchHistory run_search(const SearchConfig& cfg,
                         const space::DecisionSchema& schema,
                         const EvalFn& evaluate,
                         ctrl::PolicyState* final_policy = nullptr);

// Matched-budget baseline: iterations * batch_size uniform samples through
// the identical evaluation and logging pipeline, no policy.
SearchHistory random_search(const SearchConfig& cfg,
                            const space::DecisionSchema& schema,
                            const EvalFn& evaluate);

// Accuracy-first baseline.  Stage 1 runs the RL loop with alpha1 = alpha2 =
// 0 (accelerator decisions are sampled but cannot affect the reward) on a
// budget of iterations * batch_size minus the enumeration size; stage 2
// exhaustively enumerates every accelerator configuration for the
// highest-accuracy stage-1 network under the full RewardSpec using
// exact_evaluate.  Throws ConfigError when the budget does not cover the
// enumeration.
SearchHistory two_stage_baseline(const SearchConfig& cfg,
                                 const space::DecisionSchema& schema,
                                 const EvalFn& evaluate,
                                 const EvalFn& exact_evaluate,
                                 ctrl::PolicyState* final_policy = nullptr);

// Running maximum of the logged rewards in append order.
std::vector<double> best_so_far(const SearchHistory& history);

// Index of a two-stage run's final answer: the best-reward row of the
// stage-2 accelerator enumeration (the trailing block of the history),
// preferring unscreened rows.  Stage-1 rows carry accuracy-only rewards and
// never constitute the method's output.  Throws ConfigError when the history
// is shorter than the enumeration.
std::size_t two_stage_winner(const SearchHistory& history,
                             const space::DecisionSchema& schema);

// Index of the best candidate: highest reward among unscreened candidates,
// falling back to all candidates when everything is screened.  Ties go to
// the earliest.  Throws EmptyResultError on an empty history.
std::size_t best_index(const SearchHistory& history);

// Indices of unscreened candidates by descending reward; ties go to the
// earlier candidate.
std::vector<std::size_t> rank_by_reward(const SearchHistory& history);

// Non-dominated set under (maximize accuracy, minimize the chosen metric),
// sorted by the metric ascending; exact ties on both axes are all kept.
// Screened candidates and non-finite metrics are excluded.
std::vector<Candidate> pareto_front(const SearchHistory& history,
                                    surrogate::Metric metric);

struct FinalizedCandidate {
  Candidate candidate;  // as logged during the search, finalized set
  double exact_accuracy = 0;
  double exact_latency_ms = 0;
  double exact_energy_mj = 0;
  double exact_reward = 0;
  bool exact_screened = false;
  double latency_delta_ms = 0;  // exact minus predicted
  double energy_delta_mj = 0;
  bool winner = false;
};

// Re-evaluates the top n unscreened candidates (by logged reward) with the
// exact cost model and the accuracy oracle, re-screens on the exact values,
// and re-ranks by exact reward; exactly one surviving entry is flagged as
// the winner.  Throws EmptyResultError when the history has no unscreened
// candidate or every finalized candidate violates the thresholds.
std::vector<FinalizedCandidate> finalize_top_n(
    const SearchHistory& history, int n, const space::DecisionSchema& schema,
    const lower::MacroConfig& macro, const cost::HardwareModel& hardware,
    const proxy::AccuracyFn& accuracy);

// One candidate per line: iteration, comma-joined decisions, accuracy,
// latency, energy, reward, screened flag, source tag.  Doubles print with
// %.17g so the round trip is exact.
std::string history_to_text(const SearchHistory& history);

// Parses candidates only; config and schema hash are restored from the
// header line but the config keeps defaults.  Throws DecodeError on
// malformed text.
SearchHistory history_from_text(const std::string& text);

}  // namespace codesign::search
