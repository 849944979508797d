#pragma once
// Autoregressive recurrent policy over the decision sequence: a single-layer
// LSTM whose step-t input is a learned embedding of the action taken at step
// t-1 (zero vector at step 0), per-step output projections, temperature +
// tanh logit squashing, validity masking for node-input steps, exact
// log-probabilities and entropies, REINFORCE gradients against a
// moving-average baseline, and Adam updates.  Gradients are exact
// backpropagation through time over the full fixed-length sequence.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "codesign/design_space.hpp"
#include "codesign/rng.hpp"

namespace codesign::ctrl {

inline constexpr int kHiddenSize = 120;
inline constexpr int kEmbedSize = 16;
inline constexpr double kTemperature = 1.1;
inline constexpr double kTanhC = 2.5;
inline constexpr double kLearningRate = 0.0035;
inline constexpr double kBaselineDecay = 0.95;
inline constexpr double kInitRange = 0.1;
inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Offsets into the flat parameter vector.  The layout is a pure function of
// (vocab sizes, hidden, embed), so checkpoints stay portable.
struct ParamLayout {
  std::size_t lstm_w = 0;           // 4H x (E+H), row-major, gate order i,f,g,o
  std::size_t lstm_b = 0;           // 4H
  std::vector<std::size_t> proj_w;  // per step: vocab x H, row-major
  std::vector<std::size_t> proj_b;  // per step: vocab
  std::vector<std::size_t> embed;   // step t >= 1: vocab(t-1) x E; [0] unused
  std::size_t total = 0;
};

ParamLayout layout_of(const std::vector<int>& vocab, int hidden, int embed);

struct PolicyState {
  int hidden = kHiddenSize;
  int embed = kEmbedSize;
  std::uint64_t schema_hash = 0;
  std::vector<int> vocab;         // per-step vocabulary sizes
  std::vector<double> theta;      // all parameters, ParamLayout order
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::int64_t adam_t = 0;
  double baseline = 0.0;
  bool baseline_set = false;
  rng::Xoshiro256 rng{};          // sampling stream, serialized with the rest
};

// Recurrent and embedding parameters uniform in [-kInitRange, kInitRange];
// output projections (weights and biases) start at zero so a fresh policy is
// exactly uniform over each step's masked support.  The init and sampling
// streams are split from `seed` so both are reproducible.
PolicyState init_policy(const space::DecisionSchema& schema, std::uint64_t seed,
                        int hidden = kHiddenSize, int embed = kEmbedSize);

// Valid actions for step t given the actions already taken.  Node-input
// steps keep only slots that can still complete a canonical in1 < in2 pair
// (in1 needs a free slot above it, in2 must lie above the chosen in1);
// every other step admits its whole vocabulary.
std::vector<std::uint8_t> valid_mask(const space::DecisionSchema& schema, int t,
                                     const std::vector<int>& prefix);

struct SampleTrace {
  std::vector<int> actions;
  std::vector<double> step_log_probs;
  double total_log_prob = 0.0;
  double entropy = 0.0;                     // summed step entropies
  std::vector<std::vector<double>> logits;  // post-squash, one row per step
};

// Draws one sequence from the masked softmax policy, advancing policy.rng.
SampleTrace sample_sequence(PolicyState& policy,
                            const space::DecisionSchema& schema,
                            double temperature = kTemperature,
                            double tanh_c = kTanhC);

struct EvalResult {
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Log-probability of a forced action path.  Throws ConfigError when an
// action falls outside the masked support (its probability is exactly zero).
EvalResult sequence_log_prob(const PolicyState& policy,
                             const space::DecisionSchema& schema,
                             const std::vector<int>& actions,
                             double temperature = kTemperature,
                             double tanh_c = kTanhC);

// REINFORCE batch gradient: -(1/B) sum_i (R_i - baseline) * grad log p(trace_i),
// flat vector in ParamLayout order.  Throws ConfigError on an empty or
// mismatched batch, RuntimeFailure on non-finite rewards.
std::vector<double> policy_gradient(const PolicyState& policy,
                                    const space::DecisionSchema& schema,
                                    const std::vector<SampleTrace>& traces,
                                    const std::vector<double>& rewards,
                                    double temperature = kTemperature,
                                    double tanh_c = kTanhC);

// First call stores the mean as-is; later calls apply the moving average
// b <- decay * b + (1 - decay) * mean.
void update_baseline(PolicyState& policy, double batch_mean_reward,
                     double decay = kBaselineDecay);

// Standard bias-corrected adaptive-moment step; increments the step counter
// even for a zero gradient.
void adam_step(PolicyState& policy, const std::vector<double>& gradient,
               double lr = kLearningRate, double beta1 = kAdamBeta1,
               double beta2 = kAdamBeta2, double eps = kAdamEps);

// Versioned text checkpoint carrying the schema hash, sizes, parameters,
// optimizer state, baseline, and rng state; %.17g round-trips exactly.
std::string policy_to_text(const PolicyState& policy);

// Throws DecodeError on malformed text, ConfigError when the checkpoint was
// written for a different schema.
PolicyState policy_from_text(const std::string& text,
                             const space::DecisionSchema& schema);

}  // namespace codesign::ctrl
