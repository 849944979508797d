#include "codesign/controller.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "codesign/errors.hpp"
#include "codesign/kernels.hpp"

namespace codesign::ctrl {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<int> vocab_of(const space::DecisionSchema& schema) {
  std::vector<int> v;
  v.reserve(schema.steps.size());
  for (const auto& st : schema.steps) v.push_back(st.vocab);
  return v;
}

void check_schema_match(const PolicyState& policy,
                        const space::DecisionSchema& schema) {
  if (policy.vocab.size() != schema.steps.size())
    throw ConfigError("policy has " + std::to_string(policy.vocab.size()) +
                      " steps, schema has " +
                      std::to_string(schema.steps.size()));
  for (std::size_t t = 0; t < policy.vocab.size(); ++t)
    if (policy.vocab[t] != schema.steps[t].vocab)
      throw ConfigError("policy/schema vocabulary mismatch at step " +
                        std::to_string(t));
}

void check_sampling_constants(double temperature, double tanh_c) {
  if (!(temperature > 0)) throw ConfigError("temperature must be > 0");
  if (!(tanh_c > 0)) throw ConfigError("tanh_c must be > 0");
}

// Everything the backward pass needs from one forward step.
struct StepCache {
  std::vector<double> xh;              // [embedding | h_prev], E+H
  std::vector<double> ig, fg, gg, og;  // gate activations, H each
  std::vector<double> c, tc, h;        // cell state, tanh(c), hidden
  std::vector<double> u;               // raw logits
  std::vector<double> sq;              // squashed logits
  std::vector<double> p;               // masked softmax probabilities
  std::vector<std::uint8_t> mask;
  double log_z = 0.0;                  // log sum exp of squashed over valid
  double step_entropy = 0.0;
  int action = -1;
  double log_prob = 0.0;
};

struct Forward {
  std::vector<StepCache> steps;
  double log_prob = 0.0;
  double entropy = 0.0;
};

// Runs one step of the recurrent cell and fills the softmax over the masked
// squashed logits.  `prev_action` picks the embedding row (< 0 at step 0).
void run_step(const PolicyState& policy, const ParamLayout& lay,
              const space::DecisionSchema& schema, int t, int prev_action,
              const double* h_prev, const double* c_prev,
              const std::vector<int>& prefix, double temperature, double tanh_c,
              StepCache& sc) {
  const int hdim = policy.hidden, edim = policy.embed;
  const int vocab = policy.vocab[t];
  const double* theta = policy.theta.data();

  sc.xh.assign(std::size_t(edim + hdim), 0.0);
  if (t > 0) {
    const double* row = theta + lay.embed[t] + std::size_t(prev_action) * edim;
    for (int j = 0; j < edim; ++j) sc.xh[j] = row[j];
  }
  for (int j = 0; j < hdim; ++j) sc.xh[std::size_t(edim) + j] = h_prev[j];

  std::vector<double> z(std::size_t(4 * hdim));
  kern::matvec(theta + lay.lstm_w, sc.xh.data(), z.data(), std::size_t(4 * hdim),
               std::size_t(edim + hdim));
  const double* b = theta + lay.lstm_b;
  for (int j = 0; j < 4 * hdim; ++j) z[j] += b[j];

  sc.ig.resize(hdim);
  sc.fg.resize(hdim);
  sc.gg.resize(hdim);
  sc.og.resize(hdim);
  sc.c.resize(hdim);
  sc.tc.resize(hdim);
  sc.h.resize(hdim);
  for (int j = 0; j < hdim; ++j) {
    sc.ig[j] = sigmoid(z[j]);
    sc.fg[j] = sigmoid(z[hdim + j]);
    sc.gg[j] = std::tanh(z[2 * hdim + j]);
    sc.og[j] = sigmoid(z[3 * hdim + j]);
    sc.c[j] = sc.fg[j] * c_prev[j] + sc.ig[j] * sc.gg[j];
    sc.tc[j] = std::tanh(sc.c[j]);
    sc.h[j] = sc.og[j] * sc.tc[j];
  }

  sc.u.resize(vocab);
  kern::matvec(theta + lay.proj_w[t], sc.h.data(), sc.u.data(), vocab, hdim);
  const double* pb = theta + lay.proj_b[t];
  sc.sq.resize(vocab);
  for (int j = 0; j < vocab; ++j) {
    sc.u[j] += pb[j];
    sc.sq[j] = tanh_c * std::tanh(sc.u[j] / temperature);
  }

  sc.mask = valid_mask(schema, t, prefix);
  double hi = -1e300;
  for (int j = 0; j < vocab; ++j)
    if (sc.mask[j] && sc.sq[j] > hi) hi = sc.sq[j];
  double zsum = 0.0;
  sc.p.assign(vocab, 0.0);
  for (int j = 0; j < vocab; ++j)
    if (sc.mask[j]) {
      sc.p[j] = std::exp(sc.sq[j] - hi);
      zsum += sc.p[j];
    }
  for (int j = 0; j < vocab; ++j) sc.p[j] /= zsum;
  sc.log_z = hi + std::log(zsum);
  double psq = 0.0;
  for (int j = 0; j < vocab; ++j)
    if (sc.mask[j]) psq += sc.p[j] * sc.sq[j];
  sc.step_entropy = sc.log_z - psq;
}

// Forward over the whole sequence.  With `forced` non-null the action path is
// prescribed (throwing on zero-probability actions); otherwise actions are
// drawn from the masked softmax using `gen`.
Forward run_forward(const PolicyState& policy, const ParamLayout& lay,
                    const space::DecisionSchema& schema,
                    const std::vector<int>* forced, rng::Xoshiro256* gen,
                    double temperature, double tanh_c) {
  const std::size_t n_steps = policy.vocab.size();
  Forward fw;
  fw.steps.resize(n_steps);
  std::vector<double> h(policy.hidden, 0.0), c(policy.hidden, 0.0);
  std::vector<int> prefix;
  prefix.reserve(n_steps);
  for (std::size_t t = 0; t < n_steps; ++t) {
    StepCache& sc = fw.steps[t];
    const int prev = t == 0 ? -1 : prefix[t - 1];
    run_step(policy, lay, schema, int(t), prev, h.data(), c.data(), prefix,
             temperature, tanh_c, sc);
    int action;
    if (forced) {
      action = (*forced)[t];
      if (action < 0 || action >= policy.vocab[t] || !sc.mask[action])
        throw ConfigError("step " + std::to_string(t) + ": action " +
                          std::to_string(action) +
                          " has probability zero under the validity mask");
    } else {
      const double draw = gen->uniform();
      double cum = 0.0;
      action = -1;
      for (int j = 0; j < policy.vocab[t]; ++j)
        if (sc.mask[j]) {
          cum += sc.p[j];
          action = j;
          if (draw < cum) break;
        }
    }
    sc.action = action;
    sc.log_prob = sc.sq[action] - sc.log_z;
    fw.log_prob += sc.log_prob;
    fw.entropy += sc.step_entropy;
    prefix.push_back(action);
    h = sc.h;
    c = sc.c;
  }
  return fw;
}

}  // namespace

ParamLayout layout_of(const std::vector<int>& vocab, int hidden, int embed) {
  if (vocab.empty()) throw ConfigError("layout needs at least one step");
  if (hidden < 1 || embed < 1)
    throw ConfigError("hidden and embed sizes must be >= 1");
  for (std::size_t t = 0; t < vocab.size(); ++t)
    if (vocab[t] < 1)
      throw ConfigError("vocabulary at step " + std::to_string(t) +
                        " must be >= 1");
  ParamLayout lay;
  std::size_t off = 0;
  lay.lstm_w = off;
  off += std::size_t(4 * hidden) * std::size_t(embed + hidden);
  lay.lstm_b = off;
  off += std::size_t(4 * hidden);
  lay.proj_w.resize(vocab.size());
  lay.proj_b.resize(vocab.size());
  for (std::size_t t = 0; t < vocab.size(); ++t) {
    lay.proj_w[t] = off;
    off += std::size_t(vocab[t]) * std::size_t(hidden);
    lay.proj_b[t] = off;
    off += std::size_t(vocab[t]);
  }
  lay.embed.assign(vocab.size(), 0);
  for (std::size_t t = 1; t < vocab.size(); ++t) {
    lay.embed[t] = off;
    off += std::size_t(vocab[t - 1]) * std::size_t(embed);
  }
  lay.embed[0] = off;  // one past the end; step 0 has no embedding table
  lay.total = off;
  return lay;
}

PolicyState init_policy(const space::DecisionSchema& schema, std::uint64_t seed,
                        int hidden, int embed) {
  PolicyState p;
  p.hidden = hidden;
  p.embed = embed;
  p.schema_hash = schema.hash();
  p.vocab = vocab_of(schema);
  const ParamLayout lay = layout_of(p.vocab, hidden, embed);
  p.theta.resize(lay.total);
  rng::Xoshiro256 init_gen = rng::Xoshiro256::seeded(rng::mix_seed(seed, 0));
  for (double& v : p.theta) v = init_gen.range(-kInitRange, kInitRange);
  // Output projections start at zero: a fresh policy then emits exactly
  // uniform distributions over each step's masked support (random projection
  // biases alone would skew step marginals by several percent), while
  // nonzero hidden states keep projection gradients alive from step one.
  for (std::size_t t = 0; t < p.vocab.size(); ++t) {
    const std::size_t nw = std::size_t(p.vocab[t]) * std::size_t(hidden);
    std::fill_n(p.theta.begin() + lay.proj_w[t], nw, 0.0);
    std::fill_n(p.theta.begin() + lay.proj_b[t], std::size_t(p.vocab[t]), 0.0);
  }
  p.adam_m.assign(lay.total, 0.0);
  p.adam_v.assign(lay.total, 0.0);
  p.rng = rng::Xoshiro256::seeded(rng::mix_seed(seed, 1));
  return p;
}

std::vector<std::uint8_t> valid_mask(const space::DecisionSchema& schema, int t,
                                     const std::vector<int>& prefix) {
  if (t < 0 || std::size_t(t) >= schema.steps.size())
    throw ConfigError("mask step index out of range");
  const space::DecisionStep& st = schema.steps[t];
  std::vector<std::uint8_t> m(st.vocab, 1);
  if (st.kind == space::StepKind::NodeIn1) {
    // The top slot is excluded so a canonical in2 (> in1, < node) still exists.
    for (int j = 0; j < st.vocab; ++j) m[j] = j < st.node - 1 ? 1 : 0;
  } else if (st.kind == space::StepKind::NodeIn2) {
    if (std::size_t(t) > prefix.size() || t == 0)
      throw ConfigError("in2 mask needs the in1 action in the prefix");
    const int in1 = prefix[t - 1];
    for (int j = 0; j < st.vocab; ++j) m[j] = j > in1 ? 1 : 0;
  }
  return m;
}

SampleTrace sample_sequence(PolicyState& policy,
                            const space::DecisionSchema& schema,
                            double temperature, double tanh_c) {
  check_schema_match(policy, schema);
  check_sampling_constants(temperature, tanh_c);
  const ParamLayout lay = layout_of(policy.vocab, policy.hidden, policy.embed);
  const Forward fw = run_forward(policy, lay, schema, nullptr, &policy.rng,
                                 temperature, tanh_c);
  SampleTrace tr;
  tr.actions.reserve(fw.steps.size());
  tr.step_log_probs.reserve(fw.steps.size());
  tr.logits.reserve(fw.steps.size());
  for (const StepCache& sc : fw.steps) {
    tr.actions.push_back(sc.action);
    tr.step_log_probs.push_back(sc.log_prob);
    tr.logits.push_back(sc.sq);
  }
  tr.total_log_prob = fw.log_prob;
  tr.entropy = fw.entropy;
  return tr;
}

EvalResult sequence_log_prob(const PolicyState& policy,
                             const space::DecisionSchema& schema,
                             const std::vector<int>& actions,
                             double temperature, double tanh_c) {
  check_schema_match(policy, schema);
  check_sampling_constants(temperature, tanh_c);
  if (actions.size() != policy.vocab.size())
    throw ConfigError("action sequence has " + std::to_string(actions.size()) +
                      " steps, policy expects " +
                      std::to_string(policy.vocab.size()));
  const ParamLayout lay = layout_of(policy.vocab, policy.hidden, policy.embed);
  const Forward fw =
      run_forward(policy, lay, schema, &actions, nullptr, temperature, tanh_c);
  return {fw.log_prob, fw.entropy};
}

std::vector<double> policy_gradient(const PolicyState& policy,
                                    const space::DecisionSchema& schema,
                                    const std::vector<SampleTrace>& traces,
                                    const std::vector<double>& rewards,
                                    double temperature, double tanh_c) {
  check_schema_match(policy, schema);
  check_sampling_constants(temperature, tanh_c);
  if (traces.empty()) throw ConfigError("policy gradient needs a non-empty batch");
  if (traces.size() != rewards.size())
    throw ConfigError("trace/reward batch sizes disagree");
  for (double r : rewards)
    if (!std::isfinite(r))
      throw RuntimeFailure("policy gradient rewards contain a non-finite value");

  const int hdim = policy.hidden, edim = policy.embed;
  const ParamLayout lay = layout_of(policy.vocab, hdim, edim);
  const double* theta = policy.theta.data();
  std::vector<double> grad(lay.total, 0.0);
  const double base = policy.baseline_set ? policy.baseline : 0.0;

  for (std::size_t i = 0; i < traces.size(); ++i) {
    const double w = -(rewards[i] - base) / double(traces.size());
    if (w == 0.0) continue;
    const Forward fw = run_forward(policy, lay, schema, &traces[i].actions,
                                   nullptr, temperature, tanh_c);
    const std::size_t n_steps = fw.steps.size();

    std::vector<double> dh_carry(hdim, 0.0), dc_carry(hdim, 0.0);
    std::vector<double> dh(hdim), dz(std::size_t(4 * hdim)),
        dxh(std::size_t(edim + hdim));
    for (std::size_t ti = n_steps; ti-- > 0;) {
      const StepCache& sc = fw.steps[ti];
      const int vocab = policy.vocab[ti];

      // d/dlogits of w*log p(a) is w*(onehot - p) on the masked support; the
      // squash then contributes (tanh_c/T)*(1 - tanh^2(u/T)) per slot.
      std::vector<double> du(vocab, 0.0);
      for (int j = 0; j < vocab; ++j) {
        if (!sc.mask[j]) continue;
        const double dl = w * ((j == sc.action ? 1.0 : 0.0) - sc.p[j]);
        const double th = sc.sq[j] / tanh_c;
        du[j] = dl * (tanh_c / temperature) * (1.0 - th * th);
      }

      std::fill(dh.begin(), dh.end(), 0.0);
      for (int j = 0; j < vocab; ++j) {
        if (du[j] == 0.0) continue;
        kern::axpy(du[j], sc.h.data(), grad.data() + lay.proj_w[ti] + std::size_t(j) * hdim, hdim);
        grad[lay.proj_b[ti] + j] += du[j];
        kern::axpy(du[j], theta + lay.proj_w[ti] + std::size_t(j) * hdim, dh.data(), hdim);
      }
      for (int j = 0; j < hdim; ++j) dh[j] += dh_carry[j];

      const double* c_prev_v = ti == 0 ? nullptr : fw.steps[ti - 1].c.data();
      for (int j = 0; j < hdim; ++j) {
        const double dov = dh[j] * sc.tc[j];
        const double dtc = dh[j] * sc.og[j];
        const double dcv = dc_carry[j] + dtc * (1.0 - sc.tc[j] * sc.tc[j]);
        const double cp = c_prev_v ? c_prev_v[j] : 0.0;
        const double div = dcv * sc.gg[j];
        const double dgv = dcv * sc.ig[j];
        const double dfv = dcv * cp;
        dc_carry[j] = dcv * sc.fg[j];
        dz[j] = div * sc.ig[j] * (1.0 - sc.ig[j]);
        dz[hdim + j] = dfv * sc.fg[j] * (1.0 - sc.fg[j]);
        dz[2 * hdim + j] = dgv * (1.0 - sc.gg[j] * sc.gg[j]);
        dz[3 * hdim + j] = dov * sc.og[j] * (1.0 - sc.og[j]);
      }

      std::fill(dxh.begin(), dxh.end(), 0.0);
      for (int r = 0; r < 4 * hdim; ++r) {
        if (dz[r] == 0.0) continue;
        kern::axpy(dz[r], sc.xh.data(),
                   grad.data() + lay.lstm_w + std::size_t(r) * (edim + hdim),
                   std::size_t(edim + hdim));
        grad[lay.lstm_b + r] += dz[r];
        kern::axpy(dz[r], theta + lay.lstm_w + std::size_t(r) * (edim + hdim),
                   dxh.data(), std::size_t(edim + hdim));
      }
      for (int j = 0; j < hdim; ++j) dh_carry[j] = dxh[std::size_t(edim) + j];
      if (ti > 0) {
        const int prev = fw.steps[ti - 1].action;
        kern::axpy(1.0, dxh.data(),
                   grad.data() + lay.embed[ti] + std::size_t(prev) * edim, edim);
      }
    }
  }
  return grad;
}

void update_baseline(PolicyState& policy, double batch_mean_reward,
                     double decay) {
  if (!(decay >= 0.0 && decay < 1.0))
    throw ConfigError("baseline decay must lie in [0, 1)");
  if (!std::isfinite(batch_mean_reward))
    throw RuntimeFailure("baseline update got a non-finite reward mean");
  if (!policy.baseline_set) {
    policy.baseline = batch_mean_reward;
    policy.baseline_set = true;
  } else {
    policy.baseline = decay * policy.baseline + (1.0 - decay) * batch_mean_reward;
  }
}

void adam_step(PolicyState& policy, const std::vector<double>& gradient,
               double lr, double beta1, double beta2, double eps) {
  if (!(lr > 0)) throw ConfigError("adam learning rate must be > 0");
  if (gradient.size() != policy.theta.size())
    throw ConfigError("gradient size does not match parameter count");
  policy.adam_t += 1;
  const double bc1 = 1.0 - std::pow(beta1, double(policy.adam_t));
  const double bc2 = 1.0 - std::pow(beta2, double(policy.adam_t));
  for (std::size_t k = 0; k < gradient.size(); ++k) {
    const double g = gradient[k];
    policy.adam_m[k] = beta1 * policy.adam_m[k] + (1.0 - beta1) * g;
    policy.adam_v[k] = beta2 * policy.adam_v[k] + (1.0 - beta2) * g * g;
    const double mhat = policy.adam_m[k] / bc1;
    const double vhat = policy.adam_v[k] / bc2;
    policy.theta[k] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

namespace {

void put_doubles(std::ostringstream& os, const std::vector<double>& v) {
  char buf[32];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", v[i]);
    os << buf << ((i + 1) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ');
  }
}

void get_doubles(std::istringstream& is, std::vector<double>& v,
                 const char* what) {
  for (double& x : v)
    if (!(is >> x)) throw DecodeError(std::string("truncated ") + what);
}

}  // namespace

std::string policy_to_text(const PolicyState& policy) {
  std::ostringstream os;
  os << "policy-checkpoint v1\n";
  os << "schema " << policy.schema_hash << '\n';
  os << "steps " << policy.vocab.size() << '\n';
  os << "vocab";
  for (int v : policy.vocab) os << ' ' << v;
  os << '\n';
  os << "hidden " << policy.hidden << '\n';
  os << "embed " << policy.embed << '\n';
  os << "adam_t " << policy.adam_t << '\n';
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", policy.baseline);
  os << "baseline " << buf << ' ' << (policy.baseline_set ? 1 : 0) << '\n';
  os << "rng " << policy.rng.s[0] << ' ' << policy.rng.s[1] << ' '
     << policy.rng.s[2] << ' ' << policy.rng.s[3] << '\n';
  os << "theta " << policy.theta.size() << '\n';
  put_doubles(os, policy.theta);
  os << "adam_m " << policy.adam_m.size() << '\n';
  put_doubles(os, policy.adam_m);
  os << "adam_v " << policy.adam_v.size() << '\n';
  put_doubles(os, policy.adam_v);
  os << "end\n";
  return os.str();
}

PolicyState policy_from_text(const std::string& text,
                             const space::DecisionSchema& schema) {
  std::istringstream is(text);
  std::string tag, version;
  if (!(is >> tag >> version) || tag != "policy-checkpoint" || version != "v1")
    throw DecodeError("not a v1 policy checkpoint");
  PolicyState p;
  std::size_t n_steps = 0;
  if (!(is >> tag >> p.schema_hash) || tag != "schema")
    throw DecodeError("missing schema line");
  if (!(is >> tag >> n_steps) || tag != "steps" || n_steps == 0)
    throw DecodeError("missing steps line");
  if (!(is >> tag) || tag != "vocab") throw DecodeError("missing vocab line");
  p.vocab.resize(n_steps);
  for (int& v : p.vocab)
    if (!(is >> v) || v < 1) throw DecodeError("bad vocabulary entry");
  if (!(is >> tag >> p.hidden) || tag != "hidden" || p.hidden < 1)
    throw DecodeError("missing hidden line");
  if (!(is >> tag >> p.embed) || tag != "embed" || p.embed < 1)
    throw DecodeError("missing embed line");
  if (!(is >> tag >> p.adam_t) || tag != "adam_t" || p.adam_t < 0)
    throw DecodeError("missing adam_t line");
  int set_flag = 0;
  if (!(is >> tag >> p.baseline >> set_flag) || tag != "baseline")
    throw DecodeError("missing baseline line");
  p.baseline_set = set_flag != 0;
  if (!(is >> tag >> p.rng.s[0] >> p.rng.s[1] >> p.rng.s[2] >> p.rng.s[3]) ||
      tag != "rng")
    throw DecodeError("missing rng line");

  const ParamLayout lay = layout_of(p.vocab, p.hidden, p.embed);
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "theta" || n != lay.total)
    throw DecodeError("theta size does not match the layout");
  p.theta.resize(n);
  get_doubles(is, p.theta, "theta");
  if (!(is >> tag >> n) || tag != "adam_m" || n != lay.total)
    throw DecodeError("adam_m size does not match the layout");
  p.adam_m.resize(n);
  get_doubles(is, p.adam_m, "adam_m");
  if (!(is >> tag >> n) || tag != "adam_v" || n != lay.total)
    throw DecodeError("adam_v size does not match the layout");
  p.adam_v.resize(n);
  get_doubles(is, p.adam_v, "adam_v");
  if (!(is >> tag) || tag != "end") throw DecodeError("missing end marker");
  if (is >> tag) throw DecodeError("trailing content after end marker");

  if (p.schema_hash != schema.hash())
    throw ConfigError("checkpoint was written for a different schema");
  check_schema_match(p, schema);
  return p;
}

}  // namespace codesign::ctrl
