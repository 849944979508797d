#include "codesign/search.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "codesign/rng.hpp"

namespace codesign::search {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Floor for raw-scale surrogate predictions; keeps the reward's fractional
// powers defined when a GP extrapolates below zero.
constexpr double kMetricFloor = 1e-12;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double metric_of(const Candidate& c, surrogate::Metric m) {
  return m == surrogate::Metric::Latency ? c.latency_ms : c.energy_mj;
}

using Memo = std::unordered_map<std::string, EvalOutcome>;

const EvalOutcome& cached_eval(Memo& memo, const std::vector<int>& actions,
                               const EvalFn& evaluate) {
  std::string key = space::to_line(actions);
  auto it = memo.find(key);
  if (it == memo.end()) it = memo.emplace(std::move(key), evaluate(actions)).first;
  return it->second;
}

void append_candidate(SearchHistory& h, std::vector<int> actions,
                      const EvalOutcome& out, int iteration, const char* source,
                      const SearchConfig& cfg) {
  Candidate c;
  c.actions = std::move(actions);
  c.accuracy = out.accuracy;
  c.latency_ms = out.latency_ms;
  c.energy_mj = out.energy_mj;
  c.iteration = iteration;
  c.source = source;
  if (out.infeasible) {
    c.latency_ms = kInf;
    c.energy_mj = kInf;
    c.reward = kInfeasibleReward;
    c.screened = true;
  } else {
    c.reward = reward(out.accuracy, out.latency_ms, out.energy_mj, cfg.reward);
    c.screened = cfg.hard_screen &&
                 violates_thresholds(out.latency_ms, out.energy_mj, cfg.reward);
  }
  h.candidates.push_back(std::move(c));
}

[[noreturn]] void abort_run(SearchHistory&& h, int iteration,
                            const std::exception& ex) {
  throw SearchAborted("evaluation failed at iteration " +
                          std::to_string(iteration) + ": " + ex.what(),
                      std::move(h));
}

}  // namespace

void validate_reward_spec(const RewardSpec& spec) {
  const double fields[] = {spec.alpha1, spec.omega1,  spec.alpha2,        spec.omega2,
                           spec.t_lat_ms, spec.t_eer_mj, spec.entropy_weight};
  for (double f : fields)
    if (!std::isfinite(f)) throw ConfigError("reward spec has a non-finite field");
  if (!(spec.t_lat_ms > 0)) throw ConfigError("latency threshold must be positive");
  if (!(spec.t_eer_mj > 0)) throw ConfigError("energy threshold must be positive");
  if (spec.omega1 > 0 || spec.omega2 > 0)
    throw ConfigError("reward exponents must be <= 0 (penalty terms)");
  if (spec.alpha1 < 0 || spec.alpha2 < 0)
    throw ConfigError("reward weights must be >= 0");
  if (spec.entropy_weight < 0)
    throw ConfigError("entropy weight must be >= 0");
}

RewardSpec preset(const std::string& name) {
  RewardSpec s;
  if (name == "balanced") {
    s.alpha1 = 0.5; s.omega1 = -0.4; s.alpha2 = 0.5; s.omega2 = -0.4;
  } else if (name == "energy-tradeoff") {
    s.alpha1 = 0.6; s.omega1 = -0.4; s.alpha2 = 0.3; s.omega2 = -0.2;
  } else if (name == "latency-tradeoff") {
    s.alpha1 = 0.3; s.omega1 = -0.3; s.alpha2 = 0.6; s.omega2 = -0.4;
  } else {
    throw ConfigError("unknown reward preset \"" + name +
                      "\"; expected balanced, energy-tradeoff, or latency-tradeoff");
  }
  return s;
}

double reward(double accuracy, double latency_ms, double energy_mj,
              const RewardSpec& spec) {
  validate_reward_spec(spec);
  if (!(accuracy >= 0.0 && accuracy <= 1.0))
    throw ConfigError("accuracy must lie in [0, 1], got " + fmt17(accuracy));
  if (!(latency_ms > 0) || !std::isfinite(latency_ms))
    throw ConfigError("latency must be positive and finite, got " + fmt17(latency_ms));
  if (!(energy_mj > 0) || !std::isfinite(energy_mj))
    throw ConfigError("energy must be positive and finite, got " + fmt17(energy_mj));
  return accuracy +
         spec.alpha1 * std::pow(latency_ms / spec.t_lat_ms, spec.omega1) +
         spec.alpha2 * std::pow(energy_mj / spec.t_eer_mj, spec.omega2);
}

bool violates_thresholds(double latency_ms, double energy_mj,
                         const RewardSpec& spec) {
  validate_reward_spec(spec);
  return !(latency_ms < spec.t_lat_ms && energy_mj < spec.t_eer_mj);
}

void validate_config(const SearchConfig& cfg) {
  validate_reward_spec(cfg.reward);
  if (cfg.iterations < 1) throw ConfigError("iterations must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (cfg.top_n < 1) throw ConfigError("top_n must be >= 1");
  if (!(cfg.lr > 0) || !std::isfinite(cfg.lr))
    throw ConfigError("learning rate must be positive");
  if (!(cfg.temperature > 0) || !std::isfinite(cfg.temperature))
    throw ConfigError("temperature must be positive");
  if (!(cfg.tanh_c > 0) || !std::isfinite(cfg.tanh_c))
    throw ConfigError("logit squash bound must be positive");
  if (!(cfg.baseline_decay >= 0 && cfg.baseline_decay < 1))
    throw ConfigError("baseline decay must lie in [0, 1)");
  if (cfg.hidden < 1 || cfg.embed < 1)
    throw ConfigError("hidden and embedding sizes must be >= 1");
}

EvalFn make_evaluator(const EvalSetup& setup) {
  if (!setup.schema) throw ConfigError("evaluator needs a decision schema");
  if (!setup.accuracy) throw ConfigError("evaluator needs an accuracy oracle");
  if (setup.use_surrogate && (setup.gp_latency == nullptr || setup.gp_energy == nullptr))
    throw ConfigError(
        "surrogate mode needs fitted latency and energy models; "
        "run the collect and fit stages first");
  cost::validate_hardware(setup.hardware);
  return [setup](const std::vector<int>& actions) {
    const space::DesignPoint point = space::decode(actions, *setup.schema);
    const lower::LayerGraph graph = lower::derive_network(point.dnn, setup.macro);
    EvalOutcome out;
    out.accuracy = setup.accuracy(graph);
    if (setup.use_surrogate) {
      const std::array<double, surrogate::kFeatureDim> f =
          surrogate::featurize(lower::arch_summary(graph), point.accel);
      const std::vector<double> x(f.begin(), f.end());
      double l = surrogate::gp_predict_mean(*setup.gp_latency, x);
      double e = surrogate::gp_predict_mean(*setup.gp_energy, x);
      if (setup.log10_gp_targets) {
        l = std::pow(10.0, l);
        e = std::pow(10.0, e);
      }
      out.latency_ms = std::max(l, kMetricFloor);
      out.energy_mj = std::max(e, kMetricFloor);
    } else {
      cost::HardwareModel hw = setup.hardware;
      hw.accel = point.accel;
      try {
        const cost::CostReport r = cost::simulate(graph, hw);
        out.latency_ms = r.latency_ms;
        out.energy_mj = r.energy_mj;
      } catch (const InfeasibleError&) {
        out.infeasible = true;
        out.latency_ms = kInf;
        out.energy_mj = kInf;
      }
    }
    return out;
  };
}

SearchHistory run_search(const SearchConfig& cfg,
                         const space::DecisionSchema& schema,
                         const EvalFn& evaluate,
                         ctrl::PolicyState* final_policy) {
  validate_config(cfg);
  if (!evaluate) throw ConfigError("run_search needs an evaluation function");
  ctrl::PolicyState policy =
      ctrl::init_policy(schema, cfg.seed, cfg.hidden, cfg.embed);
  SearchHistory h;
  h.config = cfg;
  h.schema_hash = schema.hash();
  h.candidates.reserve(std::size_t(cfg.iterations) * std::size_t(cfg.batch_size));
  Memo memo;
  std::vector<ctrl::SampleTrace> traces;
  std::vector<double> shaped(std::size_t(cfg.batch_size));
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    traces.clear();
    for (int bi = 0; bi < cfg.batch_size; ++bi) {
      traces.push_back(
          ctrl::sample_sequence(policy, schema, cfg.temperature, cfg.tanh_c));
      const ctrl::SampleTrace& tr = traces.back();
      try {
        const EvalOutcome& out = cached_eval(memo, tr.actions, evaluate);
        append_candidate(h, tr.actions, out, iter, "RL", cfg);
      } catch (const std::exception& ex) {
        abort_run(std::move(h), iter, ex);
      }
      // Entropy shaping affects only the learning signal, not the log.
      shaped[std::size_t(bi)] =
          h.candidates.back().reward + cfg.reward.entropy_weight * tr.entropy;
    }
    const double mean =
        std::accumulate(shaped.begin(), shaped.end(), 0.0) / double(cfg.batch_size);
    ctrl::update_baseline(policy, mean, cfg.baseline_decay);
    const std::vector<double> grad = ctrl::policy_gradient(
        policy, schema, traces, shaped, cfg.temperature, cfg.tanh_c);
    ctrl::adam_step(policy, grad, cfg.lr);
  }
  if (final_policy) *final_policy = std::move(policy);
  return h;
}

SearchHistory random_search(const SearchConfig& cfg,
                            const space::DecisionSchema& schema,
                            const EvalFn& evaluate) {
  validate_config(cfg);
  if (!evaluate) throw ConfigError("random_search needs an evaluation function");
  SearchHistory h;
  h.config = cfg;
  h.schema_hash = schema.hash();
  h.candidates.reserve(std::size_t(cfg.iterations) * std::size_t(cfg.batch_size));
  Memo memo;
  std::uint64_t draw = 0;
  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    for (int bi = 0; bi < cfg.batch_size; ++bi, ++draw) {
      const space::DesignPoint point =
          space::uniform_sample(schema, rng::mix_seed(cfg.seed, draw));
      std::vector<int> actions = space::encode(point, schema);
      try {
        const EvalOutcome& out = cached_eval(memo, actions, evaluate);
        append_candidate(h, std::move(actions), out, iter, "random", cfg);
      } catch (const std::exception& ex) {
        abort_run(std::move(h), iter, ex);
      }
    }
  }
  return h;
}

SearchHistory two_stage_baseline(const SearchConfig& cfg,
                                 const space::DecisionSchema& schema,
                                 const EvalFn& evaluate,
                                 const EvalFn& exact_evaluate,
                                 ctrl::PolicyState* final_policy) {
  validate_config(cfg);
  if (!evaluate || !exact_evaluate)
    throw ConfigError("two-stage baseline needs search and exact evaluators");
  const std::size_t enum_size =
      schema.lists.pe_array.size() * schema.lists.g_buf_kb.size() *
      schema.lists.r_buf_bytes.size() * schema.lists.dataflows.size();
  const long long total = (long long)cfg.iterations * cfg.batch_size;
  if (total <= (long long)enum_size)
    throw ConfigError("two-stage budget of " + std::to_string(total) +
                      " evaluations does not cover the accelerator enumeration (" +
                      std::to_string(enum_size) + ")");
  // Ceiling division: the baseline never gets fewer evaluations than the
  // matched budget, so comparisons cannot favor the single-stage run.
  const long long stage1_evals = total - (long long)enum_size;
  const int stage1_iters =
      int((stage1_evals + cfg.batch_size - 1) / cfg.batch_size);

  SearchConfig s1 = cfg;
  s1.iterations = stage1_iters;
  s1.reward.alpha1 = 0.0;  // accuracy-only stage: hardware cannot move the reward
  s1.reward.alpha2 = 0.0;
  SearchHistory h = run_search(s1, schema, evaluate, final_policy);
  h.config = cfg;
  for (Candidate& c : h.candidates) c.source = "two-stage";

  std::size_t best = 0;
  for (std::size_t i = 1; i < h.candidates.size(); ++i)
    if (h.candidates[i].accuracy > h.candidates[best].accuracy) best = i;
  std::vector<int> actions = h.candidates[best].actions;
  const std::size_t off = std::size_t(schema.s_dnn);
  if (schema.l_accel != 4 || actions.size() != off + 4)
    throw ConfigError("two-stage enumeration expects the four accelerator steps");

  Memo memo;
  int iter = stage1_iters;
  for (std::size_t pe = 0; pe < schema.lists.pe_array.size(); ++pe)
    for (std::size_t gb = 0; gb < schema.lists.g_buf_kb.size(); ++gb)
      for (std::size_t rb = 0; rb < schema.lists.r_buf_bytes.size(); ++rb)
        for (std::size_t df = 0; df < schema.lists.dataflows.size(); ++df) {
          actions[off] = int(pe);
          actions[off + 1] = int(gb);
          actions[off + 2] = int(rb);
          actions[off + 3] = int(df);
          ++iter;
          try {
            const EvalOutcome& out = cached_eval(memo, actions, exact_evaluate);
            append_candidate(h, actions, out, iter, "two-stage", cfg);
          } catch (const std::exception& ex) {
            abort_run(std::move(h), iter, ex);
          }
        }
  return h;
}

std::vector<double> best_so_far(const SearchHistory& history) {
  std::vector<double> out;
  out.reserve(history.candidates.size());
  double best = -kInf;
  for (const Candidate& c : history.candidates) {
    best = std::max(best, c.reward);
    out.push_back(best);
  }
  return out;
}

std::size_t two_stage_winner(const SearchHistory& history,
                             const space::DecisionSchema& schema) {
  const std::size_t enum_size =
      schema.lists.pe_array.size() * schema.lists.g_buf_kb.size() *
      schema.lists.r_buf_bytes.size() * schema.lists.dataflows.size();
  if (history.candidates.size() < enum_size || enum_size == 0)
    throw ConfigError("history lacks a stage-2 enumeration block of " +
                      std::to_string(enum_size) + " rows");
  const std::size_t begin = history.candidates.size() - enum_size;
  std::size_t best = begin;
  auto better = [&](std::size_t a, std::size_t b) {
    const Candidate& ca = history.candidates[a];
    const Candidate& cb = history.candidates[b];
    if (ca.screened != cb.screened) return !ca.screened;
    return ca.reward > cb.reward;
  };
  for (std::size_t i = begin + 1; i < history.candidates.size(); ++i)
    if (better(i, best)) best = i;
  return best;
}

std::size_t best_index(const SearchHistory& history) {
  if (history.candidates.empty())
    throw EmptyResultError("empty search history");
  const std::size_t none = history.candidates.size();
  std::size_t best = none;
  for (std::size_t i = 0; i < history.candidates.size(); ++i) {
    if (history.candidates[i].screened) continue;
    if (best == none || history.candidates[i].reward > history.candidates[best].reward)
      best = i;
  }
  if (best != none) return best;
  best = 0;
  for (std::size_t i = 1; i < history.candidates.size(); ++i)
    if (history.candidates[i].reward > history.candidates[best].reward) best = i;
  return best;
}

std::vector<std::size_t> rank_by_reward(const SearchHistory& history) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < history.candidates.size(); ++i)
    if (!history.candidates[i].screened) idx.push_back(i);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return history.candidates[a].reward > history.candidates[b].reward;
  });
  return idx;
}

std::vector<Candidate> pareto_front(const SearchHistory& history,
                                    surrogate::Metric metric) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < history.candidates.size(); ++i) {
    const Candidate& c = history.candidates[i];
    if (!c.screened && std::isfinite(metric_of(c, metric))) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ma = metric_of(history.candidates[a], metric);
    const double mb = metric_of(history.candidates[b], metric);
    if (ma != mb) return ma < mb;
    return history.candidates[a].accuracy > history.candidates[b].accuracy;
  });
  // Sweep in metric order: a group of equal-metric candidates survives only
  // when its best accuracy strictly beats everything cheaper, and within the
  // group only exact accuracy ties with that best survive.
  std::vector<Candidate> front;
  double best_acc = -kInf;
  std::size_t i = 0;
  while (i < idx.size()) {
    std::size_t j = i;
    const double m = metric_of(history.candidates[idx[i]], metric);
    while (j < idx.size() && metric_of(history.candidates[idx[j]], metric) == m)
      ++j;
    const double group_best = history.candidates[idx[i]].accuracy;
    if (group_best > best_acc) {
      for (std::size_t k = i; k < j; ++k)
        if (history.candidates[idx[k]].accuracy == group_best)
          front.push_back(history.candidates[idx[k]]);
      best_acc = group_best;
    }
    i = j;
  }
  return front;
}

std::vector<FinalizedCandidate> finalize_top_n(
    const SearchHistory& history, int n, const space::DecisionSchema& schema,
    const lower::MacroConfig& macro, const cost::HardwareModel& hardware,
    const proxy::AccuracyFn& accuracy) {
  if (n < 1) throw ConfigError("finalization count must be >= 1");
  if (!accuracy) throw ConfigError("finalization needs an accuracy oracle");
  cost::validate_hardware(hardware);
  const std::vector<std::size_t> order = rank_by_reward(history);
  if (order.empty())
    throw EmptyResultError(
        "no unscreened candidate to finalize (thresholds " +
        fmt17(history.config.reward.t_lat_ms) + " ms / " +
        fmt17(history.config.reward.t_eer_mj) + " mJ)");
  const RewardSpec& spec = history.config.reward;
  std::vector<FinalizedCandidate> out;
  const std::size_t take = std::min(std::size_t(n), order.size());
  for (std::size_t r = 0; r < take; ++r) {
    FinalizedCandidate f;
    f.candidate = history.candidates[order[r]];
    const space::DesignPoint point = space::decode(f.candidate.actions, schema);
    const lower::LayerGraph graph = lower::derive_network(point.dnn, macro);
    f.exact_accuracy = accuracy(graph);
    cost::HardwareModel hw = hardware;
    hw.accel = point.accel;
    try {
      cost::CostReport report = cost::simulate(graph, hw);
      f.exact_latency_ms = report.latency_ms;
      f.exact_energy_mj = report.energy_mj;
      f.exact_reward = reward(f.exact_accuracy, f.exact_latency_ms,
                              f.exact_energy_mj, spec);
      f.exact_screened =
          history.config.hard_screen &&
          violates_thresholds(f.exact_latency_ms, f.exact_energy_mj, spec);
      f.candidate.finalized = std::move(report);
    } catch (const InfeasibleError&) {
      f.exact_latency_ms = kInf;
      f.exact_energy_mj = kInf;
      f.exact_reward = kInfeasibleReward;
      f.exact_screened = true;
    }
    f.latency_delta_ms = f.exact_latency_ms - f.candidate.latency_ms;
    f.energy_delta_mj = f.exact_energy_mj - f.candidate.energy_mj;
    out.push_back(std::move(f));
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const FinalizedCandidate& a, const FinalizedCandidate& b) {
                     if (a.exact_screened != b.exact_screened)
                       return !a.exact_screened;
                     return a.exact_reward > b.exact_reward;
                   });
  if (out.front().exact_screened)
    throw EmptyResultError(
        "every finalized candidate violates the thresholds under exact "
        "evaluation (" + std::to_string(out.size()) + " checked)");
  out.front().winner = true;
  return out;
}

std::string history_to_text(const SearchHistory& history) {
  std::string text = "search-history v1\n";
  text += "schema " + std::to_string(history.schema_hash) + "\n";
  text += "candidates " + std::to_string(history.candidates.size()) + "\n";
  for (const Candidate& c : history.candidates) {
    text += std::to_string(c.iteration);
    text += ' ';
    text += space::to_line(c.actions);
    text += ' ';
    text += fmt17(c.accuracy);
    text += ' ';
    text += fmt17(c.latency_ms);
    text += ' ';
    text += fmt17(c.energy_mj);
    text += ' ';
    text += fmt17(c.reward);
    text += c.screened ? " 1 " : " 0 ";
    text += c.source;
    text += '\n';
  }
  text += "end\n";
  return text;
}

namespace {

double parse_double(const std::string& tok, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || tok.empty())
    throw DecodeError(std::string("history: bad ") + what + " \"" + tok + "\"");
  return v;
}

}  // namespace

SearchHistory history_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  auto next_line = [&](const char* what) {
    if (!std::getline(in, line))
      throw DecodeError(std::string("history: truncated before ") + what);
    return line;
  };
  if (next_line("header") != "search-history v1")
    throw DecodeError("history: bad header \"" + line + "\"");
  SearchHistory h;
  std::istringstream schema_line(next_line("schema line"));
  std::string word;
  if (!(schema_line >> word >> h.schema_hash) || word != "schema")
    throw DecodeError("history: bad schema line");
  std::istringstream count_line(next_line("candidate count"));
  std::size_t count = 0;
  if (!(count_line >> word >> count) || word != "candidates")
    throw DecodeError("history: bad candidate count line");
  std::size_t decisions = 0;
  for (std::size_t i = 0; i < count; ++i) {
    std::istringstream row(next_line("candidate row"));
    Candidate c;
    std::string seq, acc, lat, en, rew, scr;
    if (!(row >> c.iteration >> seq >> acc >> lat >> en >> rew >> scr >> c.source))
      throw DecodeError("history: malformed row " + std::to_string(i));
    std::string extra;
    if (row >> extra)
      throw DecodeError("history: trailing fields on row " + std::to_string(i));
    c.actions = space::parse_line(seq);
    if (i == 0) decisions = c.actions.size();
    if (c.actions.size() != decisions)
      throw DecodeError("history: row " + std::to_string(i) + " has " +
                        std::to_string(c.actions.size()) + " decisions, expected " +
                        std::to_string(decisions));
    c.accuracy = parse_double(acc, "accuracy");
    c.latency_ms = parse_double(lat, "latency");
    c.energy_mj = parse_double(en, "energy");
    c.reward = parse_double(rew, "reward");
    if (scr == "0") c.screened = false;
    else if (scr == "1") c.screened = true;
    else throw DecodeError("history: bad screened flag \"" + scr + "\"");
    if (c.source != "RL" && c.source != "random" && c.source != "two-stage")
      throw DecodeError("history: unknown source tag \"" + c.source + "\"");
    h.candidates.push_back(std::move(c));
  }
  if (next_line("end marker") != "end")
    throw DecodeError("history: missing end marker");
  if (std::getline(in, line) && !line.empty())
    throw DecodeError("history: trailing content after end marker");
  return h;
}

}  // namespace codesign::search
