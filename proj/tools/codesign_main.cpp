// Command-line front end: collect, fit, search, eval, pareto.  One JSON
// config drives every stage.  Data outputs are byte-reproducible under a
// fixed config and seed; wall-clock metadata is confined to meta.txt.

#include <cstdint>
#include <cstdio>
#include <ctime>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "codesign/accuracy_proxy.hpp"
#include "codesign/config.hpp"
#include "codesign/controller.hpp"
#include "codesign/cost_model.hpp"
#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"
#include "codesign/lowering.hpp"
#include "codesign/search.hpp"
#include "codesign/surrogate.hpp"
#include "codesign/text_io.hpp"

namespace {

using namespace codesign;

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string join_path(const std::string& dir, const std::string& name) {
  return dir.empty() || dir.back() == '/' ? dir + name : dir + "/" + name;
}

struct Overrides {
  bool has_seed = false;
  std::uint64_t seed = 0;
  std::string mode;    // empty = keep config
  std::string preset;  // empty = keep config
};

config::RunConfig load_config(const std::string& path, const Overrides& ov) {
  config::RunConfig cfg =
      path.empty() ? config::default_config()
                   : config::config_from_json_text(io::read_file(path));
  if (ov.has_seed) {
    cfg.run.seed = ov.seed;
    cfg.surrogate.seed = ov.seed;
  }
  if (!ov.mode.empty()) cfg.run.mode = ov.mode;
  if (!ov.preset.empty()) {
    // The preset swaps the trade-off constants; thresholds and the entropy
    // weight stay whatever the config says.
    const search::RewardSpec p = search::preset(ov.preset);
    cfg.reward.alpha1 = p.alpha1;
    cfg.reward.omega1 = p.omega1;
    cfg.reward.alpha2 = p.alpha2;
    cfg.reward.omega2 = p.omega2;
  }
  config::validate(cfg);
  return cfg;
}

void write_meta(const std::string& out_dir, const std::string& command,
                int argc, char** argv) {
  std::ostringstream os;
  os << "command " << command << "\n";
  os << "argv";
  for (int i = 0; i < argc; ++i) os << " " << argv[i];
  os << "\n";
  char stamp[32] = "unknown";
  const std::time_t now = std::time(nullptr);
  if (std::tm tm{}; gmtime_r(&now, &tm))
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &tm);
  os << "time_utc " << stamp << "\n";
  io::write_file(join_path(out_dir, "meta.txt"), os.str());
}

void echo_config(const config::RunConfig& cfg, const std::string& out_dir) {
  io::write_file(join_path(out_dir, "config.json"), config::config_to_json_text(cfg));
}

std::string accel_line(const space::AcceleratorConfig& a) {
  std::ostringstream os;
  os << "accelerator pe " << a.pe.rows << "x" << a.pe.cols << " gbuf_kb "
     << a.g_buf_kb << " rbuf_bytes " << a.r_buf_bytes << " dataflow "
     << space::dataflow_name(a.dataflow);
  return os.str();
}

std::string pareto_to_text(const std::vector<search::Candidate>& front,
                           const char* metric) {
  std::ostringstream os;
  os << "pareto v1 metric " << metric << "\n";
  os << "columns latency_ms accuracy energy_mj reward iteration source decisions\n";
  for (const search::Candidate& c : front)
    os << fmt17(c.latency_ms) << " " << fmt17(c.accuracy) << " "
       << fmt17(c.energy_mj) << " " << fmt17(c.reward) << " " << c.iteration
       << " " << c.source << " " << space::to_line(c.actions) << "\n";
  os << "end\n";
  return os.str();
}

void write_pareto_files(const search::SearchHistory& h, const std::string& out_dir) {
  io::write_file(join_path(out_dir, "pareto_latency.txt"),
                 pareto_to_text(search::pareto_front(h, surrogate::Metric::Latency),
                                "latency"));
  io::write_file(join_path(out_dir, "pareto_energy.txt"),
                 pareto_to_text(search::pareto_front(h, surrogate::Metric::Energy),
                                "energy"));
}

std::string top_n_to_text(const std::vector<search::FinalizedCandidate>& rows) {
  std::ostringstream os;
  os << "top-n v1\n";
  os << "count " << rows.size() << "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const search::FinalizedCandidate& f = rows[i];
    const search::Candidate& c = f.candidate;
    os << "rank " << i + 1 << " winner " << (f.winner ? 1 : 0) << " iteration "
       << c.iteration << " source " << c.source << " decisions "
       << space::to_line(c.actions) << " predicted_accuracy " << fmt17(c.accuracy)
       << " predicted_latency_ms " << fmt17(c.latency_ms) << " predicted_energy_mj "
       << fmt17(c.energy_mj) << " predicted_reward " << fmt17(c.reward)
       << " exact_accuracy " << fmt17(f.exact_accuracy) << " exact_latency_ms "
       << fmt17(f.exact_latency_ms) << " exact_energy_mj " << fmt17(f.exact_energy_mj)
       << " exact_reward " << fmt17(f.exact_reward) << " exact_screened "
       << (f.exact_screened ? 1 : 0) << " latency_delta_ms "
       << fmt17(f.latency_delta_ms) << " energy_delta_mj " << fmt17(f.energy_delta_mj)
       << "\n";
  }
  os << "end\n";
  return os.str();
}

std::string threshold_flag(double latency_ms, double energy_mj,
                           const search::RewardSpec& spec) {
  if (!search::violates_thresholds(latency_ms, energy_mj, spec))
    return "flag within thresholds";
  std::ostringstream os;
  os << "flag violates thresholds (";
  bool first = true;
  if (!(latency_ms < spec.t_lat_ms)) {
    os << "latency_ms " << fmt6(latency_ms) << " vs threshold " << fmt6(spec.t_lat_ms);
    first = false;
  }
  if (!(energy_mj < spec.t_eer_mj)) {
    if (!first) os << "; ";
    os << "energy_mj " << fmt6(energy_mj) << " vs threshold " << fmt6(spec.t_eer_mj);
  }
  os << ")";
  return os.str();
}

int cmd_collect(const config::RunConfig& cfg, const std::string& out_dir,
                int argc, char** argv) {
  const space::DecisionSchema schema = config::build_schema(cfg.space);
  surrogate::CollectConfig cc;
  cc.n = cfg.surrogate.samples;
  cc.seed = cfg.surrogate.seed;
  cc.macro = cfg.macro;
  cc.base_hw = cfg.hardware;
  io::ensure_dir(out_dir);
  echo_config(cfg, out_dir);
  write_meta(out_dir, "collect", argc, argv);

  const surrogate::Collection col = surrogate::collect_dataset(schema, cc);
  io::write_file(join_path(out_dir, "collection.txt"),
                 surrogate::collection_to_text(col, schema));
  std::ostringstream log;
  log << "redraws " << col.redraws.size() << "\n";
  for (const surrogate::RedrawEvent& ev : col.redraws)
    log << "row " << ev.row << " attempt " << ev.attempt << " " << ev.reason << "\n";
  io::write_file(join_path(out_dir, "redraws.txt"), log.str());

  std::cout << "collected " << col.rows.size() << " samples (" << col.redraws.size()
            << " redraws) -> " << join_path(out_dir, "collection.txt") << "\n";
  return 0;
}

int cmd_fit(const config::RunConfig& cfg, const std::string& collection_path,
            const std::string& out_dir, int argc, char** argv) {
  const space::DecisionSchema schema = config::build_schema(cfg.space);
  const surrogate::Collection col =
      surrogate::collection_from_text(io::read_file(collection_path), schema);
  const std::size_t n = col.rows.size();
  if (n == 0) throw ConfigError("collection '" + collection_path + "' has no rows");
  const std::size_t split = std::size_t(cfg.surrogate.train_split);
  if (split > n)
    throw ConfigError("surrogate.train_split (" + std::to_string(split) +
                      ") exceeds the collection size (" + std::to_string(n) + ")");
  io::ensure_dir(out_dir);
  echo_config(cfg, out_dir);
  write_meta(out_dir, "fit", argc, argv);

  for (const surrogate::Metric metric :
       {surrogate::Metric::Latency, surrogate::Metric::Energy}) {
    const char* name = surrogate::metric_name(metric);
    const surrogate::Dataset ds =
        surrogate::make_dataset(col, metric, cfg.surrogate.log10_targets, 0, split);
    const surrogate::HyperparamChoice hp = surrogate::select_hyperparams(
        ds, cfg.surrogate.tau_grid, cfg.surrogate.sigma2_grid);
    const surrogate::GPModel model = surrogate::gp_fit(ds, hp.tau, hp.sigma2);
    const std::string model_path =
        join_path(out_dir, std::string("gp_") + name + ".txt");
    io::write_file(model_path, surrogate::model_to_text(model));
    std::cout << "fitted " << name << " gp (tau " << fmt6(hp.tau) << ", sigma2 "
              << fmt6(hp.sigma2) << ", " << split << " rows) -> " << model_path
              << "\n";
    if (split < n) {
      const surrogate::Dataset train =
          surrogate::make_dataset(col, metric, false, 0, split);
      const surrogate::Dataset test =
          surrogate::make_dataset(col, metric, false, split, n);
      const surrogate::HarnessResult hr = surrogate::mse_harness(
          train, test, {"gp", "knn5", "ridge"}, cfg.surrogate.log10_targets);
      io::write_file(join_path(out_dir, std::string("fit_report_") + name + ".txt"),
                     surrogate::harness_to_text(hr));
    }
  }
  return 0;
}

int cmd_search(const config::RunConfig& cfg, const std::string& out_dir,
               int argc, char** argv) {
  const space::DecisionSchema schema = config::build_schema(cfg.space);
  const search::SearchConfig scfg = config::to_search_config(cfg);
  const proxy::OracleRegistry registry = proxy::default_registry();
  const proxy::AccuracyFn oracle = registry.get(cfg.run.oracle);

  search::EvalSetup setup;
  setup.schema = &schema;
  setup.macro = cfg.macro;
  setup.hardware = cfg.hardware;
  setup.accuracy = oracle;
  setup.log10_gp_targets = cfg.surrogate.log10_targets;
  surrogate::GPModel gp_latency, gp_energy;
  if (cfg.run.use_surrogate) {
    if (cfg.run.latency_model.empty() || cfg.run.energy_model.empty() ||
        !io::file_exists(cfg.run.latency_model) ||
        !io::file_exists(cfg.run.energy_model))
      throw ConfigError(
          "surrogate models are not available: run `codesign collect` and then "
          "`codesign fit`, point run.latency_model and run.energy_model at the "
          "fitted checkpoints, or set run.use_surrogate to false");
    gp_latency = surrogate::model_from_text(io::read_file(cfg.run.latency_model));
    gp_energy = surrogate::model_from_text(io::read_file(cfg.run.energy_model));
    setup.use_surrogate = true;
    setup.gp_latency = &gp_latency;
    setup.gp_energy = &gp_energy;
  }
  const search::EvalFn evaluate = search::make_evaluator(setup);
  search::EvalSetup exact_setup = setup;
  exact_setup.use_surrogate = false;
  exact_setup.gp_latency = nullptr;
  exact_setup.gp_energy = nullptr;
  const search::EvalFn exact_evaluate = search::make_evaluator(exact_setup);

  io::ensure_dir(out_dir);
  echo_config(cfg, out_dir);
  write_meta(out_dir, "search", argc, argv);

  search::SearchHistory history;
  ctrl::PolicyState policy;
  bool have_policy = false;
  try {
    if (cfg.run.mode == "rl") {
      history = search::run_search(scfg, schema, evaluate, &policy);
      have_policy = true;
    } else if (cfg.run.mode == "random") {
      history = search::random_search(scfg, schema, evaluate);
    } else {
      history = search::two_stage_baseline(scfg, schema, evaluate, exact_evaluate,
                                           &policy);
      have_policy = true;
    }
  } catch (const search::SearchAborted& aborted) {
    io::write_file(join_path(out_dir, "history.txt"),
                   search::history_to_text(aborted.partial));
    std::cerr << "search aborted; partial history written to "
              << join_path(out_dir, "history.txt") << "\n";
    throw;
  }

  io::write_file(join_path(out_dir, "history.txt"), search::history_to_text(history));
  if (have_policy)
    io::write_file(join_path(out_dir, "policy.txt"), ctrl::policy_to_text(policy));
  write_pareto_files(history, out_dir);

  const std::vector<search::FinalizedCandidate> finalized = search::finalize_top_n(
      history, scfg.top_n, schema, cfg.macro, cfg.hardware, oracle);
  io::write_file(join_path(out_dir, "top_n.txt"), top_n_to_text(finalized));

  const search::FinalizedCandidate& win = finalized.front();
  std::cout << "mode " << cfg.run.mode << ": " << history.candidates.size()
            << " evaluations, top-" << finalized.size() << " finalized -> "
            << join_path(out_dir, "top_n.txt") << "\n";
  std::cout << "winner " << space::to_line(win.candidate.actions) << "\n";
  const space::DesignPoint point =
      space::decode(win.candidate.actions, schema);
  std::cout << accel_line(point.accel) << "\n";
  std::cout << "exact accuracy " << fmt6(win.exact_accuracy) << ", latency_ms "
            << fmt6(win.exact_latency_ms) << ", energy_mj "
            << fmt6(win.exact_energy_mj) << ", reward " << fmt6(win.exact_reward)
            << "\n";
  return 0;
}

int cmd_eval(const config::RunConfig& cfg, const std::string& design_line,
             const std::string& out_dir, int argc, char** argv) {
  const space::DecisionSchema schema = config::build_schema(cfg.space);
  const std::vector<int> seq = space::parse_line(design_line);
  const space::ValidationResult vres = space::validate(seq, schema);
  if (!vres.ok()) {
    std::ostringstream os;
    os << "invalid design line:";
    for (const space::Violation& v : vres.violations) {
      if (v.step < 0)
        os << " [sequence] " << v.rule << ";";
      else
        os << " [step " << v.step << "] " << v.rule << ";";
    }
    throw ConfigError(os.str());
  }
  const space::DesignPoint point = *vres.point;
  const lower::LayerGraph graph = lower::derive_network(point.dnn, cfg.macro);
  cost::HardwareModel hw = cfg.hardware;
  hw.accel = point.accel;
  const cost::CostReport report = cost::simulate(graph, hw);
  const proxy::OracleRegistry registry = proxy::default_registry();
  const double accuracy = registry.get(cfg.run.oracle)(graph);
  const double reward =
      search::reward(accuracy, report.latency_ms, report.energy_mj, cfg.reward);

  std::ostringstream os;
  os << "design " << space::to_line(seq) << "\n";
  os << accel_line(point.accel) << "\n";
  os << cost::report_to_text(report);
  os << "accuracy " << fmt17(accuracy) << "\n";
  os << "reward " << fmt17(reward) << "\n";
  os << threshold_flag(report.latency_ms, report.energy_mj, cfg.reward) << "\n";
  std::cout << os.str();
  if (!out_dir.empty()) {
    io::ensure_dir(out_dir);
    io::write_file(join_path(out_dir, "eval.txt"), os.str());
    echo_config(cfg, out_dir);
    write_meta(out_dir, "eval", argc, argv);
  }
  return 0;
}

int cmd_pareto(const std::string& history_path, const std::string& out_dir,
               int argc, char** argv) {
  const search::SearchHistory history =
      search::history_from_text(io::read_file(history_path));
  io::ensure_dir(out_dir);
  write_meta(out_dir, "pareto", argc, argv);
  write_pareto_files(history, out_dir);
  std::cout << "pareto fronts from " << history.candidates.size()
            << " candidates -> " << join_path(out_dir, "pareto_latency.txt") << ", "
            << join_path(out_dir, "pareto_energy.txt") << "\n";
  return 0;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"joint DNN / systolic-accelerator design search"};
  app.require_subcommand(1);

  std::string config_path, out_dir, collection_path, history_path, design_line;
  std::string mode, preset;
  std::uint64_t seed = 0;

  CLI::App* collect = app.add_subcommand("collect", "simulate a uniform sample of design points");
  collect->add_option("--config", config_path, "JSON config path (defaults apply when omitted)");
  collect->add_option("--out", out_dir, "output directory")->required();
  collect->add_option("--seed", seed, "override the collection seed");

  CLI::App* fit = app.add_subcommand("fit", "fit GP cost predictors from a collection");
  fit->add_option("--config", config_path, "JSON config path");
  fit->add_option("--collection", collection_path, "collection file from `collect`")->required();
  fit->add_option("--out", out_dir, "output directory")->required();

  CLI::App* search_cmd = app.add_subcommand("search", "run the controller or a baseline");
  search_cmd->add_option("--config", config_path, "JSON config path");
  search_cmd->add_option("--out", out_dir, "output directory")->required();
  search_cmd->add_option("--seed", seed, "override the search seed");
  search_cmd->add_option("--mode", mode, "rl, random, or two-stage")
      ->check(CLI::IsMember({"rl", "random", "two-stage"}));
  search_cmd->add_option("--preset", preset,
                         "reward preset: energy-tradeoff, latency-tradeoff, balanced")
      ->check(CLI::IsMember({"energy-tradeoff", "latency-tradeoff", "balanced"}));

  CLI::App* eval = app.add_subcommand("eval", "exactly evaluate one encoded design point");
  eval->add_option("design", design_line, "comma-separated decision sequence")->required();
  eval->add_option("--config", config_path, "JSON config path");
  eval->add_option("--out", out_dir, "optional output directory");
  eval->add_option("--preset", preset,
                   "reward preset: energy-tradeoff, latency-tradeoff, balanced")
      ->check(CLI::IsMember({"energy-tradeoff", "latency-tradeoff", "balanced"}));

  CLI::App* pareto = app.add_subcommand("pareto", "recompute pareto fronts from a history file");
  pareto->add_option("--history", history_path, "history file from `search`")->required();
  pareto->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // --help exits 0; any parse problem is a config error
  }

  Overrides ov;
  ov.mode = mode;
  ov.preset = preset;
  if (collect->count("--seed") || search_cmd->count("--seed")) {
    ov.has_seed = true;
    ov.seed = seed;
  }

  if (collect->parsed()) return cmd_collect(load_config(config_path, ov), out_dir, argc, argv);
  if (fit->parsed())
    return cmd_fit(load_config(config_path, ov), collection_path, out_dir, argc, argv);
  if (search_cmd->parsed())
    return cmd_search(load_config(config_path, ov), out_dir, argc, argv);
  if (eval->parsed())
    return cmd_eval(load_config(config_path, ov), design_line, out_dir, argc, argv);
  if (pareto->parsed()) return cmd_pareto(history_path, out_dir, argc, argv);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const codesign::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const codesign::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
}
