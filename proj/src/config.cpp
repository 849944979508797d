#include "codesign/config.hpp"

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "codesign/errors.hpp"

namespace codesign::config {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
  throw ConfigError("config key '" + path + "': " + why);
}

void check_known(const json& obj, const std::string& prefix,
                 std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown config key '" + prefix + it.key() + "'");
  }
}

const json* field(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void read_num(const json& obj, const std::string& prefix, const char* key,
              double& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_number()) fail(prefix + key, "expected a number");
  out = v->get<double>();
}

void read_int(const json& obj, const std::string& prefix, const char* key,
              int& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_number_integer()) fail(prefix + key, "expected an integer");
  out = v->get<int>();
}

void read_u64(const json& obj, const std::string& prefix, const char* key,
              std::uint64_t& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!(v->is_number_unsigned() ||
        (v->is_number_integer() && v->get<std::int64_t>() >= 0)))
    fail(prefix + key, "expected a non-negative integer");
  out = v->get<std::uint64_t>();
}

void read_bool(const json& obj, const std::string& prefix, const char* key,
               bool& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_boolean()) fail(prefix + key, "expected true or false");
  out = v->get<bool>();
}

void read_str(const json& obj, const std::string& prefix, const char* key,
              std::string& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_string()) fail(prefix + key, "expected a string");
  out = v->get<std::string>();
}

void read_num_list(const json& obj, const std::string& prefix, const char* key,
                   std::vector<double>& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_array()) fail(prefix + key, "expected an array of numbers");
  std::vector<double> vals;
  for (const json& e : *v) {
    if (!e.is_number()) fail(prefix + key, "expected an array of numbers");
    vals.push_back(e.get<double>());
  }
  out = std::move(vals);
}

void read_int_list(const json& obj, const std::string& prefix, const char* key,
                   std::vector<int>& out) {
  const json* v = field(obj, key);
  if (!v) return;
  if (!v->is_array()) fail(prefix + key, "expected an array of integers");
  std::vector<int> vals;
  for (const json& e : *v) {
    if (!e.is_number_integer()) fail(prefix + key, "expected an array of integers");
    vals.push_back(e.get<int>());
  }
  out = std::move(vals);
}

space::Dataflow parse_dataflow(const std::string& name, const std::string& path) {
  if (name == "WS") return space::Dataflow::WS;
  if (name == "OS") return space::Dataflow::OS;
  if (name == "RS") return space::Dataflow::RS;
  if (name == "NLR") return space::Dataflow::NLR;
  fail(path, "unknown dataflow '" + name + "' (expected WS, OS, RS, or NLR)");
}

void parse_space(const json& j, SpaceSection& s) {
  check_known(j, "space.",
              {"b", "n_cells", "r_cells", "pe_array", "g_buf_kb", "r_buf_bytes",
               "dataflows"});
  read_int(j, "space.", "b", s.b);
  read_int(j, "space.", "n_cells", s.n_cells);
  read_int(j, "space.", "r_cells", s.r_cells);
  if (const json* v = field(j, "pe_array")) {
    if (!v->is_array()) fail("space.pe_array", "expected an array of [rows, cols] pairs");
    std::vector<space::PeDims> dims;
    for (const json& e : *v) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
          !e[1].is_number_integer())
        fail("space.pe_array", "expected an array of [rows, cols] pairs");
      dims.push_back({e[0].get<int>(), e[1].get<int>()});
    }
    s.lists.pe_array = std::move(dims);
  }
  read_int_list(j, "space.", "g_buf_kb", s.lists.g_buf_kb);
  read_int_list(j, "space.", "r_buf_bytes", s.lists.r_buf_bytes);
  if (const json* v = field(j, "dataflows")) {
    if (!v->is_array()) fail("space.dataflows", "expected an array of strings");
    std::vector<space::Dataflow> flows;
    for (const json& e : *v) {
      if (!e.is_string()) fail("space.dataflows", "expected an array of strings");
      flows.push_back(parse_dataflow(e.get<std::string>(), "space.dataflows"));
    }
    s.lists.dataflows = std::move(flows);
  }
}

void parse_macro(const json& j, lower::MacroConfig& m) {
  check_known(j, "macro.",
              {"input", "stem_channels", "num_classes", "reduction_positions"});
  if (const json* v = field(j, "input")) {
    if (!v->is_object()) fail("macro.input", "expected an object with h, w, c");
    check_known(*v, "macro.input.", {"h", "w", "c"});
    read_int(*v, "macro.input.", "h", m.input.h);
    read_int(*v, "macro.input.", "w", m.input.w);
    read_int(*v, "macro.input.", "c", m.input.c);
  }
  read_int(j, "macro.", "stem_channels", m.stem_channels);
  read_int(j, "macro.", "num_classes", m.num_classes);
  read_int_list(j, "macro.", "reduction_positions", m.reduction_positions);
}

void parse_hardware(const json& j, cost::HardwareModel& h) {
  check_known(j, "hardware.", {"clock_ghz", "dram_bandwidth_gbps", "energy"});
  read_num(j, "hardware.", "clock_ghz", h.clock_ghz);
  read_num(j, "hardware.", "dram_bandwidth_gbps", h.dram_bandwidth_gbps);
  if (const json* v = field(j, "energy")) {
    if (!v->is_object()) fail("hardware.energy", "expected an object");
    check_known(*v, "hardware.energy.",
                {"mac_pj", "rf_access_pj", "gbuf_access_pj", "dram_access_pj"});
    read_num(*v, "hardware.energy.", "mac_pj", h.energy.mac_pj);
    read_num(*v, "hardware.energy.", "rf_access_pj", h.energy.rf_access_pj);
    read_num(*v, "hardware.energy.", "gbuf_access_pj", h.energy.gbuf_access_pj);
    read_num(*v, "hardware.energy.", "dram_access_pj", h.energy.dram_access_pj);
  }
}

void parse_surrogate(const json& j, SurrogateSection& s) {
  check_known(j, "surrogate.",
              {"samples", "seed", "tau_grid", "sigma2_grid", "train_split",
               "log10_targets"});
  read_int(j, "surrogate.", "samples", s.samples);
  read_u64(j, "surrogate.", "seed", s.seed);
  read_num_list(j, "surrogate.", "tau_grid", s.tau_grid);
  read_num_list(j, "surrogate.", "sigma2_grid", s.sigma2_grid);
  read_int(j, "surrogate.", "train_split", s.train_split);
  read_bool(j, "surrogate.", "log10_targets", s.log10_targets);
}

void parse_reward(const json& j, search::RewardSpec& r) {
  check_known(j, "reward.",
              {"preset", "alpha1", "omega1", "alpha2", "omega2", "t_lat_ms",
               "t_eer_mj", "entropy_weight"});
  if (const json* v = field(j, "preset")) {
    if (!v->is_string()) fail("reward.preset", "expected a string");
    r = search::preset(v->get<std::string>());
  }
  read_num(j, "reward.", "alpha1", r.alpha1);
  read_num(j, "reward.", "omega1", r.omega1);
  read_num(j, "reward.", "alpha2", r.alpha2);
  read_num(j, "reward.", "omega2", r.omega2);
  read_num(j, "reward.", "t_lat_ms", r.t_lat_ms);
  read_num(j, "reward.", "t_eer_mj", r.t_eer_mj);
  read_num(j, "reward.", "entropy_weight", r.entropy_weight);
}

void parse_controller(const json& j, ControllerSection& c) {
  check_known(j, "controller.",
              {"lr", "temperature", "tanh_c", "baseline_decay", "batch_size",
               "hidden", "embed"});
  read_num(j, "controller.", "lr", c.lr);
  read_num(j, "controller.", "temperature", c.temperature);
  read_num(j, "controller.", "tanh_c", c.tanh_c);
  read_num(j, "controller.", "baseline_decay", c.baseline_decay);
  read_int(j, "controller.", "batch_size", c.batch_size);
  read_int(j, "controller.", "hidden", c.hidden);
  read_int(j, "controller.", "embed", c.embed);
}

void parse_run(const json& j, RunSection& r) {
  check_known(j, "run.",
              {"iterations", "seed", "top_n", "mode", "oracle", "use_surrogate",
               "hard_screen", "latency_model", "energy_model"});
  read_int(j, "run.", "iterations", r.iterations);
  read_u64(j, "run.", "seed", r.seed);
  read_int(j, "run.", "top_n", r.top_n);
  read_str(j, "run.", "mode", r.mode);
  read_str(j, "run.", "oracle", r.oracle);
  read_bool(j, "run.", "use_surrogate", r.use_surrogate);
  read_bool(j, "run.", "hard_screen", r.hard_screen);
  read_str(j, "run.", "latency_model", r.latency_model);
  read_str(j, "run.", "energy_model", r.energy_model);
}

void require_positive(double v, const char* path) {
  if (!(std::isfinite(v) && v > 0)) fail(path, "must be positive and finite");
}

void require_count(int v, const char* path) {
  if (v < 1) fail(path, "must be at least 1");
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

void validate(const RunConfig& cfg) {
  if (cfg.space.b < 3) fail("space.b", "must be at least 3");
  require_count(cfg.space.n_cells, "space.n_cells");
  if (cfg.space.r_cells < 0) fail("space.r_cells", "must be non-negative");
  if (cfg.space.lists.pe_array.empty()) fail("space.pe_array", "must be non-empty");
  for (const space::PeDims& d : cfg.space.lists.pe_array)
    if (d.rows < 1 || d.cols < 1) fail("space.pe_array", "dims must be at least 1");
  if (cfg.space.lists.g_buf_kb.empty()) fail("space.g_buf_kb", "must be non-empty");
  if (cfg.space.lists.r_buf_bytes.empty())
    fail("space.r_buf_bytes", "must be non-empty");
  if (cfg.space.lists.dataflows.empty()) fail("space.dataflows", "must be non-empty");

  require_count(cfg.macro.input.h, "macro.input.h");
  require_count(cfg.macro.input.w, "macro.input.w");
  require_count(cfg.macro.input.c, "macro.input.c");
  require_count(cfg.macro.stem_channels, "macro.stem_channels");
  require_count(cfg.macro.num_classes, "macro.num_classes");
  for (int p : cfg.macro.reduction_positions)
    if (p < 0) fail("macro.reduction_positions", "positions must be non-negative");

  require_positive(cfg.hardware.clock_ghz, "hardware.clock_ghz");
  require_positive(cfg.hardware.dram_bandwidth_gbps, "hardware.dram_bandwidth_gbps");
  const cost::EnergyTable& e = cfg.hardware.energy;
  for (double v : {e.mac_pj, e.rf_access_pj, e.gbuf_access_pj, e.dram_access_pj})
    if (!(std::isfinite(v) && v >= 0))
      fail("hardware.energy", "entries must be non-negative and finite");

  require_count(cfg.surrogate.samples, "surrogate.samples");
  // train_split is checked against the actual collection at fit time, not
  // against `samples`, so a small smoke collection stays usable.
  require_count(cfg.surrogate.train_split, "surrogate.train_split");
  if (cfg.surrogate.tau_grid.empty()) fail("surrogate.tau_grid", "must be non-empty");
  if (cfg.surrogate.sigma2_grid.empty())
    fail("surrogate.sigma2_grid", "must be non-empty");
  for (double v : cfg.surrogate.tau_grid) require_positive(v, "surrogate.tau_grid");
  for (double v : cfg.surrogate.sigma2_grid)
    if (!(std::isfinite(v) && v >= 0))
      fail("surrogate.sigma2_grid", "entries must be non-negative and finite");

  search::validate_reward_spec(cfg.reward);

  require_positive(cfg.controller.lr, "controller.lr");
  require_positive(cfg.controller.temperature, "controller.temperature");
  require_positive(cfg.controller.tanh_c, "controller.tanh_c");
  if (!(cfg.controller.baseline_decay >= 0 && cfg.controller.baseline_decay < 1))
    fail("controller.baseline_decay", "must lie in [0, 1)");
  require_count(cfg.controller.batch_size, "controller.batch_size");
  require_count(cfg.controller.hidden, "controller.hidden");
  require_count(cfg.controller.embed, "controller.embed");

  require_count(cfg.run.iterations, "run.iterations");
  require_count(cfg.run.top_n, "run.top_n");
  if (cfg.run.mode != "rl" && cfg.run.mode != "random" && cfg.run.mode != "two-stage")
    fail("run.mode", "expected rl, random, or two-stage");
  if (cfg.run.oracle.empty()) fail("run.oracle", "must name an accuracy oracle");
}

RunConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  check_known(j, "",
              {"space", "macro", "hardware", "surrogate", "reward", "controller",
               "run"});
  RunConfig cfg;
  const auto section = [&](const char* name) -> const json* {
    const json* v = field(j, name);
    if (v && !v->is_object()) fail(name, "expected an object");
    return v;
  };
  if (const json* v = section("space")) parse_space(*v, cfg.space);
  if (const json* v = section("macro")) parse_macro(*v, cfg.macro);
  if (const json* v = section("hardware")) parse_hardware(*v, cfg.hardware);
  if (const json* v = section("surrogate")) parse_surrogate(*v, cfg.surrogate);
  if (const json* v = section("reward")) parse_reward(*v, cfg.reward);
  if (const json* v = section("controller")) parse_controller(*v, cfg.controller);
  if (const json* v = section("run")) parse_run(*v, cfg.run);
  return cfg;
}

std::string config_to_json_text(const RunConfig& cfg) {
  json j;
  json& sp = j["space"];
  sp["b"] = cfg.space.b;
  sp["n_cells"] = cfg.space.n_cells;
  sp["r_cells"] = cfg.space.r_cells;
  sp["pe_array"] = json::array();
  for (const space::PeDims& d : cfg.space.lists.pe_array)
    sp["pe_array"].push_back({d.rows, d.cols});
  sp["g_buf_kb"] = cfg.space.lists.g_buf_kb;
  sp["r_buf_bytes"] = cfg.space.lists.r_buf_bytes;
  sp["dataflows"] = json::array();
  for (space::Dataflow df : cfg.space.lists.dataflows)
    sp["dataflows"].push_back(space::dataflow_name(df));

  json& ma = j["macro"];
  ma["input"] = {{"h", cfg.macro.input.h},
                 {"w", cfg.macro.input.w},
                 {"c", cfg.macro.input.c}};
  ma["stem_channels"] = cfg.macro.stem_channels;
  ma["num_classes"] = cfg.macro.num_classes;
  ma["reduction_positions"] = cfg.macro.reduction_positions;

  json& hw = j["hardware"];
  hw["clock_ghz"] = cfg.hardware.clock_ghz;
  hw["dram_bandwidth_gbps"] = cfg.hardware.dram_bandwidth_gbps;
  hw["energy"] = {{"mac_pj", cfg.hardware.energy.mac_pj},
                  {"rf_access_pj", cfg.hardware.energy.rf_access_pj},
                  {"gbuf_access_pj", cfg.hardware.energy.gbuf_access_pj},
                  {"dram_access_pj", cfg.hardware.energy.dram_access_pj}};

  json& su = j["surrogate"];
  su["samples"] = cfg.surrogate.samples;
  su["seed"] = cfg.surrogate.seed;
  su["tau_grid"] = cfg.surrogate.tau_grid;
  su["sigma2_grid"] = cfg.surrogate.sigma2_grid;
  su["train_split"] = cfg.surrogate.train_split;
  su["log10_targets"] = cfg.surrogate.log10_targets;

  json& rw = j["reward"];
  rw["alpha1"] = cfg.reward.alpha1;
  rw["omega1"] = cfg.reward.omega1;
  rw["alpha2"] = cfg.reward.alpha2;
  rw["omega2"] = cfg.reward.omega2;
  rw["t_lat_ms"] = cfg.reward.t_lat_ms;
  rw["t_eer_mj"] = cfg.reward.t_eer_mj;
  rw["entropy_weight"] = cfg.reward.entropy_weight;

  json& ct = j["controller"];
  ct["lr"] = cfg.controller.lr;
  ct["temperature"] = cfg.controller.temperature;
  ct["tanh_c"] = cfg.controller.tanh_c;
  ct["baseline_decay"] = cfg.controller.baseline_decay;
  ct["batch_size"] = cfg.controller.batch_size;
  ct["hidden"] = cfg.controller.hidden;
  ct["embed"] = cfg.controller.embed;

  json& rn = j["run"];
  rn["iterations"] = cfg.run.iterations;
  rn["seed"] = cfg.run.seed;
  rn["top_n"] = cfg.run.top_n;
  rn["mode"] = cfg.run.mode;
  rn["oracle"] = cfg.run.oracle;
  rn["use_surrogate"] = cfg.run.use_surrogate;
  rn["hard_screen"] = cfg.run.hard_screen;
  rn["latency_model"] = cfg.run.latency_model;
  rn["energy_model"] = cfg.run.energy_model;

  return j.dump(2) + "\n";
}

space::DecisionSchema build_schema(const SpaceSection& s) {
  return space::build_schema(s.lists, s.b, s.n_cells, s.r_cells);
}

search::SearchConfig to_search_config(const RunConfig& cfg) {
  search::SearchConfig sc;
  sc.reward = cfg.reward;
  sc.iterations = cfg.run.iterations;
  sc.batch_size = cfg.controller.batch_size;
  sc.seed = cfg.run.seed;
  sc.oracle = cfg.run.oracle;
  sc.use_surrogate = cfg.run.use_surrogate;
  sc.hard_screen = cfg.run.hard_screen;
  sc.top_n = cfg.run.top_n;
  sc.lr = cfg.controller.lr;
  sc.temperature = cfg.controller.temperature;
  sc.tanh_c = cfg.controller.tanh_c;
  sc.baseline_decay = cfg.controller.baseline_decay;
  sc.hidden = cfg.controller.hidden;
  sc.embed = cfg.controller.embed;
  return sc;
}

}  // namespace codesign::config
