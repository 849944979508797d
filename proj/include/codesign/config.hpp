#pragma once
// One JSON configuration file drives every CLI stage: dataset collection,
// surrogate fitting, search, and single-point evaluation.  Sections are
// space / macro / hardware / surrogate / reward / controller / run; every
// key has a documented default, unknown keys are rejected by dotted path,
// and the effective config echoes back as deterministic JSON text that
// parses to an identical config.

#include <cstdint>
#include <string>
#include <vector>

#include "codesign/controller.hpp"
#include "codesign/cost_model.hpp"
#include "codesign/design_space.hpp"
#include "codesign/lowering.hpp"
#include "codesign/search.hpp"
#include "codesign/surrogate.hpp"

namespace codesign::config {

struct SpaceSection {
  space::ChoiceLists lists = space::ChoiceLists::defaults();
  int b = 7;
  int n_cells = 4;
  int r_cells = 2;
};

struct SurrogateSection {
  int samples = 3600;
  std::uint64_t seed = 1;
  std::vector<double> tau_grid = surrogate::kDefaultTauGrid;
  std::vector<double> sigma2_grid = surrogate::kDefaultSigma2Grid;
  int train_split = 3000;  // leading rows fit the models, the rest report error
  bool log10_targets = true;
};

struct ControllerSection {
  double lr = ctrl::kLearningRate;
  double temperature = ctrl::kTemperature;
  double tanh_c = ctrl::kTanhC;
  double baseline_decay = ctrl::kBaselineDecay;
  int batch_size = 5;
  int hidden = ctrl::kHiddenSize;
  int embed = ctrl::kEmbedSize;
};

struct RunSection {
  int iterations = 12000;
  std::uint64_t seed = 0;
  int top_n = 10;
  std::string mode = "rl";  // rl | random | two-stage
  std::string oracle = "synthetic-default";
  bool use_surrogate = true;
  bool hard_screen = true;
  std::string latency_model;  // fitted GP checkpoint paths, required when
  std::string energy_model;   // use_surrogate is on
};

struct RunConfig {
  SpaceSection space;
  lower::MacroConfig macro;
  cost::HardwareModel hardware;  // accel field unused; it comes per design point
  SurrogateSection surrogate;
  search::RewardSpec reward;
  ControllerSection controller;
  RunSection run;
};

RunConfig default_config();

// Range and enum checks beyond JSON shape (positive counts, known mode,
// train split within the collection).  Throws ConfigError.
void validate(const RunConfig& cfg);

// Parses a JSON object.  Missing keys keep their defaults; unknown keys
// throw ConfigError naming the dotted path.  "reward.preset" applies the
// named preset first, then sibling reward keys override individual fields.
RunConfig config_from_json_text(const std::string& text);

// Two-space-indented JSON with sorted keys; byte-deterministic for a given
// config and round-trips through config_from_json_text unchanged.
std::string config_to_json_text(const RunConfig& cfg);

space::DecisionSchema build_schema(const SpaceSection& s);
search::SearchConfig to_search_config(const RunConfig& cfg);

}  // namespace codesign::config
