#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"
#include "codesign/lowering.hpp"

// Synthetic accuracy landscape standing in for a trained evaluator.  The
// score combines a saturating capacity term (log10 of total MACs above a
// fixed floor), a quality-weighted mean over the cell ops, and a small
// deterministic perturbation keyed on the serialized graph, clamped to
// [a_min, a_max].  Outputs are synthetic by construction and are never
// real dataset accuracies.
namespace codesign::proxy {

// evaluate(graph) -> accuracy in [0, 1]; must be a pure deterministic
// function of the graph.
using AccuracyFn = std::function<double(const lower::LayerGraph&)>;

struct ProxyParams {
  double a_min = 0.80;
  double a_max = 0.97;
  // Indexed by OpKind; parameter-free pooling ops rank lowest.
  std::array<double, space::kOpCount> op_quality = {0.95, 1.0, 0.85,
                                                    0.88, 0.55, 0.55};
  // Diminishing-returns constant for the MAC capacity term (decades).
  double capacity_scale = 1.0;
  // Peak magnitude of the deterministic perturbation; 0 disables it.
  double noise_amplitude = 0.005;
};

// MACs at or below 10^kCapacityFloorLog10 contribute no capacity credit.
inline constexpr double kCapacityFloorLog10 = 7.0;

// Enforces 0 <= a_min < a_max <= 1 and noise_amplitude < (a_max - a_min)/4.
void validate_params(const ProxyParams& params);

double proxy_accuracy(const lower::LayerGraph& graph, const ProxyParams& params);

// Name -> oracle table used by search configs.
class OracleRegistry {
 public:
  void add(const std::string& name, AccuracyFn fn);
  const AccuracyFn& get(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  std::map<std::string, AccuracyFn> table_;
};

// Registry preloaded with "synthetic-default" bound to the given params.
OracleRegistry default_registry(const ProxyParams& params = {});

// Fixed-score oracle; makes search rewards depend on hardware terms only.
AccuracyFn constant_oracle(double value);

}  // namespace codesign::proxy
