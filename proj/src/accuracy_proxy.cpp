#include "codesign/accuracy_proxy.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace codesign::proxy {

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

void validate_params(const ProxyParams& p) {
  if (!(p.a_min >= 0 && p.a_min < p.a_max && p.a_max <= 1))
    throw ConfigError("proxy requires 0 <= a_min < a_max <= 1");
  if (!(p.noise_amplitude >= 0 && p.noise_amplitude < (p.a_max - p.a_min) / 4))
    throw ConfigError("proxy noise_amplitude must lie in [0, (a_max - a_min)/4)");
  if (!(p.capacity_scale > 0))
    throw ConfigError("proxy capacity_scale must be positive");
  for (double q : p.op_quality)
    if (!(q >= 0 && q <= 1)) throw ConfigError("proxy op_quality entries must lie in [0, 1]");
}

double proxy_accuracy(const lower::LayerGraph& graph, const ProxyParams& p) {
  const lower::ArchSummary s = lower::arch_summary(graph);

  const double decades =
      std::max(0.0, std::log10(double(s.total_macs)) - kCapacityFloorLog10);
  const double capacity = 1.0 - std::exp(-decades / p.capacity_scale);

  // Quality is averaged over the distinct cell op multisets, so repeating a
  // cell leaves the term unchanged and more capacity can only help.
  std::uint64_t ops = 0;
  double weighted = 0;
  for (int k = 0; k < space::kOpCount; ++k) {
    ops += s.op_hist_distinct[k];
    weighted += double(s.op_hist_distinct[k]) * p.op_quality[k];
  }
  const double quality = ops ? weighted / double(ops) : 0.0;

  double acc = p.a_min + (p.a_max - p.a_min) * capacity * quality;
  if (p.noise_amplitude > 0) {
    // 53-bit mantissa draw in [0, 1), keyed on the canonical serialization.
    const std::uint64_t h = fnv1a(lower::serialize_graph(graph));
    const double u = double(h >> 11) * 0x1.0p-53;
    acc += p.noise_amplitude * (2.0 * u - 1.0);
  }
  return std::clamp(acc, p.a_min, p.a_max);
}

void OracleRegistry::add(const std::string& name, AccuracyFn fn) {
  if (!fn) throw ConfigError("oracle '" + name + "' is empty");
  if (!table_.emplace(name, std::move(fn)).second)
    throw ConfigError("oracle '" + name + "' is already registered");
}

const AccuracyFn& OracleRegistry::get(const std::string& name) const {
  const auto it = table_.find(name);
  if (it == table_.end()) throw ConfigError("unknown accuracy oracle '" + name + "'");
  return it->second;
}

std::vector<std::string> OracleRegistry::names() const {
  std::vector<std::string> out;
  out.reserve(table_.size());
  for (const auto& [name, fn] : table_) out.push_back(name);
  return out;
}

OracleRegistry default_registry(const ProxyParams& params) {
  validate_params(params);
  OracleRegistry reg;
  reg.add("synthetic-default", [params](const lower::LayerGraph& g) {
    return proxy_accuracy(g, params);
  });
  return reg;
}

AccuracyFn constant_oracle(double value) {
  if (!(value >= 0 && value <= 1))
    throw ConfigError("constant oracle value must lie in [0, 1]");
  return [value](const lower::LayerGraph&) { return value; };
}

}  // namespace codesign::proxy
