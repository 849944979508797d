#pragma once
// Analytical systolic-array cost model: maps (LayerGraph, hardware config) to
// latency, energy, and per-level traffic under four dataflows.
//
// Model shape: three-level hierarchy (DRAM -> global buffer -> per-PE
// register file), 2-byte elements, per-layer exhaustive power-of-two tiling
// search minimizing energy.  Every MAC moves exactly four operand events
// (three reads, one write) split across RF and g_buf by the dataflow's
// stationarity contract; DRAM traffic is counted per tile visit with
// contiguous-span (burst) input footprints, so partially strided rows are
// fetched whole.  Pooling layers move DRAM traffic only.

#include <cstdint>
#include <string>
#include <vector>

#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"
#include "codesign/lowering.hpp"

namespace codesign::cost {

inline constexpr int kBytesPerElement = 2;

// Picojoules per event; the DRAM > g_buf > RF hierarchy is enforced.
struct EnergyTable {
  double mac_pj = 1.0;
  double rf_access_pj = 1.0;
  double gbuf_access_pj = 6.0;
  double dram_access_pj = 200.0;
};

struct HardwareModel {
  space::AcceleratorConfig accel;
  double clock_ghz = 1.0;
  double dram_bandwidth_gbps = 16.0;
  EnergyTable energy;
};

// Throws ConfigError on non-positive rates or an inverted energy hierarchy.
void validate_hardware(const HardwareModel& hw);

// Output-space tile sizes; t_ci tiles input channels.  Depthwise layers tie
// input channels to t_co and keep t_ci = 1.
struct Tiling {
  int t_oh = 1;
  int t_ow = 1;
  int t_ci = 1;
  int t_co = 1;
  bool operator==(const Tiling&) const = default;
};

struct Traffic {
  std::uint64_t dram = 0;
  std::uint64_t gbuf = 0;
  std::uint64_t rf = 0;
};

struct LayerCost {
  double latency_ms = 0;
  double energy_mj = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t dram_elements = 0;
  std::uint64_t gbuf_accesses = 0;
  std::uint64_t rf_accesses = 0;
  std::uint64_t macs = 0;
  Tiling tiling;
};

struct CostReport {
  double latency_ms = 0;
  double energy_mj = 0;
  std::uint64_t compute_cycles = 0;
  std::uint64_t dram_elements = 0;
  std::uint64_t gbuf_accesses = 0;
  std::uint64_t rf_accesses = 0;
  std::uint64_t macs = 0;
  std::vector<LayerCost> per_layer;
};

// PE-array cycles for one layer under one tiling.  Throws CapacityError if
// the tiling exceeds the buffers.
std::uint64_t mac_cycles(const lower::LayerWorkload& layer,
                         const space::AcceleratorConfig& accel,
                         const Tiling& tiling);

// Per-level access counts for one layer under one tiling; same errors.
Traffic access_counts(const lower::LayerWorkload& layer,
                      const space::AcceleratorConfig& accel,
                      const Tiling& tiling);

// Deterministic exhaustive search over power-of-two tiles (plus the full
// dim), minimum energy first, then lower latency, then fewer compute cycles,
// then lexicographic tile order.  The cycle tie-break keeps reported cycles
// monotone when the PE array grows.  Throws InfeasibleError when nothing fits.
Tiling choose_tiling(const lower::LayerWorkload& layer, const HardwareModel& hw);

// Full-network evaluation; InfeasibleError is rethrown with the layer index.
CostReport simulate(const lower::LayerGraph& graph, const HardwareModel& hw);

// Structured text emitted by the CLI; one total block plus one line per layer.
std::string report_to_text(const CostReport& report);

}  // namespace codesign::cost
