#include "codesign/cost_model.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace codesign::cost {
namespace {

using lower::LayerKind;
using lower::LayerWorkload;
using space::AcceleratorConfig;
using space::Dataflow;

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

bool is_pooling(LayerKind k) {
  return k == LayerKind::MaxPool || k == LayerKind::AvgPool ||
         k == LayerKind::GlobalAvgPool;
}

// Conv-like view.  Linear is a 1x1 conv on a 1x1 map; a depthwise layer's
// input channels ride along with the output-channel tile, so its per-channel
// accumulation work is k^2 and its standalone ci loop disappears.
struct Dims {
  std::uint64_t oh, ow, c, m, k, s;
  bool dw;
};

Dims dims_of(const LayerWorkload& l) {
  return Dims{std::uint64_t(l.out_shape.h), std::uint64_t(l.out_shape.w),
              std::uint64_t(l.in_shape.c),  std::uint64_t(l.out_shape.c),
              std::uint64_t(l.kernel),      std::uint64_t(l.stride),
              l.kind == LayerKind::DWConv};
}

// Contiguous input span streamed for a t-wide output tile; whole bursts, so
// strided layers fetch the rows they hop over.
std::uint64_t ext(std::uint64_t t, std::uint64_t s, std::uint64_t k) {
  return std::max(s * t, s * (t - 1) + k);
}

// Input rows fetched across all tiles covering one spatial dim.
std::uint64_t footprint(std::uint64_t total, std::uint64_t t, std::uint64_t s,
                        std::uint64_t k) {
  const std::uint64_t full = total / t;
  const std::uint64_t rem = total % t;
  return full * ext(t, s, k) + (rem ? ext(rem, s, k) : 0);
}

// Sum over tiles of ceil(tile_size * unit / divisor).
std::uint64_t tiled_ceil_sum(std::uint64_t total, std::uint64_t t,
                             std::uint64_t unit, std::uint64_t divisor) {
  const std::uint64_t full = total / t;
  const std::uint64_t rem = total % t;
  return full * ceil_div(t * unit, divisor) +
         (rem ? ceil_div(rem * unit, divisor) : 0);
}

std::uint64_t in_elems(const LayerWorkload& l) {
  return std::uint64_t(l.in_shape.h) * l.in_shape.w * l.in_shape.c;
}

std::uint64_t out_elems(const LayerWorkload& l) {
  return std::uint64_t(l.out_shape.h) * l.out_shape.w * l.out_shape.c;
}

// Appends the reason a tiling does not fit; empty result means it fits.
std::string fit_problem(const LayerWorkload& l, const AcceleratorConfig& accel,
                        const Tiling& t) {
  if (is_pooling(l.kind)) return {};  // pooling bypasses the buffers
  const Dims d = dims_of(l);
  if (t.t_oh < 1 || std::uint64_t(t.t_oh) > d.oh || t.t_ow < 1 ||
      std::uint64_t(t.t_ow) > d.ow || t.t_ci < 1 ||
      std::uint64_t(t.t_ci) > d.c || t.t_co < 1 || std::uint64_t(t.t_co) > d.m)
    return "tile sizes outside the layer dimensions";
  if (d.dw && t.t_ci != 1) return "depthwise tiling must keep t_ci = 1";

  const std::uint64_t in_tile = ext(t.t_oh, d.s, d.k) * ext(t.t_ow, d.s, d.k) *
                                (d.dw ? t.t_co : t.t_ci);
  const std::uint64_t w_tile =
      (d.dw ? std::uint64_t(t.t_co) : std::uint64_t(t.t_ci) * t.t_co) * d.k * d.k;
  const std::uint64_t out_tile = std::uint64_t(t.t_oh) * t.t_ow * t.t_co;
  const std::uint64_t gbuf_bytes = (in_tile + w_tile + out_tile) * kBytesPerElement;
  if (gbuf_bytes > std::uint64_t(accel.g_buf_kb) * 1024)
    return "tile working set exceeds the global buffer";

  const std::uint64_t rows = accel.pe.rows;
  const std::uint64_t cols = accel.pe.cols;
  std::uint64_t rf_bytes = 0;
  switch (accel.dataflow) {
    case Dataflow::WS:
      rf_bytes = ceil_div((d.dw ? 1 : t.t_ci) * d.k * d.k, rows) *
                 ceil_div(t.t_co, cols) * kBytesPerElement;
      break;
    case Dataflow::OS:
      rf_bytes = ceil_div(std::uint64_t(t.t_oh) * t.t_ow, rows) *
                 ceil_div(t.t_co, cols) * kBytesPerElement;
      break;
    case Dataflow::RS:
      rf_bytes = (d.k + ext(t.t_ow, d.s, d.k)) * kBytesPerElement;
      break;
    case Dataflow::NLR:
      return {};  // nothing held in the register files
  }
  if (rf_bytes > std::uint64_t(accel.r_buf_bytes))
    return "stationary slice exceeds the register file";
  return {};
}

void check_tiling(const LayerWorkload& l, const AcceleratorConfig& accel,
                  const Tiling& t) {
  const std::string why = fit_problem(l, accel, t);
  if (!why.empty()) throw CapacityError(why);
}

}  // namespace

void validate_hardware(const HardwareModel& hw) {
  if (hw.accel.pe.rows < 1 || hw.accel.pe.cols < 1)
    throw ConfigError("PE array dimensions must be positive");
  if (hw.accel.g_buf_kb < 1 || hw.accel.r_buf_bytes < 1)
    throw ConfigError("buffer sizes must be positive");
  if (!(hw.clock_ghz > 0) || !(hw.dram_bandwidth_gbps > 0))
    throw ConfigError("clock and bandwidth must be positive");
  const EnergyTable& e = hw.energy;
  if (!(e.mac_pj > 0) || !(e.rf_access_pj > 0))
    throw ConfigError("energy entries must be positive");
  if (!(e.dram_access_pj > e.gbuf_access_pj && e.gbuf_access_pj > e.rf_access_pj))
    throw ConfigError("energy table must satisfy dram > gbuf > rf");
}

std::uint64_t mac_cycles(const LayerWorkload& layer,
                         const AcceleratorConfig& accel, const Tiling& tiling) {
  check_tiling(layer, accel, tiling);
  const std::uint64_t rows = accel.pe.rows;
  const std::uint64_t cols = accel.pe.cols;
  if (is_pooling(layer.kind)) return ceil_div(out_elems(layer), rows * cols);

  const Dims d = dims_of(layer);
  const std::uint64_t f_col = tiled_ceil_sum(d.m, tiling.t_co, 1, cols);
  switch (accel.dataflow) {
    case Dataflow::WS:
    case Dataflow::NLR: {
      const std::uint64_t f_row =
          d.dw ? ceil_div(d.k * d.k, rows)
               : tiled_ceil_sum(d.c, tiling.t_ci, d.k * d.k, rows);
      return f_row * f_col * d.oh * d.ow;
    }
    case Dataflow::OS: {
      // Spatial tiles are 2D, so walk the full/remainder size combinations.
      const std::uint64_t sizes_h[2] = {std::uint64_t(tiling.t_oh), d.oh % tiling.t_oh};
      const std::uint64_t count_h[2] = {d.oh / tiling.t_oh, d.oh % tiling.t_oh ? 1u : 0u};
      const std::uint64_t sizes_w[2] = {std::uint64_t(tiling.t_ow), d.ow % tiling.t_ow};
      const std::uint64_t count_w[2] = {d.ow / tiling.t_ow, d.ow % tiling.t_ow ? 1u : 0u};
      std::uint64_t f_sp = 0;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if (count_h[a] && count_w[b])
            f_sp += count_h[a] * count_w[b] * ceil_div(sizes_h[a] * sizes_w[b], rows);
      return f_sp * f_col * (d.dw ? 1 : d.c) * d.k * d.k;
    }
    case Dataflow::RS:
      // One kernel row per PE row, one output row per PE column; each PE
      // walks its row serially across channels and taps.
      return ceil_div(d.k, rows) * tiled_ceil_sum(d.oh, tiling.t_oh, 1, cols) *
             d.ow * d.k * d.m * (d.dw ? 1 : d.c);
  }
  throw RuntimeFailure("unknown dataflow");
}

Traffic access_counts(const LayerWorkload& layer, const AcceleratorConfig& accel,
                      const Tiling& tiling) {
  check_tiling(layer, accel, tiling);
  Traffic tr;
  if (is_pooling(layer.kind)) {
    tr.dram = in_elems(layer) + out_elems(layer);
    return tr;
  }

  const Dims d = dims_of(layer);
  const std::uint64_t weights = (d.dw ? d.m : d.c * d.m) * d.k * d.k;
  const std::uint64_t input_pass = footprint(d.oh, tiling.t_oh, d.s, d.k) *
                                   footprint(d.ow, tiling.t_ow, d.s, d.k) *
                                   (d.dw ? d.m : d.c);
  const std::uint64_t outputs = d.oh * d.ow * d.m;
  const std::uint64_t n_sp =
      ceil_div(d.oh, tiling.t_oh) * ceil_div(d.ow, tiling.t_ow);
  const std::uint64_t n_ci = d.dw ? 1 : ceil_div(d.c, tiling.t_ci);
  const std::uint64_t n_co = ceil_div(d.m, tiling.t_co);
  const std::uint64_t input_total = input_pass * (d.dw ? 1 : n_co);

  const std::uint64_t macs = layer.macs;
  switch (accel.dataflow) {
    case Dataflow::WS:
      // Weights resident across spatial tiles; partial sums spill to DRAM
      // once per extra input-channel pass.
      tr.dram = weights + input_total + outputs * (2 * n_ci - 1);
      tr.rf = 3 * macs;
      tr.gbuf = macs;
      break;
    case Dataflow::OS:
      // Partial sums pinned in the PEs until complete; weights restream per
      // spatial tile.
      tr.dram = weights * n_sp + input_total + outputs;
      tr.rf = 2 * macs;
      tr.gbuf = 2 * macs;
      break;
    case Dataflow::RS:
      // Rows resident per PE, neighbor forwarding charged at RF cost.
      tr.dram = weights + input_total + outputs;
      tr.rf = 4 * macs;
      tr.gbuf = 0;
      break;
    case Dataflow::NLR:
      tr.dram = weights * n_sp + input_total + outputs * (2 * n_ci - 1);
      tr.rf = 0;
      tr.gbuf = 4 * macs;
      break;
  }
  return tr;
}

namespace {

LayerCost evaluate_tiling(const LayerWorkload& l, const HardwareModel& hw,
                          const Tiling& t) {
  LayerCost c;
  c.tiling = t;
  c.macs = l.macs;
  c.compute_cycles = mac_cycles(l, hw.accel, t);
  const Traffic tr = access_counts(l, hw.accel, t);
  c.dram_elements = tr.dram;
  c.gbuf_accesses = tr.gbuf;
  c.rf_accesses = tr.rf;
  const EnergyTable& e = hw.energy;
  const double pj = double(c.macs) * e.mac_pj + double(c.rf_accesses) * e.rf_access_pj +
                    double(c.gbuf_accesses) * e.gbuf_access_pj +
                    double(c.dram_elements) * e.dram_access_pj;
  c.energy_mj = pj * 1e-9;
  const double compute_ns = double(c.compute_cycles) / hw.clock_ghz;
  const double dram_ns =
      double(c.dram_elements) * kBytesPerElement / hw.dram_bandwidth_gbps;
  c.latency_ms = std::max(compute_ns, dram_ns) * 1e-6;
  return c;
}

// Power-of-two sizes below the dim, then the dim itself, ascending.
std::vector<int> tile_candidates(std::uint64_t dim) {
  std::vector<int> out;
  for (std::uint64_t p = 1; p < dim; p *= 2) out.push_back(static_cast<int>(p));
  out.push_back(static_cast<int>(dim));
  return out;
}

}  // namespace

Tiling choose_tiling(const LayerWorkload& layer, const HardwareModel& hw) {
  if (is_pooling(layer.kind))
    return Tiling{layer.out_shape.h, layer.out_shape.w, 1, layer.out_shape.c};

  const Dims d = dims_of(layer);
  const std::vector<int> oh_c = tile_candidates(d.oh);
  const std::vector<int> ow_c = tile_candidates(d.ow);
  const std::vector<int> ci_c = d.dw ? std::vector<int>{1} : tile_candidates(d.c);
  const std::vector<int> co_c = tile_candidates(d.m);

  bool found = false;
  Tiling best;
  double best_energy = 0, best_latency = 0;
  std::uint64_t best_cycles = 0;
  for (int oh : oh_c)
    for (int ow : ow_c)
      for (int ci : ci_c)
        for (int co : co_c) {
          const Tiling t{oh, ow, ci, co};
          if (!fit_problem(layer, hw.accel, t).empty()) continue;
          const LayerCost c = evaluate_tiling(layer, hw, t);
          const bool better =
              !found || c.energy_mj < best_energy ||
              (c.energy_mj == best_energy &&
               (c.latency_ms < best_latency ||
                (c.latency_ms == best_latency && c.compute_cycles < best_cycles)));
          if (better) {
            found = true;
            best = t;
            best_energy = c.energy_mj;
            best_latency = c.latency_ms;
            best_cycles = c.compute_cycles;
          }
        }
  if (!found)
    throw InfeasibleError("no feasible tiling for layer '" + layer.name +
                          "' under dataflow " +
                          space::dataflow_name(hw.accel.dataflow));
  return best;
}

CostReport simulate(const lower::LayerGraph& graph, const HardwareModel& hw) {
  validate_hardware(hw);
  CostReport r;
  r.per_layer.reserve(graph.layers.size());
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerWorkload& l = graph.layers[i];
    Tiling t;
    try {
      t = choose_tiling(l, hw);
    } catch (const InfeasibleError& e) {
      throw InfeasibleError("layer " + std::to_string(i) + ": " + e.what());
    }
    const LayerCost c = evaluate_tiling(l, hw, t);
    r.latency_ms += c.latency_ms;
    r.energy_mj += c.energy_mj;
    r.compute_cycles += c.compute_cycles;
    r.dram_elements += c.dram_elements;
    r.gbuf_accesses += c.gbuf_accesses;
    r.rf_accesses += c.rf_accesses;
    r.macs += c.macs;
    r.per_layer.push_back(c);
  }
  return r;
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string report_to_text(const CostReport& r) {
  std::ostringstream os;
  os << "latency_ms " << fmt(r.latency_ms) << "\n"
     << "energy_mj " << fmt(r.energy_mj) << "\n"
     << "cycles " << r.compute_cycles << "\n"
     << "dram " << r.dram_elements << "\n"
     << "gbuf " << r.gbuf_accesses << "\n"
     << "rf " << r.rf_accesses << "\n"
     << "macs " << r.macs << "\n";
  for (std::size_t i = 0; i < r.per_layer.size(); ++i) {
    const LayerCost& c = r.per_layer[i];
    os << "layer " << i << " latency_ms " << fmt(c.latency_ms) << " energy_mj "
       << fmt(c.energy_mj) << " cycles " << c.compute_cycles << " dram "
       << c.dram_elements << " gbuf " << c.gbuf_accesses << " rf "
       << c.rf_accesses << " macs " << c.macs << " tiling " << c.tiling.t_oh
       << 'x' << c.tiling.t_ow << 'x' << c.tiling.t_ci << 'x' << c.tiling.t_co
       << "\n";
  }
  return os.str();
}

}  // namespace codesign::cost
