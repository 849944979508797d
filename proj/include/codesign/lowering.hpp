#pragma once
// Lowers a genotype to a concrete layer graph: per-layer tensor shapes, MAC
// and parameter counts, and predecessor wiring.  This is the workload handed
// to the cost model and the feature source for the accuracy proxy and the
// surrogate.
//
// Macro skeleton: stem 3x3 conv, then n_cells normal + r_cells reduction
// cells (reduction k goes after the ceil(k*n/r)-th normal cell, so the 4+2
// default yields N,N,R,N,N,R), then global average pool and a linear
// classifier.  Node channels double at each reduction cell.  Cell inputs are
// reconciled to the cell's node shape by 1x1 projection convs; inside a
// reduction cell only the ops reading the two cell inputs use stride 2, so
// every node tensor in a cell shares one shape.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codesign/design_space.hpp"
#include "codesign/errors.hpp"

namespace codesign::lower {

struct TensorShape {
  int h = 0;
  int w = 0;
  int c = 0;
  bool operator==(const TensorShape&) const = default;
};

enum class LayerKind : int {
  Conv = 0,
  DWConv = 1,
  MaxPool = 2,
  AvgPool = 3,
  GlobalAvgPool = 4,
  Linear = 5,
};
const char* layer_kind_name(LayerKind k);

enum class LayerRole : int {
  Stem = 0,
  Projection = 1,
  CellOp = 2,
  GlobalPool = 3,
  Classifier = 4,
};
const char* layer_role_name(LayerRole r);

struct LayerWorkload {
  std::string name;
  LayerKind kind = LayerKind::Conv;
  LayerRole role = LayerRole::CellOp;
  TensorShape in_shape;
  TensorShape out_shape;
  int kernel = 1;
  int stride = 1;
  std::uint64_t macs = 0;
  std::uint64_t params = 0;
  std::vector<int> preds;  // indices of layers whose outputs feed this one
  // Search-space op this layer was lowered from; set for CellOp layers only.
  std::optional<space::OpKind> origin;
  // 0-based cell index for Projection and CellOp layers, -1 outside cells.
  int cell = -1;
  bool operator==(const LayerWorkload&) const = default;
};

struct LayerGraph {
  std::vector<LayerWorkload> layers;  // topological order
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;
  int depth = 0;  // layer count along the longest path
  int reductions = 0;
  bool operator==(const LayerGraph&) const = default;
};

struct MacroConfig {
  TensorShape input{32, 32, 3};
  int stem_channels = 36;
  int num_classes = 10;
  // Empty means the default interleaving rule; otherwise the 0-based cell
  // positions (within the n+r cell sequence) that are reduction cells.
  std::vector<int> reduction_positions;
};

// Throws LoweringError on bad macro values, on input spatial dims not
// divisible by 2^r_cells, and on a feature map shrinking below a kernel.
LayerGraph derive_network(const space::Genotype& g, const MacroConfig& macro);

struct ArchSummary {
  std::uint64_t total_macs = 0;
  std::uint64_t total_params = 0;
  int depth = 0;
  std::array<int, space::kOpCount> op_hist{};  // CellOp layers by origin op
  // As op_hist, but counting each distinct per-cell op multiset once; cells
  // instantiated from one genotype collapse to a single contribution.
  std::array<int, space::kOpCount> op_hist_distinct{};
  int reductions = 0;
};

ArchSummary arch_summary(const LayerGraph& graph);

// One layer per line plus a totals footer; parse_graph re-derives macs,
// params, and depth from the recorded shapes and rejects any mismatch.
// Malformed text throws DecodeError.
std::string serialize_graph(const LayerGraph& graph);
LayerGraph parse_graph(const std::string& text);

}  // namespace codesign::lower
