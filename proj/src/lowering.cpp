#include "codesign/lowering.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace codesign::lower {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv: return "conv";
    case LayerKind::DWConv: return "dwconv";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::AvgPool: return "avgpool";
    case LayerKind::GlobalAvgPool: return "gap";
    case LayerKind::Linear: return "linear";
  }
  return "?";
}

const char* layer_role_name(LayerRole r) {
  switch (r) {
    case LayerRole::Stem: return "stem";
    case LayerRole::Projection: return "projection";
    case LayerRole::CellOp: return "cellop";
    case LayerRole::GlobalPool: return "globalpool";
    case LayerRole::Classifier: return "classifier";
  }
  return "?";
}

namespace {

using space::CellKind;
using space::CellSpec;
using space::Genotype;
using space::OpKind;

struct OpLowering {
  LayerKind kind;
  int kernel;
};

OpLowering lower_op(OpKind op) {
  switch (op) {
    case OpKind::Conv3x3: return {LayerKind::Conv, 3};
    case OpKind::Conv5x5: return {LayerKind::Conv, 5};
    case OpKind::DWConv3x3: return {LayerKind::DWConv, 3};
    case OpKind::DWConv5x5: return {LayerKind::DWConv, 5};
    case OpKind::MaxPool: return {LayerKind::MaxPool, 3};
    case OpKind::AvgPool: return {LayerKind::AvgPool, 3};
  }
  throw LoweringError("unknown op kind");
}

std::uint64_t layer_macs(LayerKind kind, const TensorShape& in,
                         const TensorShape& out, int kernel) {
  const std::uint64_t hw = std::uint64_t(out.h) * out.w;
  switch (kind) {
    case LayerKind::Conv:
      return hw * out.c * in.c * kernel * kernel;
    case LayerKind::DWConv:
      return hw * out.c * kernel * kernel;
    case LayerKind::Linear:
      return std::uint64_t(in.c) * out.c;
    default:
      return 0;  // pooling
  }
}

std::uint64_t layer_params(LayerKind kind, const TensorShape& in,
                           const TensorShape& out, int kernel) {
  switch (kind) {
    case LayerKind::Conv:
      return std::uint64_t(out.c) * in.c * kernel * kernel;
    case LayerKind::DWConv:
      return std::uint64_t(in.c) * kernel * kernel;
    case LayerKind::Linear:
      return std::uint64_t(in.c) * out.c;
    default:
      return 0;
  }
}

// "Same" padding: spatial output is ceil(in / stride).
int conv_out_dim(int dim, int stride) { return (dim + stride - 1) / stride; }

// A value flowing between layers: its shape plus the layer indices whose
// concatenated outputs realize it (several for a cell's concat output).
struct Tensor {
  TensorShape shape;
  std::vector<int> producers;
};

class GraphBuilder {
 public:
  int emit(LayerWorkload layer) {
    layer.macs = layer_macs(layer.kind, layer.in_shape, layer.out_shape, layer.kernel);
    layer.params = layer_params(layer.kind, layer.in_shape, layer.out_shape, layer.kernel);
    graph_.layers.push_back(std::move(layer));
    return static_cast<int>(graph_.layers.size()) - 1;
  }

  // Emits one op layer feeding node position `pos` of cell `cell`.
  int emit_op(int cell, int pos, int slot, OpKind op, const Tensor& src,
              int stride, const TensorShape& want) {
    const OpLowering lo = lower_op(op);
    if (src.shape.h < lo.kernel || src.shape.w < lo.kernel)
      throw LoweringError("feature map " + std::to_string(src.shape.h) + "x" +
                          std::to_string(src.shape.w) + " smaller than kernel " +
                          std::to_string(lo.kernel) + " in cell " +
                          std::to_string(cell));
    TensorShape out{conv_out_dim(src.shape.h, stride),
                    conv_out_dim(src.shape.w, stride), want.c};
    if (!(out == want))
      throw LoweringError("internal: op output shape mismatch in cell " +
                          std::to_string(cell));
    LayerWorkload l;
    l.name = "c" + std::to_string(cell) + ".n" + std::to_string(pos) + ".op" +
             std::to_string(slot);
    l.kind = lo.kind;
    l.role = LayerRole::CellOp;
    l.in_shape = src.shape;
    l.out_shape = out;
    l.kernel = lo.kernel;
    l.stride = stride;
    l.preds = src.producers;
    l.origin = op;
    l.cell = cell;
    return emit(std::move(l));
  }

  // Reconciles a cell input to the required shape with a 1x1 projection.
  Tensor adapt(int cell, int slot, const Tensor& src, const TensorShape& want) {
    if (src.shape == want) return src;
    const int stride = src.shape.h / want.h;
    if (stride < 1 || stride > 2 || src.shape.h != stride * want.h ||
        src.shape.w != stride * want.w)
      throw LoweringError("internal: irreconcilable cell input shape in cell " +
                          std::to_string(cell));
    LayerWorkload l;
    l.name = "c" + std::to_string(cell) + ".in" + std::to_string(slot) + ".proj";
    l.kind = LayerKind::Conv;
    l.role = LayerRole::Projection;
    l.in_shape = src.shape;
    l.out_shape = want;
    l.kernel = 1;
    l.stride = stride;
    l.preds = src.producers;
    l.cell = cell;
    return Tensor{want, {emit(std::move(l))}};
  }

  LayerGraph finish(int reductions) {
    graph_.reductions = reductions;
    graph_.total_macs = 0;
    graph_.total_params = 0;
    std::vector<int> dist(graph_.layers.size(), 1);
    int depth = 0;
    for (std::size_t i = 0; i < graph_.layers.size(); ++i) {
      const LayerWorkload& l = graph_.layers[i];
      graph_.total_macs += l.macs;
      graph_.total_params += l.params;
      for (int p : l.preds) dist[i] = std::max(dist[i], dist[p] + 1);
      depth = std::max(depth, dist[i]);
    }
    graph_.depth = depth;
    return std::move(graph_);
  }

 private:
  LayerGraph graph_;
};

std::vector<CellKind> cell_sequence(int n, int r,
                                    const std::vector<int>& positions) {
  std::vector<CellKind> seq;
  if (!positions.empty()) {
    if (static_cast<int>(positions.size()) != r)
      throw LoweringError("reduction_positions must list exactly r_cells entries");
    seq.assign(n + r, CellKind::Normal);
    int last = -1;
    for (int p : positions) {
      if (p <= last || p >= n + r)
        throw LoweringError("reduction_positions must be increasing and in range");
      seq[p] = CellKind::Reduction;
      last = p;
    }
    return seq;
  }
  // Reduction k goes after the ceil(k*n/r)-th normal cell.
  int ri = 1;
  for (int norm = 1; norm <= n; ++norm) {
    seq.push_back(CellKind::Normal);
    while (ri <= r && (std::int64_t(ri) * n + r - 1) / r == norm) {
      seq.push_back(CellKind::Reduction);
      ++ri;
    }
  }
  return seq;
}

void check_genotype(const Genotype& g) {
  if (g.n_cells < 1 || g.r_cells < 0)
    throw LoweringError("cell counts out of range");
  if (g.normal.nodes.empty() || g.normal.nodes.size() != g.reduction.nodes.size())
    throw LoweringError("cells must have the same node count, at least one node");
  for (const CellSpec* cs : {&g.normal, &g.reduction})
    for (std::size_t k = 0; k < cs->nodes.size(); ++k) {
      const space::NodeSpec& nd = cs->nodes[k];
      if (nd.in1 < 0 || nd.in1 >= nd.in2 || nd.in2 >= static_cast<int>(k) + 2)
        throw LoweringError("node inputs not canonical at position " +
                            std::to_string(k + 2));
    }
}

}  // namespace

LayerGraph derive_network(const Genotype& g, const MacroConfig& macro) {
  check_genotype(g);
  if (macro.input.h < 1 || macro.input.w < 1 || macro.input.c < 1)
    throw LoweringError("input shape fields must be positive");
  if (macro.stem_channels < 1) throw LoweringError("stem_channels must be positive");
  if (macro.num_classes < 2) throw LoweringError("num_classes must be at least 2");
  const int div = 1 << g.r_cells;
  if (macro.input.h % div != 0 || macro.input.w % div != 0)
    throw LoweringError("input spatial dims must be divisible by 2^r_cells");

  const std::vector<CellKind> seq =
      cell_sequence(g.n_cells, g.r_cells, macro.reduction_positions);
  const int b = static_cast<int>(g.normal.nodes.size()) + 2;

  GraphBuilder gb;
  if (macro.input.h < 3 || macro.input.w < 3)
    throw LoweringError("input smaller than the stem kernel");
  LayerWorkload stem;
  stem.name = "stem";
  stem.kind = LayerKind::Conv;
  stem.role = LayerRole::Stem;
  stem.in_shape = macro.input;
  stem.out_shape = {macro.input.h, macro.input.w, macro.stem_channels};
  stem.kernel = 3;
  stem.stride = 1;
  const int stem_idx = gb.emit(std::move(stem));
  Tensor stem_t{{macro.input.h, macro.input.w, macro.stem_channels}, {stem_idx}};

  Tensor prev_prev = stem_t;
  Tensor prev = stem_t;
  int c = macro.stem_channels;
  int cur_h = macro.input.h;
  int cur_w = macro.input.w;

  for (std::size_t ci = 0; ci < seq.size(); ++ci) {
    const bool reduce = seq[ci] == CellKind::Reduction;
    const CellSpec& cs = reduce ? g.reduction : g.normal;
    if (reduce) c *= 2;
    const int node_h = reduce ? cur_h / 2 : cur_h;
    const int node_w = reduce ? cur_w / 2 : cur_w;
    const TensorShape in_shape{cur_h, cur_w, c};
    const TensorShape node_shape{node_h, node_w, c};

    std::vector<Tensor> nodes(b);
    nodes[0] = gb.adapt(static_cast<int>(ci), 0, prev_prev, in_shape);
    nodes[1] = gb.adapt(static_cast<int>(ci), 1, prev, in_shape);
    std::vector<bool> consumed(b, false);

    for (std::size_t k = 0; k < cs.nodes.size(); ++k) {
      const space::NodeSpec& nd = cs.nodes[k];
      const int pos = static_cast<int>(k) + 2;
      // Only ops reading the cell inputs stride down in a reduction cell.
      const auto op_stride = [&](int input) {
        return (reduce && input < 2) ? 2 : 1;
      };
      const int l1 = gb.emit_op(static_cast<int>(ci), pos, 1, nd.op1,
                                nodes[nd.in1], op_stride(nd.in1), node_shape);
      const int l2 = gb.emit_op(static_cast<int>(ci), pos, 2, nd.op2,
                                nodes[nd.in2], op_stride(nd.in2), node_shape);
      // The node value is the elementwise sum of the two op outputs.
      nodes[pos] = Tensor{node_shape, {l1, l2}};
      consumed[nd.in1] = true;
      consumed[nd.in2] = true;
    }

    // Cell output: channel concat of the loose-end intermediate nodes.
    Tensor out;
    out.shape = {node_h, node_w, 0};
    for (int pos = 2; pos < b; ++pos)
      if (!consumed[pos]) {
        out.shape.c += c;
        out.producers.insert(out.producers.end(), nodes[pos].producers.begin(),
                             nodes[pos].producers.end());
      }
    prev_prev = prev;
    prev = out;
    cur_h = node_h;
    cur_w = node_w;
  }

  LayerWorkload gap;
  gap.name = "gap";
  gap.kind = LayerKind::GlobalAvgPool;
  gap.role = LayerRole::GlobalPool;
  gap.in_shape = prev.shape;
  gap.out_shape = {1, 1, prev.shape.c};
  gap.kernel = prev.shape.h;
  gap.stride = 1;
  gap.preds = prev.producers;
  const int gap_idx = gb.emit(std::move(gap));

  LayerWorkload fc;
  fc.name = "fc";
  fc.kind = LayerKind::Linear;
  fc.role = LayerRole::Classifier;
  fc.in_shape = {1, 1, prev.shape.c};
  fc.out_shape = {1, 1, macro.num_classes};
  fc.kernel = 1;
  fc.stride = 1;
  fc.preds = {gap_idx};
  gb.emit(std::move(fc));

  return gb.finish(g.r_cells);
}

ArchSummary arch_summary(const LayerGraph& graph) {
  ArchSummary s;
  s.total_macs = graph.total_macs;
  s.total_params = graph.total_params;
  s.depth = graph.depth;
  s.reductions = graph.reductions;
  std::map<int, std::array<int, space::kOpCount>> per_cell;
  for (const LayerWorkload& l : graph.layers)
    if (l.role == LayerRole::CellOp && l.origin) {
      ++s.op_hist[static_cast<int>(*l.origin)];
      if (l.cell >= 0) ++per_cell[l.cell][static_cast<int>(*l.origin)];
    }
  if (per_cell.empty()) {
    s.op_hist_distinct = s.op_hist;
  } else {
    std::set<std::array<int, space::kOpCount>> distinct;
    for (const auto& [cell, hist] : per_cell) distinct.insert(hist);
    for (const auto& hist : distinct)
      for (int k = 0; k < space::kOpCount; ++k) s.op_hist_distinct[k] += hist[k];
  }
  return s;
}

namespace {

LayerKind parse_kind(const std::string& s) {
  for (int k = 0; k <= static_cast<int>(LayerKind::Linear); ++k)
    if (s == layer_kind_name(static_cast<LayerKind>(k)))
      return static_cast<LayerKind>(k);
  throw DecodeError("unknown layer kind '" + s + "'");
}

LayerRole parse_role(const std::string& s) {
  for (int r = 0; r <= static_cast<int>(LayerRole::Classifier); ++r)
    if (s == layer_role_name(static_cast<LayerRole>(r)))
      return static_cast<LayerRole>(r);
  throw DecodeError("unknown layer role '" + s + "'");
}

}  // namespace

std::string serialize_graph(const LayerGraph& graph) {
  std::ostringstream os;
  os << "layers " << graph.layers.size() << "\n";
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    const LayerWorkload& l = graph.layers[i];
    os << i << ' ' << l.name << ' ' << layer_role_name(l.role) << ' '
       << layer_kind_name(l.kind) << ' ' << l.in_shape.h << ' ' << l.in_shape.w
       << ' ' << l.in_shape.c << ' ' << l.out_shape.h << ' ' << l.out_shape.w
       << ' ' << l.out_shape.c << ' ' << l.kernel << ' ' << l.stride << ' '
       << l.macs << ' ' << l.params << ' '
       << (l.origin ? std::to_string(static_cast<int>(*l.origin)) : std::string("-"))
       << ' ' << l.cell << ' ';
    if (l.preds.empty()) {
      os << '-';
    } else {
      for (std::size_t p = 0; p < l.preds.size(); ++p)
        os << (p ? "," : "") << l.preds[p];
    }
    os << "\n";
  }
  os << "totals " << graph.total_macs << ' ' << graph.total_params << ' '
     << graph.depth << ' ' << graph.reductions << "\n";
  return os.str();
}

LayerGraph parse_graph(const std::string& text) {
  std::istringstream is(text);
  std::string tag;
  std::size_t n = 0;
  if (!(is >> tag >> n) || tag != "layers")
    throw DecodeError("expected 'layers <count>' header");

  LayerGraph graph;
  graph.layers.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LayerWorkload l;
    std::size_t idx;
    std::string role, kind, origin, preds;
    if (!(is >> idx >> l.name >> role >> kind >> l.in_shape.h >> l.in_shape.w >>
          l.in_shape.c >> l.out_shape.h >> l.out_shape.w >> l.out_shape.c >>
          l.kernel >> l.stride >> l.macs >> l.params >> origin >> l.cell >> preds))
      throw DecodeError("truncated layer record " + std::to_string(i));
    if (idx != i) throw DecodeError("layer indices must be sequential");
    l.role = parse_role(role);
    l.kind = parse_kind(kind);
    if (origin != "-") {
      const int op = std::stoi(origin);
      if (op < 0 || op >= space::kOpCount)
        throw DecodeError("origin op out of range in layer " + std::to_string(i));
      l.origin = static_cast<space::OpKind>(op);
    }
    if (preds != "-") {
      std::istringstream ps(preds);
      std::string tok;
      while (std::getline(ps, tok, ',')) {
        std::size_t used = 0;
        const int p = std::stoi(tok, &used);
        if (used != tok.size() || p < 0 || p >= static_cast<int>(i))
          throw DecodeError("bad predecessor '" + tok + "' in layer " +
                            std::to_string(i));
        l.preds.push_back(p);
      }
    }
    if (l.in_shape.h < 1 || l.in_shape.w < 1 || l.in_shape.c < 1 ||
        l.out_shape.h < 1 || l.out_shape.w < 1 || l.out_shape.c < 1 ||
        l.kernel < 1 || l.stride < 1 || l.stride > 2 || l.cell < -1)
      throw DecodeError("layer " + std::to_string(i) + " has out-of-range fields");
    if (l.kind == LayerKind::DWConv && l.in_shape.c != l.out_shape.c)
      throw DecodeError("depthwise layer must preserve channels");
    // The recorded counts must agree with the shape-derived formulas.
    if (l.macs != layer_macs(l.kind, l.in_shape, l.out_shape, l.kernel) ||
        l.params != layer_params(l.kind, l.in_shape, l.out_shape, l.kernel))
      throw DecodeError("mac/param counts disagree with shapes in layer " +
                        std::to_string(i));
    graph.layers.push_back(std::move(l));
  }

  std::uint64_t macs = 0, params = 0;
  if (!(is >> tag >> macs >> params >> graph.depth >> graph.reductions) ||
      tag != "totals")
    throw DecodeError("expected totals footer");
  graph.total_macs = macs;
  graph.total_params = params;

  std::uint64_t sum_macs = 0, sum_params = 0;
  std::vector<int> dist(graph.layers.size(), 1);
  int depth = 0;
  for (std::size_t i = 0; i < graph.layers.size(); ++i) {
    sum_macs += graph.layers[i].macs;
    sum_params += graph.layers[i].params;
    for (int p : graph.layers[i].preds) dist[i] = std::max(dist[i], dist[p] + 1);
    depth = std::max(depth, dist[i]);
  }
  if (sum_macs != macs || sum_params != params || depth != graph.depth ||
      graph.reductions < 0)
    throw DecodeError("totals footer disagrees with the layer records");
  return graph;
}

}  // namespace codesign::lower
