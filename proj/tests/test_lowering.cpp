#include "codesign/lowering.hpp"

#include <cstdint>
#include <numeric>

#include "doctest.h"

using namespace codesign;
using namespace codesign::lower;
using space::Genotype;
using space::NodeSpec;
using space::OpKind;

namespace {

// Genotype with every node reading (0, 1) and applying `op` twice.
Genotype same_op_genotype(OpKind op, int b = 7) {
  Genotype g;
  for (int pos = 2; pos < b; ++pos) {
    g.normal.nodes.push_back({0, 1, op, op});
    g.reduction.nodes.push_back({0, 1, op, op});
  }
  g.reduction.kind = space::CellKind::Reduction;
  return g;
}

Genotype sampled_genotype(std::uint64_t seed) {
  const auto schema = space::build_schema(space::ChoiceLists::defaults());
  return space::uniform_sample(schema, seed).dnn;
}

// Recomputes one layer's cost counts from its shapes alone.
std::uint64_t oracle_macs(const LayerWorkload& l) {
  const std::uint64_t hw = std::uint64_t(l.out_shape.h) * l.out_shape.w;
  switch (l.kind) {
    case LayerKind::Conv:
      return hw * l.out_shape.c * l.in_shape.c * l.kernel * l.kernel;
    case LayerKind::DWConv:
      return hw * l.out_shape.c * l.kernel * l.kernel;
    case LayerKind::Linear:
      return std::uint64_t(l.in_shape.c) * l.out_shape.c;
    default:
      return 0;
  }
}

std::uint64_t oracle_params(const LayerWorkload& l) {
  switch (l.kind) {
    case LayerKind::Conv:
      return std::uint64_t(l.out_shape.c) * l.in_shape.c * l.kernel * l.kernel;
    case LayerKind::DWConv:
      return std::uint64_t(l.in_shape.c) * l.kernel * l.kernel;
    case LayerKind::Linear:
      return std::uint64_t(l.in_shape.c) * l.out_shape.c;
    default:
      return 0;
  }
}

}  // namespace

TEST_SUITE_BEGIN("lowering");

TEST_CASE("stem conv example: 32x32x3 input, 16 channels") {
  MacroConfig macro;
  macro.stem_channels = 16;
  LayerGraph g = derive_network(same_op_genotype(OpKind::Conv3x3), macro);
  const LayerWorkload& stem = g.layers[0];
  CHECK(stem.role == LayerRole::Stem);
  CHECK(stem.macs == 442368);
  CHECK(stem.params == 432);
  CHECK(stem.out_shape == TensorShape{32, 32, 16});
}

TEST_CASE("two reductions leave an 8x8 final feature map") {
  LayerGraph g = derive_network(sampled_genotype(11), MacroConfig{});
  CHECK(g.reductions == 2);
  const LayerWorkload& gap = g.layers[g.layers.size() - 2];
  CHECK(gap.kind == LayerKind::GlobalAvgPool);
  CHECK(gap.in_shape.h == 8);
  CHECK(gap.in_shape.w == 8);
  const LayerWorkload& fc = g.layers.back();
  CHECK(fc.kind == LayerKind::Linear);
  CHECK(fc.out_shape.c == 10);
  CHECK(fc.macs == std::uint64_t(gap.in_shape.c) * 10);
}

TEST_CASE("per-layer counts match an independent recomputation") {
  for (std::uint64_t seed : {0ull, 1ull, 2ull, 3ull, 4ull}) {
    LayerGraph g = derive_network(sampled_genotype(seed), MacroConfig{});
    std::uint64_t macs = 0, params = 0;
    for (const LayerWorkload& l : g.layers) {
      REQUIRE(l.macs == oracle_macs(l));
      REQUIRE(l.params == oracle_params(l));
      macs += l.macs;
      params += l.params;
    }
    CHECK(g.total_macs == macs);
    CHECK(g.total_params == params);
  }
}

TEST_CASE("shape soundness: preds form add pairs that concatenate to the input") {
  // A layer's preds are either one producer or a concat of elementwise-add
  // pairs; each pair joins identical shapes and contributes its channel
  // block once.
  for (std::uint64_t seed : {5ull, 6ull, 7ull}) {
    LayerGraph g = derive_network(sampled_genotype(seed), MacroConfig{});
    for (const LayerWorkload& l : g.layers) {
      if (l.preds.empty()) continue;
      for (int p : l.preds) {
        REQUIRE(g.layers[p].out_shape.h == l.in_shape.h);
        REQUIRE(g.layers[p].out_shape.w == l.in_shape.w);
      }
      if (l.preds.size() == 1) {
        REQUIRE(g.layers[l.preds[0]].out_shape == l.in_shape);
        continue;
      }
      REQUIRE(l.preds.size() % 2 == 0);
      int csum = 0;
      for (std::size_t p = 0; p < l.preds.size(); p += 2) {
        const TensorShape& a = g.layers[l.preds[p]].out_shape;
        const TensorShape& b = g.layers[l.preds[p + 1]].out_shape;
        REQUIRE(a == b);
        csum += a.c;
      }
      REQUIRE(csum == l.in_shape.c);
    }
  }
}

TEST_CASE("pooling-only cells leave params to stem, projections, classifier") {
  LayerGraph g = derive_network(same_op_genotype(OpKind::MaxPool), MacroConfig{});
  std::uint64_t expect = 0;
  for (const LayerWorkload& l : g.layers) {
    if (l.role == LayerRole::CellOp) {
      CHECK(l.params == 0);
      CHECK(l.macs == 0);
    } else {
      expect += l.params;
    }
  }
  CHECK(g.total_params == expect);
}

TEST_CASE("cell-op histogram covers 2 ops per node per cell") {
  ArchSummary s = arch_summary(derive_network(sampled_genotype(21), MacroConfig{}));
  const int total = std::accumulate(s.op_hist.begin(), s.op_hist.end(), 0);
  CHECK(total == 60);  // 6 cells x 5 nodes x 2 ops
  ArchSummary conv = arch_summary(
      derive_network(same_op_genotype(OpKind::Conv3x3), MacroConfig{}));
  CHECK(conv.op_hist[0] == 60);
  CHECK(std::accumulate(conv.op_hist.begin(), conv.op_hist.end(), 0) == 60);
}

TEST_CASE("distinct histogram collapses repeated cells") {
  // Identical normal and reduction specs collapse to one cell multiset.
  ArchSummary same = arch_summary(
      derive_network(same_op_genotype(OpKind::DWConv5x5), MacroConfig{}));
  CHECK(std::accumulate(same.op_hist_distinct.begin(),
                        same.op_hist_distinct.end(), 0) == 10);
  CHECK(same.op_hist_distinct[int(OpKind::DWConv5x5)] == 10);

  // Different specs keep one copy of each.
  Genotype g = sampled_genotype(40);
  g.reduction = same_op_genotype(OpKind::MaxPool).reduction;
  ArchSummary two = arch_summary(derive_network(g, MacroConfig{}));
  const int d = std::accumulate(two.op_hist_distinct.begin(),
                                two.op_hist_distinct.end(), 0);
  CHECK(d == 20);
  CHECK(two.op_hist_distinct[int(OpKind::MaxPool)] >= 10);

  // More cells of the same kinds leave the distinct histogram alone.
  Genotype more = g;
  more.n_cells += 2;
  ArchSummary three = arch_summary(derive_network(more, MacroConfig{}));
  CHECK(three.op_hist_distinct == two.op_hist_distinct);
}

TEST_CASE("an extra normal cell never shrinks the totals") {
  for (std::uint64_t seed : {1ull, 9ull, 33ull}) {
    Genotype g = sampled_genotype(seed);
    LayerGraph a = derive_network(g, MacroConfig{});
    g.n_cells += 1;
    LayerGraph b = derive_network(g, MacroConfig{});
    CHECK(b.total_macs >= a.total_macs);
    CHECK(b.total_params >= a.total_params);
    CHECK(b.layers.size() > a.layers.size());
  }
}

TEST_CASE("derivation is deterministic") {
  Genotype g = sampled_genotype(3);
  CHECK(derive_network(g, MacroConfig{}) == derive_network(g, MacroConfig{}));
}

TEST_CASE("swapping two same-wired nodes preserves totals") {
  Genotype a = same_op_genotype(OpKind::Conv3x3);
  a.normal.nodes[0] = {0, 1, OpKind::Conv5x5, OpKind::MaxPool};
  a.normal.nodes[1] = {0, 1, OpKind::DWConv3x3, OpKind::AvgPool};
  Genotype b = a;
  std::swap(b.normal.nodes[0], b.normal.nodes[1]);
  LayerGraph ga = derive_network(a, MacroConfig{});
  LayerGraph gb = derive_network(b, MacroConfig{});
  CHECK(ga.total_macs == gb.total_macs);
  CHECK(ga.total_params == gb.total_params);
}

TEST_CASE("full convolutions out-cost depthwise at equal wiring") {
  LayerGraph conv = derive_network(same_op_genotype(OpKind::Conv5x5), MacroConfig{});
  LayerGraph dw = derive_network(same_op_genotype(OpKind::DWConv5x5), MacroConfig{});
  CHECK(conv.total_macs > dw.total_macs);
  CHECK(conv.total_params > dw.total_params);
}

TEST_CASE("frozen structure of the single-node-cell network") {
  LayerGraph g = derive_network(same_op_genotype(OpKind::Conv3x3, 3), MacroConfig{});
  CHECK(g.layers.size() == 20);
  CHECK(g.depth == 11);
}

TEST_CASE("explicit reduction positions reproduce the default rule") {
  Genotype g = sampled_genotype(13);
  MacroConfig macro;
  macro.reduction_positions = {2, 5};  // N,N,R,N,N,R
  CHECK(derive_network(g, macro) == derive_network(g, MacroConfig{}));
  macro.reduction_positions = {0, 1};
  LayerGraph early = derive_network(g, macro);
  const LayerWorkload& gap = early.layers[early.layers.size() - 2];
  CHECK(gap.in_shape.h == 8);  // reductions still halve twice
}

TEST_CASE("lowering errors") {
  Genotype g = same_op_genotype(OpKind::Conv3x3);
  MacroConfig macro;
  macro.input = {4, 4, 3};  // divisible by 4 but collapses below the kernel
  CHECK_THROWS_AS(derive_network(g, macro), LoweringError);

  macro = MacroConfig{};
  macro.input = {30, 30, 3};
  CHECK_THROWS_AS(derive_network(g, macro), LoweringError);

  macro = MacroConfig{};
  macro.num_classes = 1;
  CHECK_THROWS_AS(derive_network(g, macro), LoweringError);

  macro = MacroConfig{};
  macro.reduction_positions = {1};
  CHECK_THROWS_AS(derive_network(g, macro), LoweringError);
  macro.reduction_positions = {3, 9};
  CHECK_THROWS_AS(derive_network(g, macro), LoweringError);

  Genotype bad = g;
  bad.normal.nodes[2] = {2, 2, OpKind::Conv3x3, OpKind::Conv3x3};
  CHECK_THROWS_AS(derive_network(bad, MacroConfig{}), LoweringError);
}

TEST_CASE("serialize and parse round trip") {
  LayerGraph g = derive_network(sampled_genotype(17), MacroConfig{});
  const std::string text = serialize_graph(g);
  CHECK(parse_graph(text) == g);

  // Corrupting a recorded MAC count breaks the shape consistency check.
  std::string bad = text;
  const std::size_t at = bad.find(" 995328 ");  // stem macs at 36 channels
  REQUIRE(at != std::string::npos);
  bad.replace(at, 8, " 995327 ");
  CHECK_THROWS_AS(parse_graph(bad), DecodeError);

  CHECK_THROWS_AS(parse_graph("layers 3\n0 x stem conv"), DecodeError);
  CHECK_THROWS_AS(parse_graph("nope"), DecodeError);
}

TEST_SUITE_END();
