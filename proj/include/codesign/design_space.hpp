#pragma once
// Combined DNN + accelerator search space: canonical integer-sequence
// encoding, validity rules, uniform sampling, exact cardinality.
//
// A design point is a cell-based DNN genotype (two cells; nodes 0 and 1 of a
// cell are its external inputs, nodes 2..B-1 each combine two earlier nodes)
// plus a systolic-array configuration.  The decision sequence lays out, per
// cell and node position, (in1, in2, op1, op2), followed by the four
// accelerator decisions; with B = 7 that is 2*5*4 + 4 = 44 integers.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "codesign/errors.hpp"

namespace codesign::space {

// Index order is part of the encoding contract.
enum class OpKind : int {
  Conv3x3 = 0,
  Conv5x5 = 1,
  DWConv3x3 = 2,
  DWConv5x5 = 3,
  MaxPool = 4,
  AvgPool = 5,
};
inline constexpr int kOpCount = 6;
const char* op_name(OpKind op);

enum class Dataflow : int { WS = 0, OS = 1, RS = 2, NLR = 3 };
const char* dataflow_name(Dataflow df);

struct NodeSpec {
  int in1 = 0;
  int in2 = 1;
  OpKind op1 = OpKind::Conv3x3;
  OpKind op2 = OpKind::Conv3x3;
  bool operator==(const NodeSpec&) const = default;
};

enum class CellKind { Normal, Reduction };

struct CellSpec {
  CellKind kind = CellKind::Normal;
  std::vector<NodeSpec> nodes;  // positions 2 .. B-1
  bool operator==(const CellSpec&) const = default;
};

struct Genotype {
  CellSpec normal;
  CellSpec reduction;
  int n_cells = 4;
  int r_cells = 2;
  bool operator==(const Genotype&) const = default;
};

struct PeDims {
  int rows = 0;
  int cols = 0;
  bool operator==(const PeDims&) const = default;
};

struct AcceleratorConfig {
  PeDims pe{16, 32};
  int g_buf_kb = 512;
  int r_buf_bytes = 128;
  Dataflow dataflow = Dataflow::WS;
  bool operator==(const AcceleratorConfig&) const = default;
};

struct DesignPoint {
  Genotype dnn;
  AcceleratorConfig accel;
  bool operator==(const DesignPoint&) const = default;
};

struct ChoiceLists {
  std::vector<PeDims> pe_array;
  std::vector<int> g_buf_kb;
  std::vector<int> r_buf_bytes;
  std::vector<Dataflow> dataflows;
  static ChoiceLists defaults();
};

enum class StepKind {
  NodeIn1,
  NodeIn2,
  NodeOp1,
  NodeOp2,
  AccelPe,
  AccelGbuf,
  AccelRbuf,
  AccelDataflow,
};

struct DecisionStep {
  std::string name;
  StepKind kind;
  int vocab;
  int cell;  // 0 = normal, 1 = reduction, -1 = accelerator step
  int node;  // node position i, or -1 for accelerator steps
};

struct DecisionSchema {
  std::vector<DecisionStep> steps;
  int s_dnn = 0;    // count of DNN steps
  int l_accel = 0;  // count of accelerator steps
  int b = 7;
  int n_cells = 4;
  int r_cells = 2;
  ChoiceLists lists;

  std::string describe() const;
  std::uint64_t hash() const;
};

// Throws SchemaError (empty list, bad B) or RangeError (value outside the
// supported hardware ranges).
DecisionSchema build_schema(const ChoiceLists& lists, int b = 7,
                            int n_cells = 4, int r_cells = 2);

// Throws EncodeError naming the first offending step.
std::vector<int> encode(const DesignPoint& point, const DecisionSchema& schema);

struct Violation {
  int step;          // decision index, or -1 for sequence-level problems
  std::string rule;
};

struct ValidationResult {
  std::optional<DesignPoint> point;
  std::vector<Violation> violations;
  bool ok() const { return point.has_value(); }
};

// Wrong sequence length throws LengthError; per-step problems come back as
// the complete violation list.
ValidationResult validate(const std::vector<int>& seq, const DecisionSchema& schema);

// validate() that throws DecodeError on any violation.
DesignPoint decode(const std::vector<int>& seq, const DecisionSchema& schema);

DesignPoint uniform_sample(const DecisionSchema& schema, std::uint64_t seed);

struct SpaceCardinality {
  std::string genotypes;      // exact count of canonical genotype pairs
  std::string total;          // genotypes x accelerator configurations
  std::string paper_formula;  // (6 * (B-2)!)^4, reported for reference only
};

SpaceCardinality count_space(const DecisionSchema& schema);

// Text form: comma-separated decimal integers, one point per line.
std::string to_line(const std::vector<int>& seq);
std::vector<int> parse_line(const std::string& line);

}  // namespace codesign::space
