#include "codesign/design_space.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <sstream>

#include "codesign/rng.hpp"

namespace codesign::space {

namespace {

using boost::multiprecision::cpp_int;

constexpr int kPeRowsMin = 8, kPeRowsMax = 16;
constexpr int kPeColsMin = 8, kPeColsMax = 32;
constexpr int kGbufMin = 108, kGbufMax = 1024;
constexpr int kRbufMin = 64, kRbufMax = 1024;

const char* cell_prefix(int cell) { return cell == 0 ? "normal" : "reduce"; }

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Conv3x3: return "conv3x3";
    case OpKind::Conv5x5: return "conv5x5";
    case OpKind::DWConv3x3: return "dwconv3x3";
    case OpKind::DWConv5x5: return "dwconv5x5";
    case OpKind::MaxPool: return "maxpool3x3";
    case OpKind::AvgPool: return "avgpool3x3";
  }
  return "?";
}

const char* dataflow_name(Dataflow df) {
  switch (df) {
    case Dataflow::WS: return "WS";
    case Dataflow::OS: return "OS";
    case Dataflow::RS: return "RS";
    case Dataflow::NLR: return "NLR";
  }
  return "?";
}

ChoiceLists ChoiceLists::defaults() {
  ChoiceLists lists;
  lists.pe_array = {{8, 8}, {8, 16}, {14, 16}, {16, 20}, {16, 24}, {16, 32}};
  lists.g_buf_kb = {108, 196, 256, 512, 1024};
  lists.r_buf_bytes = {64, 128, 256, 512, 1024};
  lists.dataflows = {Dataflow::WS, Dataflow::OS, Dataflow::RS, Dataflow::NLR};
  return lists;
}

DecisionSchema build_schema(const ChoiceLists& lists, int b, int n_cells, int r_cells) {
  if (b < 3) throw SchemaError("build_schema: B must be >= 3, got " + std::to_string(b));
  if (n_cells < 1 || r_cells < 1)
    throw SchemaError("build_schema: cell counts must be >= 1");
  if (lists.pe_array.empty()) throw SchemaError("build_schema: empty pe_array choice list");
  if (lists.g_buf_kb.empty()) throw SchemaError("build_schema: empty g_buf choice list");
  if (lists.r_buf_bytes.empty()) throw SchemaError("build_schema: empty r_buf choice list");
  if (lists.dataflows.empty()) throw SchemaError("build_schema: empty dataflow choice list");

  for (const PeDims& pe : lists.pe_array)
    if (pe.rows < kPeRowsMin || pe.rows > kPeRowsMax || pe.cols < kPeColsMin ||
        pe.cols > kPeColsMax)
      throw RangeError("build_schema: pe_array " + std::to_string(pe.rows) + "x" +
                       std::to_string(pe.cols) + " outside 8x8..16x32");
  for (int kb : lists.g_buf_kb)
    if (kb < kGbufMin || kb > kGbufMax)
      throw RangeError("build_schema: g_buf_kb " + std::to_string(kb) +
                       " outside 108..1024");
  for (int by : lists.r_buf_bytes)
    if (by < kRbufMin || by > kRbufMax)
      throw RangeError("build_schema: r_buf_bytes " + std::to_string(by) +
                       " outside 64..1024");

  DecisionSchema schema;
  schema.b = b;
  schema.n_cells = n_cells;
  schema.r_cells = r_cells;
  schema.lists = lists;
  for (int cell = 0; cell < 2; ++cell) {
    for (int i = 2; i < b; ++i) {
      const std::string base = std::string(cell_prefix(cell)) + ".n" + std::to_string(i);
      schema.steps.push_back({base + ".in1", StepKind::NodeIn1, i, cell, i});
      schema.steps.push_back({base + ".in2", StepKind::NodeIn2, i, cell, i});
      schema.steps.push_back({base + ".op1", StepKind::NodeOp1, kOpCount, cell, i});
      schema.steps.push_back({base + ".op2", StepKind::NodeOp2, kOpCount, cell, i});
    }
  }
  schema.s_dnn = static_cast<int>(schema.steps.size());
  schema.steps.push_back({"accel.pe", StepKind::AccelPe,
                          static_cast<int>(lists.pe_array.size()), -1, -1});
  schema.steps.push_back({"accel.gbuf", StepKind::AccelGbuf,
                          static_cast<int>(lists.g_buf_kb.size()), -1, -1});
  schema.steps.push_back({"accel.rbuf", StepKind::AccelRbuf,
                          static_cast<int>(lists.r_buf_bytes.size()), -1, -1});
  schema.steps.push_back({"accel.dataflow", StepKind::AccelDataflow,
                          static_cast<int>(lists.dataflows.size()), -1, -1});
  schema.l_accel = static_cast<int>(schema.steps.size()) - schema.s_dnn;
  return schema;
}

std::string DecisionSchema::describe() const {
  std::ostringstream os;
  os << "schema b=" << b << " n_cells=" << n_cells << " r_cells=" << r_cells
     << " steps=" << steps.size() << " (dnn=" << s_dnn << " accel=" << l_accel << ")\n";
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const DecisionStep& st = steps[t];
    os << "  step " << t << ": " << st.name << " vocab=" << st.vocab;
    switch (st.kind) {
      case StepKind::AccelPe:
        os << " choices=";
        for (std::size_t k = 0; k < lists.pe_array.size(); ++k)
          os << (k ? "," : "") << lists.pe_array[k].rows << "x" << lists.pe_array[k].cols;
        break;
      case StepKind::AccelGbuf:
        os << " choices=";
        for (std::size_t k = 0; k < lists.g_buf_kb.size(); ++k)
          os << (k ? "," : "") << lists.g_buf_kb[k] << "kb";
        break;
      case StepKind::AccelRbuf:
        os << " choices=";
        for (std::size_t k = 0; k < lists.r_buf_bytes.size(); ++k)
          os << (k ? "," : "") << lists.r_buf_bytes[k] << "b";
        break;
      case StepKind::AccelDataflow:
        os << " choices=";
        for (std::size_t k = 0; k < lists.dataflows.size(); ++k)
          os << (k ? "," : "") << dataflow_name(lists.dataflows[k]);
        break;
      default:
        break;
    }
    os << "\n";
  }
  return os.str();
}

std::uint64_t DecisionSchema::hash() const {
  // FNV-1a over the structural description; stable across runs.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : describe()) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

int index_of_pe(const std::vector<PeDims>& list, PeDims pe) {
  for (std::size_t k = 0; k < list.size(); ++k)
    if (list[k] == pe) return static_cast<int>(k);
  return -1;
}

template <class T>
int index_of(const std::vector<T>& list, T v) {
  for (std::size_t k = 0; k < list.size(); ++k)
    if (list[k] == v) return static_cast<int>(k);
  return -1;
}

}  // namespace

std::vector<int> encode(const DesignPoint& point, const DecisionSchema& schema) {
  const int nodes = schema.b - 2;
  const auto check_cell = [&](const CellSpec& cell, CellKind kind, const char* which) {
    if (cell.kind != kind)
      throw EncodeError(std::string("encode: ") + which + " cell has wrong kind");
    if (static_cast<int>(cell.nodes.size()) != nodes)
      throw EncodeError(std::string("encode: ") + which + " cell has " +
                        std::to_string(cell.nodes.size()) + " nodes, schema expects " +
                        std::to_string(nodes));
  };
  check_cell(point.dnn.normal, CellKind::Normal, "normal");
  check_cell(point.dnn.reduction, CellKind::Reduction, "reduction");
  if (point.dnn.n_cells != schema.n_cells || point.dnn.r_cells != schema.r_cells)
    throw EncodeError("encode: genotype cell counts do not match schema");

  std::vector<int> seq;
  seq.reserve(schema.steps.size());
  int t = 0;
  for (int cell = 0; cell < 2; ++cell) {
    const CellSpec& cs = cell == 0 ? point.dnn.normal : point.dnn.reduction;
    for (int i = 2; i < schema.b; ++i) {
      const NodeSpec& nd = cs.nodes[i - 2];
      if (!(nd.in1 >= 0 && nd.in1 < nd.in2 && nd.in2 < i))
        throw EncodeError("encode: non-canonical node inputs at step " +
                          std::to_string(t) + " (" + schema.steps[t].name + ")");
      seq.push_back(nd.in1);
      seq.push_back(nd.in2);
      seq.push_back(static_cast<int>(nd.op1));
      seq.push_back(static_cast<int>(nd.op2));
      t += 4;
    }
  }
  const int pe_idx = index_of_pe(schema.lists.pe_array, point.accel.pe);
  if (pe_idx < 0)
    throw EncodeError("encode: accel value not in choice list at step " +
                      std::to_string(t) + " (accel.pe)");
  seq.push_back(pe_idx);
  ++t;
  const int gb_idx = index_of(schema.lists.g_buf_kb, point.accel.g_buf_kb);
  if (gb_idx < 0)
    throw EncodeError("encode: accel value not in choice list at step " +
                      std::to_string(t) + " (accel.gbuf)");
  seq.push_back(gb_idx);
  ++t;
  const int rb_idx = index_of(schema.lists.r_buf_bytes, point.accel.r_buf_bytes);
  if (rb_idx < 0)
    throw EncodeError("encode: accel value not in choice list at step " +
                      std::to_string(t) + " (accel.rbuf)");
  seq.push_back(rb_idx);
  ++t;
  const int df_idx = index_of(schema.lists.dataflows, point.accel.dataflow);
  if (df_idx < 0)
    throw EncodeError("encode: accel value not in choice list at step " +
                      std::to_string(t) + " (accel.dataflow)");
  seq.push_back(df_idx);
  return seq;
}

ValidationResult validate(const std::vector<int>& seq, const DecisionSchema& schema) {
  if (seq.size() != schema.steps.size())
    throw LengthError("validate: sequence length " + std::to_string(seq.size()) +
                      ", schema expects " + std::to_string(schema.steps.size()));

  ValidationResult res;
  for (std::size_t t = 0; t < seq.size(); ++t)
    if (seq[t] < 0 || seq[t] >= schema.steps[t].vocab)
      res.violations.push_back({static_cast<int>(t),
                                "vocabulary exceeded at step " + std::to_string(t) +
                                    " (" + schema.steps[t].name + "): value " +
                                    std::to_string(seq[t]) + ", vocab " +
                                    std::to_string(schema.steps[t].vocab)});

  // Node-input canonicality (checked only where both values are in vocab,
  // so the violation list stays precise).
  int t = 0;
  for (int cell = 0; cell < 2; ++cell) {
    for (int i = 2; i < schema.b; ++i) {
      const int in1 = seq[t], in2 = seq[t + 1];
      const bool vocab_ok = in1 >= 0 && in1 < i && in2 >= 0 && in2 < i;
      if (vocab_ok && !(in1 < in2))
        res.violations.push_back({t + 1,
                                  "node inputs must be distinct and canonical (in1 < in2) at step " +
                                      std::to_string(t + 1) + " (" +
                                      schema.steps[t + 1].name + ")"});
      t += 4;
    }
  }
  if (!res.violations.empty()) return res;

  DesignPoint p;
  p.dnn.n_cells = schema.n_cells;
  p.dnn.r_cells = schema.r_cells;
  p.dnn.normal.kind = CellKind::Normal;
  p.dnn.reduction.kind = CellKind::Reduction;
  t = 0;
  for (int cell = 0; cell < 2; ++cell) {
    CellSpec& cs = cell == 0 ? p.dnn.normal : p.dnn.reduction;
    for (int i = 2; i < schema.b; ++i) {
      NodeSpec nd;
      nd.in1 = seq[t];
      nd.in2 = seq[t + 1];
      nd.op1 = static_cast<OpKind>(seq[t + 2]);
      nd.op2 = static_cast<OpKind>(seq[t + 3]);
      cs.nodes.push_back(nd);
      t += 4;
    }
  }
  p.accel.pe = schema.lists.pe_array[seq[t]];
  p.accel.g_buf_kb = schema.lists.g_buf_kb[seq[t + 1]];
  p.accel.r_buf_bytes = schema.lists.r_buf_bytes[seq[t + 2]];
  p.accel.dataflow = schema.lists.dataflows[seq[t + 3]];
  res.point = std::move(p);
  return res;
}

DesignPoint decode(const std::vector<int>& seq, const DecisionSchema& schema) {
  ValidationResult res = validate(seq, schema);
  if (!res.ok()) {
    std::string msg = "decode: invalid sequence;";
    for (const Violation& v : res.violations) msg += " [" + v.rule + "]";
    throw DecodeError(msg);
  }
  return *res.point;
}

namespace {

// Lexicographic unranking of a 2-subset of {0..i-1}.
std::pair<int, int> unrank_pair(int i, std::uint64_t k) {
  for (int a = 0;; ++a) {
    const std::uint64_t cnt = static_cast<std::uint64_t>(i - 1 - a);
    if (k < cnt) return {a, a + 1 + static_cast<int>(k)};
    k -= cnt;
  }
}

}  // namespace

DesignPoint uniform_sample(const DecisionSchema& schema, std::uint64_t seed) {
  rng::Xoshiro256 gen = rng::Xoshiro256::seeded(seed);
  DesignPoint p;
  p.dnn.n_cells = schema.n_cells;
  p.dnn.r_cells = schema.r_cells;
  p.dnn.normal.kind = CellKind::Normal;
  p.dnn.reduction.kind = CellKind::Reduction;
  for (int cell = 0; cell < 2; ++cell) {
    CellSpec& cs = cell == 0 ? p.dnn.normal : p.dnn.reduction;
    for (int i = 2; i < schema.b; ++i) {
      const std::uint64_t pairs = static_cast<std::uint64_t>(i) * (i - 1) / 2;
      auto [in1, in2] = unrank_pair(i, gen.below(pairs));
      NodeSpec nd;
      nd.in1 = in1;
      nd.in2 = in2;
      nd.op1 = static_cast<OpKind>(gen.below(kOpCount));
      nd.op2 = static_cast<OpKind>(gen.below(kOpCount));
      cs.nodes.push_back(nd);
    }
  }
  p.accel.pe = schema.lists.pe_array[gen.below(schema.lists.pe_array.size())];
  p.accel.g_buf_kb = schema.lists.g_buf_kb[gen.below(schema.lists.g_buf_kb.size())];
  p.accel.r_buf_bytes =
      schema.lists.r_buf_bytes[gen.below(schema.lists.r_buf_bytes.size())];
  p.accel.dataflow = schema.lists.dataflows[gen.below(schema.lists.dataflows.size())];
  return p;
}

SpaceCardinality count_space(const DecisionSchema& schema) {
  cpp_int per_cell = 1;
  for (int i = 2; i < schema.b; ++i)
    per_cell *= cpp_int(i) * (i - 1) / 2 * (kOpCount * kOpCount);
  cpp_int genotypes = per_cell * per_cell;
  cpp_int accel = cpp_int(schema.lists.pe_array.size()) * schema.lists.g_buf_kb.size() *
                  schema.lists.r_buf_bytes.size() * schema.lists.dataflows.size();
  cpp_int factorial = 1;
  for (int k = 2; k <= schema.b - 2; ++k) factorial *= k;
  cpp_int paper = 1;
  for (int k = 0; k < 4; ++k) paper *= cpp_int(kOpCount) * factorial;

  SpaceCardinality out;
  out.genotypes = genotypes.str();
  out.total = cpp_int(genotypes * accel).str();
  out.paper_formula = paper.str();
  return out;
}

std::string to_line(const std::vector<int>& seq) {
  std::string line;
  for (std::size_t t = 0; t < seq.size(); ++t) {
    if (t) line += ',';
    line += std::to_string(seq[t]);
  }
  return line;
}

std::vector<int> parse_line(const std::string& line) {
  std::vector<int> seq;
  std::size_t pos = 0;
  while (pos <= line.size()) {
    std::size_t comma = line.find(',', pos);
    if (comma == std::string::npos) comma = line.size();
    std::string tok = line.substr(pos, comma - pos);
    // Trim surrounding blanks.
    const std::size_t b0 = tok.find_first_not_of(" \t\r");
    const std::size_t b1 = tok.find_last_not_of(" \t\r");
    if (b0 == std::string::npos)
      throw ConfigError("parse_line: empty field in decision sequence");
    tok = tok.substr(b0, b1 - b0 + 1);
    try {
      std::size_t used = 0;
      const int v = std::stoi(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      seq.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("parse_line: bad integer '" + tok + "'");
    }
    pos = comma + 1;
    if (comma == line.size()) break;
  }
  return seq;
}

}  // namespace codesign::space
