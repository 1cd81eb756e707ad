#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "atlaas/bitvec.hpp"

namespace atlaas {

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct Type {
  enum class Kind : uint8_t { Int, Index, Memref };

  Kind kind = Kind::Int;
  unsigned width = 1;          // Int width, or Memref element width
  std::vector<int64_t> shape;  // Memref extents

  static Type integer(unsigned w) { return Type{Kind::Int, w, {}}; }
  static Type index() { return Type{Kind::Index, 64, {}}; }
  static Type memref(std::vector<int64_t> shape, unsigned elem_width) {
    return Type{Kind::Memref, elem_width, std::move(shape)};
  }

  bool is_int() const { return kind == Kind::Int; }
  bool is_index() const { return kind == Kind::Index; }
  bool is_memref() const { return kind == Kind::Memref; }

  int64_t element_count() const {
    int64_t n = 1;
    for (int64_t e : shape) n *= e;
    return n;
  }

  /// Total state bits carried by a value of this type (index counts as 64).
  uint64_t bit_count() const {
    switch (kind) {
      case Kind::Int: return width;
      case Kind::Index: return 64;
      case Kind::Memref: return static_cast<uint64_t>(element_count()) * width;
    }
    return 0;
  }

  friend bool operator==(const Type &, const Type &) = default;
};

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

using AnnValue = std::variant<int64_t, std::string, std::vector<int64_t>>;
using Annotations = std::map<std::string, AnnValue>;

namespace ann {
// The closed attribute vocabulary the pipeline is allowed to leave behind.
inline const std::set<std::string> &closed_vocabulary() {
  static const std::set<std::string> keys = {
      "atlaas.mac",     "atlaas.clamp",      "atlaas.dead_mode",
      "linalg_op",      "taidl.role",        "taidl.coord",
      "taidl.grid",     "taidl.compute",     "taidl.activation",
      "taidl.port_class", "taidl.clamp",
  };
  return keys;
}

constexpr const char *kMac = "atlaas.mac";
constexpr const char *kClamp = "atlaas.clamp";
constexpr const char *kLinalgOp = "linalg_op";
constexpr const char *kRole = "taidl.role";
constexpr const char *kCoord = "taidl.coord";
constexpr const char *kCompute = "taidl.compute";
constexpr const char *kActivation = "taidl.activation";
constexpr const char *kPortClass = "taidl.port_class";
constexpr const char *kTaidlClamp = "taidl.clamp";
}  // namespace ann

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

enum class Op : uint8_t {
  Const, Extsi, Extui, Trunci,
  Addi, Subi, Muli, Andi, Ori, Xori, Shli, Shrsi, Shrui,
  Cmpi, Select, Load, Store, If, For, Yield, Return,
};

enum class CmpPred : uint8_t { Eq, Ne, Slt, Sle, Sgt, Sge, Ult, Ule, Ugt, Uge };

inline const char *op_name(Op op) {
  switch (op) {
    case Op::Const: return "const";
    case Op::Extsi: return "extsi";
    case Op::Extui: return "extui";
    case Op::Trunci: return "trunci";
    case Op::Addi: return "addi";
    case Op::Subi: return "subi";
    case Op::Muli: return "muli";
    case Op::Andi: return "andi";
    case Op::Ori: return "ori";
    case Op::Xori: return "xori";
    case Op::Shli: return "shli";
    case Op::Shrsi: return "shrsi";
    case Op::Shrui: return "shrui";
    case Op::Cmpi: return "cmpi";
    case Op::Select: return "select";
    case Op::Load: return "load";
    case Op::Store: return "store";
    case Op::If: return "scf.if";
    case Op::For: return "scf.for";
    case Op::Yield: return "yield";
    case Op::Return: return "return";
  }
  return "?";
}

inline const char *pred_name(CmpPred p) {
  switch (p) {
    case CmpPred::Eq: return "eq";
    case CmpPred::Ne: return "ne";
    case CmpPred::Slt: return "slt";
    case CmpPred::Sle: return "sle";
    case CmpPred::Sgt: return "sgt";
    case CmpPred::Sge: return "sge";
    case CmpPred::Ult: return "ult";
    case CmpPred::Ule: return "ule";
    case CmpPred::Ugt: return "ugt";
    case CmpPred::Uge: return "uge";
  }
  return "?";
}

inline bool is_cast(Op op) {
  return op == Op::Extsi || op == Op::Extui || op == Op::Trunci;
}
inline bool is_binary_arith(Op op) {
  switch (op) {
    case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
    case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
    case Op::Shrui:
      return true;
    default:
      return false;
  }
}

using ValueId = uint32_t;
constexpr ValueId kInvalidValue = ~ValueId{0};

struct Operation;

struct Block {
  /// Block arguments. A `scf.for` body block defines [induction, iter_args...].
  std::vector<ValueId> args;
  std::vector<Operation> ops;
};

struct Operation {
  Op op = Op::Const;
  std::vector<ValueId> operands;
  std::vector<ValueId> results;
  std::vector<Block> regions;  // If: then[, else]. For: body.
  Annotations attrs;

  BitVec value;                 // Const payload
  CmpPred pred = CmpPred::Eq;   // Cmpi predicate
  int64_t lower = 0, upper = 0, step = 1;  // For bounds

  ValueId result() const { return results.empty() ? kInvalidValue : results[0]; }
};

// ---------------------------------------------------------------------------
// Functions and modules
// ---------------------------------------------------------------------------

struct ValueDef {
  std::string name;  // unique within the function, printed as %name
  Type type;
};

struct FuncArg {
  ValueId value = kInvalidValue;
  Annotations attrs;
};

/// One per (instruction, architectural state variable) pair. The name encodes
/// that identity as `<instruction>__<asv>`; every argument's value name is the
/// original signal name.
struct Function {
  std::string name;
  std::vector<FuncArg> args;
  Block body;
  Annotations attrs;

  std::vector<ValueDef> values;

  std::string_view instruction() const {
    auto pos = name.find("__");
    return pos == std::string::npos ? std::string_view(name)
                                    : std::string_view(name).substr(0, pos);
  }
  std::string_view target_asv() const {
    auto pos = name.find("__");
    return pos == std::string::npos ? std::string_view(name)
                                    : std::string_view(name).substr(pos + 2);
  }

  const Type &type_of(ValueId v) const { return values.at(v).type; }
  const std::string &name_of(ValueId v) const { return values.at(v).name; }

  ValueId make_value(std::string name, Type t) {
    for (const auto &d : values)
      if (d.name == name)
        throw std::logic_error("duplicate value name %" + name);
    values.push_back(ValueDef{std::move(name), std::move(t)});
    return static_cast<ValueId>(values.size() - 1);
  }

  /// A value named after `hint`, suffixed if the name is taken.
  ValueId fresh_value(std::string_view hint, Type t) {
    std::string base(hint);
    if (!has_value_named(base)) return make_value(base, std::move(t));
    for (uint32_t i = 0;; ++i) {
      std::string candidate = base + "_" + std::to_string(i);
      if (!has_value_named(candidate))
        return make_value(candidate, std::move(t));
    }
  }

  bool has_value_named(std::string_view n) const {
    for (const auto &d : values)
      if (d.name == n) return true;
    return false;
  }

  std::optional<ValueId> find_value(std::string_view n) const {
    for (ValueId i = 0; i < values.size(); ++i)
      if (values[i].name == n) return i;
    return std::nullopt;
  }

  std::optional<ValueId> find_arg(std::string_view signal) const {
    for (const auto &a : args)
      if (values[a.value].name == signal) return a.value;
    return std::nullopt;
  }
};

struct EncodingField {
  std::string name;  // e.g. bank
  std::string arg;   // e.g. rs1
  unsigned hi = 0, lo = 0;

  unsigned field_width() const { return hi - lo + 1; }
  std::string to_string() const {
    return arg + "[" + std::to_string(hi) + ":" + std::to_string(lo) + "]";
  }
};

struct MacroSpec {
  std::string primitive;                 // primitive instruction name
  std::vector<std::string> bound_regs;   // loop-bound registers
};

/// Names an instruction, its fixed control-input values, its ASV targets and
/// optional encoding fields / macro structure.
struct Descriptor {
  std::string instruction;
  std::map<std::string, std::vector<int64_t>> fixed_controls;
  std::vector<std::string> asvs;
  std::vector<EncodingField> encoding;
  std::optional<MacroSpec> macro;

  const EncodingField *find_field(std::string_view n) const {
    for (const auto &f : encoding)
      if (f.name == n) return &f;
    return nullptr;
  }
};

struct Module {
  std::vector<Descriptor> descriptors;
  std::vector<Function> functions;

  Function *find_function(std::string_view n) {
    for (auto &f : functions)
      if (f.name == n) return &f;
    return nullptr;
  }
  const Function *find_function(std::string_view n) const {
    for (const auto &f : functions)
      if (f.name == n) return &f;
    return nullptr;
  }
  const Descriptor *find_descriptor(std::string_view instr) const {
    for (const auto &d : descriptors)
      if (d.instruction == instr) return &d;
    return nullptr;
  }

  /// Appends another module's descriptors and functions.
  void merge(Module other) {
    for (auto &d : other.descriptors) descriptors.push_back(std::move(d));
    for (auto &f : other.functions) functions.push_back(std::move(f));
  }
};

// ---------------------------------------------------------------------------
// Traversal and rewriting utilities
// ---------------------------------------------------------------------------

template <typename F>
void walk_ops(Block &b, F &&cb) {
  for (auto &op : b.ops) {
    cb(op);
    for (auto &r : op.regions) walk_ops(r, cb);
  }
}
template <typename F>
void walk_ops(const Block &b, F &&cb) {
  for (const auto &op : b.ops) {
    cb(op);
    for (const auto &r : op.regions) walk_ops(r, cb);
  }
}
template <typename F>
void walk_ops(Function &f, F &&cb) { walk_ops(f.body, cb); }
template <typename F>
void walk_ops(const Function &f, F &&cb) { walk_ops(f.body, cb); }

inline size_t count_ops(const Function &f) {
  size_t n = 0;
  walk_ops(f, [&](const Operation &) { ++n; });
  return n;
}

inline size_t count_ops(const Function &f, Op kind) {
  size_t n = 0;
  walk_ops(f, [&](const Operation &op) { n += op.op == kind; });
  return n;
}

/// Replaces every use of `from` with `to` across the whole function body.
inline void replace_all_uses(Function &f, ValueId from, ValueId to) {
  walk_ops(f, [&](Operation &op) {
    for (auto &v : op.operands)
      if (v == from) v = to;
  });
}

namespace detail {

inline void dce_mark(const Block &b, bool parent_live,
                     std::set<const Operation *> &live,
                     std::set<ValueId> &used, bool &changed) {
  for (const auto &op : b.ops) {
    bool is_live = op.op == Op::Return ||
                   (op.op == Op::Yield && parent_live) || live.count(&op);
    if (!is_live)
      for (ValueId r : op.results) is_live |= used.count(r) != 0;
    if (is_live && live.insert(&op).second) changed = true;
    if (is_live)
      for (ValueId v : op.operands)
        if (used.insert(v).second) changed = true;
    for (const auto &r : op.regions) dce_mark(r, is_live, live, used, changed);
  }
}

inline size_t dce_sweep(Block &b, const std::set<const Operation *> &live) {
  size_t removed = 0;
  for (auto &op : b.ops)
    for (auto &r : op.regions) removed += dce_sweep(r, live);
  auto it = b.ops.begin();
  while (it != b.ops.end()) {
    if (!live.count(&*it)) {
      it = b.ops.erase(it);
      ++removed;
    } else {
      ++it;
    }
  }
  return removed;
}

}  // namespace detail

/// Removes operations whose results are unused. Memory is in SSA form (stores
/// produce fresh memref versions), so liveness alone is sound.
inline size_t dead_code_eliminate(Function &f) {
  std::set<ValueId> used;
  std::set<const Operation *> live;
  for (;;) {
    bool changed = false;
    detail::dce_mark(f.body, /*parent_live=*/true, live, used, changed);
    if (!changed) break;
  }
  return detail::dce_sweep(f.body, live);
}

// ---------------------------------------------------------------------------
// Structural equality
// ---------------------------------------------------------------------------

namespace detail {

inline bool blocks_equal(const Function &fa, const Block &a, const Function &fb,
                         const Block &b, bool ignore_annotations);

inline bool ops_equal(const Function &fa, const Operation &a,
                      const Function &fb, const Operation &b,
                      bool ignore_annotations) {
  if (a.op != b.op || a.operands.size() != b.operands.size() ||
      a.results.size() != b.results.size() ||
      a.regions.size() != b.regions.size())
    return false;
  if (!ignore_annotations && a.attrs != b.attrs) return false;
  if (a.op == Op::Const && a.value != b.value) return false;
  if (a.op == Op::Cmpi && a.pred != b.pred) return false;
  if (a.op == Op::For &&
      (a.lower != b.lower || a.upper != b.upper || a.step != b.step))
    return false;
  for (size_t i = 0; i < a.operands.size(); ++i)
    if (fa.name_of(a.operands[i]) != fb.name_of(b.operands[i])) return false;
  for (size_t i = 0; i < a.results.size(); ++i) {
    if (fa.name_of(a.results[i]) != fb.name_of(b.results[i])) return false;
    if (!(fa.type_of(a.results[i]) == fb.type_of(b.results[i]))) return false;
  }
  for (size_t i = 0; i < a.regions.size(); ++i)
    if (!blocks_equal(fa, a.regions[i], fb, b.regions[i], ignore_annotations))
      return false;
  return true;
}

inline bool blocks_equal(const Function &fa, const Block &a, const Function &fb,
                         const Block &b, bool ignore_annotations) {
  if (a.args.size() != b.args.size() || a.ops.size() != b.ops.size())
    return false;
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (fa.name_of(a.args[i]) != fb.name_of(b.args[i])) return false;
    if (!(fa.type_of(a.args[i]) == fb.type_of(b.args[i]))) return false;
  }
  for (size_t i = 0; i < a.ops.size(); ++i)
    if (!ops_equal(fa, a.ops[i], fb, b.ops[i], ignore_annotations))
      return false;
  return true;
}

}  // namespace detail

inline bool structurally_equal(const Function &a, const Function &b,
                               bool ignore_annotations = false) {
  if (a.name != b.name || a.args.size() != b.args.size()) return false;
  if (!ignore_annotations && a.attrs != b.attrs) return false;
  for (size_t i = 0; i < a.args.size(); ++i) {
    if (a.name_of(a.args[i].value) != b.name_of(b.args[i].value)) return false;
    if (!(a.type_of(a.args[i].value) == b.type_of(b.args[i].value)))
      return false;
    if (!ignore_annotations && a.args[i].attrs != b.args[i].attrs) return false;
  }
  return detail::blocks_equal(a, a.body, b, b.body, ignore_annotations);
}

inline bool structurally_equal(const Module &a, const Module &b) {
  if (a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i)
    if (!structurally_equal(a.functions[i], b.functions[i])) return false;
  return true;
}

/// Copy of `f` with every op/arg/function annotation removed.
inline Function strip_annotations(Function f) {
  f.attrs.clear();
  for (auto &a : f.args) a.attrs.clear();
  walk_ops(f, [](Operation &op) { op.attrs.clear(); });
  return f;
}

// ---------------------------------------------------------------------------
// Builder
// ---------------------------------------------------------------------------

/// Convenience wrapper for constructing verified-by-construction functions.
class FunctionBuilder {
 public:
  explicit FunctionBuilder(std::string name) { fn_.name = std::move(name); }

  ValueId arg(std::string signal, Type t, Annotations attrs = {}) {
    ValueId v = fn_.make_value(std::move(signal), std::move(t));
    fn_.args.push_back(FuncArg{v, std::move(attrs)});
    return v;
  }

  /// Constants are deduplicated per (value, type) at the function top level.
  ValueId constant(BitVec v, Type t) {
    auto key = std::make_pair(v.bits, type_key(t));
    if (t.is_int()) {
      auto it = const_cache_.find(key);
      if (it != const_cache_.end()) return it->second;
    }
    Operation op;
    op.op = Op::Const;
    op.value = v;
    ValueId r = fn_.fresh_value("c" + std::to_string(counter_++), t);
    op.results = {r};
    fn_.body.ops.push_back(std::move(op));
    if (t.is_int()) const_cache_[key] = r;
    return r;
  }
  ValueId const_int(int64_t v, unsigned width) {
    return constant(BitVec::make_signed(width, v), Type::integer(width));
  }
  ValueId const_index(int64_t v) {
    auto key = std::make_pair(static_cast<u128>(v), std::string("index"));
    auto it = const_cache_.find(key);
    if (it != const_cache_.end()) return it->second;
    Operation op;
    op.op = Op::Const;
    op.value = BitVec::make_signed(64, v);
    ValueId r = fn_.fresh_value("i" + std::to_string(v), Type::index());
    op.results = {r};
    fn_.body.ops.push_back(std::move(op));
    const_cache_[key] = r;
    return r;
  }

  ValueId cast(Op kind, ValueId v, unsigned to_width,
               std::string_view hint = "t") {
    Operation op;
    op.op = kind;
    op.operands = {v};
    ValueId r = fn_.fresh_value(next_name(hint), Type::integer(to_width));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }
  ValueId extsi(ValueId v, unsigned w, std::string_view hint = "sext") {
    return cast(Op::Extsi, v, w, hint);
  }
  ValueId extui(ValueId v, unsigned w, std::string_view hint = "zext") {
    return cast(Op::Extui, v, w, hint);
  }
  ValueId trunci(ValueId v, unsigned w, std::string_view hint = "trunc") {
    return cast(Op::Trunci, v, w, hint);
  }

  ValueId binary(Op kind, ValueId a, ValueId b, std::string_view hint = "t") {
    Operation op;
    op.op = kind;
    op.operands = {a, b};
    ValueId r = fn_.fresh_value(next_name(hint), fn_.type_of(a));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }

  ValueId cmpi(CmpPred p, ValueId a, ValueId b, std::string_view hint = "cmp") {
    Operation op;
    op.op = Op::Cmpi;
    op.pred = p;
    op.operands = {a, b};
    ValueId r = fn_.fresh_value(next_name(hint), Type::integer(1));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }

  ValueId select(ValueId cond, ValueId t, ValueId f,
                 std::string_view hint = "sel") {
    Operation op;
    op.op = Op::Select;
    op.operands = {cond, t, f};
    ValueId r = fn_.fresh_value(next_name(hint), fn_.type_of(t));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }

  ValueId load(ValueId mem, std::vector<ValueId> idx,
               std::string_view hint = "v") {
    Operation op;
    op.op = Op::Load;
    op.operands = {mem};
    for (ValueId i : idx) op.operands.push_back(i);
    ValueId r = fn_.fresh_value(next_name(hint),
                                Type::integer(fn_.type_of(mem).width));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }

  ValueId store(ValueId v, ValueId mem, std::vector<ValueId> idx,
                std::string_view hint = "m") {
    Operation op;
    op.op = Op::Store;
    op.operands = {v, mem};
    for (ValueId i : idx) op.operands.push_back(i);
    ValueId r = fn_.fresh_value(next_name(hint), fn_.type_of(mem));
    op.results = {r};
    cur().ops.push_back(std::move(op));
    return r;
  }

  void ret(ValueId v) {
    Operation op;
    op.op = Op::Return;
    op.operands = {v};
    cur().ops.push_back(std::move(op));
  }

  void yield(std::vector<ValueId> vs = {}) {
    Operation op;
    op.op = Op::Yield;
    op.operands = std::move(vs);
    cur().ops.push_back(std::move(op));
  }

  /// Opens `scf.if %cond -> result_type { ... }`; the callbacks fill the
  /// regions and must end them with yield().
  template <typename ThenFn, typename ElseFn>
  ValueId build_if(ValueId cond, Type result_type, ThenFn &&then_fn,
                   ElseFn &&else_fn, std::string_view hint = "if") {
    Operation op;
    op.op = Op::If;
    op.operands = {cond};
    ValueId r = fn_.fresh_value(next_name(hint), result_type);
    op.results = {r};
    op.regions.resize(2);
    size_t at = cur().ops.size();
    cur().ops.push_back(std::move(op));
    block_stack_.push_back({at, 0});
    then_fn(*this);
    block_stack_.back().region = 1;
    else_fn(*this);
    block_stack_.pop_back();
    return r;
  }

  /// Opens `scf.for %iv = lower to upper step s iter_args(...)`; `body_fn`
  /// receives (builder, iv, iter_values) and must end with yield(next_values).
  template <typename BodyFn>
  std::vector<ValueId> build_for(int64_t lower, int64_t upper, int64_t s,
                                 std::vector<ValueId> inits, BodyFn &&body_fn,
                                 std::string_view hint = "for") {
    Operation op;
    op.op = Op::For;
    op.lower = lower;
    op.upper = upper;
    op.step = s;
    op.operands = inits;
    std::vector<ValueId> results;
    for (size_t i = 0; i < inits.size(); ++i)
      results.push_back(
          fn_.fresh_value(next_name(hint), fn_.type_of(inits[i])));
    op.results = results;
    op.regions.resize(1);
    ValueId iv = fn_.fresh_value(next_name("iv"), Type::index());
    op.regions[0].args.push_back(iv);
    std::vector<ValueId> iters;
    for (size_t i = 0; i < inits.size(); ++i) {
      ValueId it = fn_.fresh_value(next_name("iter"), fn_.type_of(inits[i]));
      op.regions[0].args.push_back(it);
      iters.push_back(it);
    }
    size_t at = cur().ops.size();
    cur().ops.push_back(std::move(op));
    block_stack_.push_back({at, 0});
    body_fn(*this, iv, iters);
    block_stack_.pop_back();
    return results;
  }

  Operation &last_op() { return cur().ops.back(); }
  Function &function() { return fn_; }
  Function take() { return std::move(fn_); }

 private:
  // Frames address blocks by op index so vector reallocation cannot leave a
  // dangling parent pointer.
  struct Frame {
    size_t op_index;
    size_t region;
  };

  Block &cur() {
    Block *b = &fn_.body;
    for (auto &fr : block_stack_) b = &b->ops[fr.op_index].regions[fr.region];
    return *b;
  }

  std::string next_name(std::string_view hint) {
    return std::string(hint) + std::to_string(counter_++);
  }

  static std::string type_key(const Type &t) {
    std::string k = t.is_index() ? "index" : "i" + std::to_string(t.width);
    for (auto e : t.shape) k += "x" + std::to_string(e);
    return k;
  }

  Function fn_;
  std::vector<Frame> block_stack_;
  std::map<std::pair<u128, std::string>, ValueId> const_cache_;
  uint32_t counter_ = 0;
};

}  // namespace atlaas
