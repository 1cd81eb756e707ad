#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "atlaas/ir.hpp"

namespace atlaas {

struct PassReport {
  std::string pass;
  std::string function;
  size_t ops_before = 0;
  size_t ops_after = 0;
  size_t rewrites = 0;
  size_t annotations_added = 0;
  std::string note;  // non-empty when the function was passed through on error

  std::string to_line() const {
    std::ostringstream os;
    os << "pass " << pass << " fn " << function << " ops_before " << ops_before
       << " ops_after " << ops_after << " rewrites " << rewrites
       << " annotations " << annotations_added;
    if (!note.empty()) os << " note \"" << note << "\"";
    return os.str();
  }
};

namespace passes {

/// Per-round lookup structures; invalidated by any mutation of the function
/// body. Passes therefore run find-one / apply / rebuild loops.
struct DefIndex {
  std::unordered_map<ValueId, Operation *> def;
  std::unordered_map<ValueId, std::pair<Operation *, size_t>> block_args;
  std::unordered_map<ValueId, size_t> uses;
  std::unordered_map<const Operation *, std::pair<Block *, size_t>> position;

  explicit DefIndex(Function &f) { build(f.body); }

  void build(Block &b) {
    for (size_t i = 0; i < b.ops.size(); ++i) {
      Operation &op = b.ops[i];
      position[&op] = {&b, i};
      for (ValueId r : op.results) def[r] = &op;
      for (ValueId v : op.operands) ++uses[v];
      if (op.op == Op::For)
        for (size_t k = 0; k < op.regions[0].args.size(); ++k)
          block_args[op.regions[0].args[k]] = {&op, k};
      for (auto &r : op.regions) build(r);
    }
  }

  Operation *def_op(ValueId v) const {
    auto it = def.find(v);
    return it == def.end() ? nullptr : it->second;
  }

  Operation *def_op(ValueId v, Op kind) const {
    Operation *op = def_op(v);
    return op && op->op == kind ? op : nullptr;
  }

  size_t use_count(ValueId v) const {
    auto it = uses.find(v);
    return it == uses.end() ? 0 : it->second;
  }

  std::optional<BitVec> const_value(ValueId v) const {
    Operation *op = def_op(v, Op::Const);
    if (!op) return std::nullopt;
    return op->value;
  }
};

/// Walks down through ext/trunc casts to the pre-cast root value.
inline ValueId skip_casts(const DefIndex &index, ValueId v,
                          std::vector<Operation *> *chain = nullptr) {
  for (;;) {
    Operation *op = index.def_op(v);
    if (!op || !is_cast(op->op)) return v;
    if (chain) chain->push_back(op);
    v = op->operands[0];
  }
}

// ---------------------------------------------------------------------------
// atlaas.mac payload: "<lhs> <rhs> <acc> <lhs_width> <rhs_width>", value refs
// by name so the encoding survives printing and re-parsing.
// ---------------------------------------------------------------------------

struct MacInfo {
  ValueId lhs = kInvalidValue;
  ValueId rhs = kInvalidValue;
  ValueId acc = kInvalidValue;
  unsigned lhs_width = 0;
  unsigned rhs_width = 0;
};

inline std::string encode_mac(const Function &f, const MacInfo &m) {
  return f.name_of(m.lhs) + " " + f.name_of(m.rhs) + " " + f.name_of(m.acc) +
         " " + std::to_string(m.lhs_width) + " " + std::to_string(m.rhs_width);
}

inline std::optional<MacInfo> decode_mac(const Function &f,
                                         const Operation &op) {
  auto it = op.attrs.find(ann::kMac);
  if (it == op.attrs.end()) return std::nullopt;
  const auto *s = std::get_if<std::string>(&it->second);
  if (!s) return std::nullopt;
  std::vector<std::string> parts;
  std::string cur;
  for (char c : *s) {
    if (c == ' ') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 5) return std::nullopt;
  MacInfo m;
  auto lhs = f.find_value(parts[0]);
  auto rhs = f.find_value(parts[1]);
  auto acc = f.find_value(parts[2]);
  if (!lhs || !rhs || !acc) return std::nullopt;
  m.lhs = *lhs;
  m.rhs = *rhs;
  m.acc = *acc;
  m.lhs_width = static_cast<unsigned>(std::stoul(parts[3]));
  m.rhs_width = static_cast<unsigned>(std::stoul(parts[4]));
  return m;
}

struct ClampInfo {
  int64_t lo = 0, hi = 0;
  bool is_signed = true;
  unsigned narrow_width = 0;
};

inline std::vector<int64_t> encode_clamp(const ClampInfo &c) {
  return {c.lo, c.hi, c.is_signed ? 1 : 0,
          static_cast<int64_t>(c.narrow_width)};
}

inline std::optional<ClampInfo> decode_clamp(const Operation &op) {
  auto it = op.attrs.find(ann::kClamp);
  if (it == op.attrs.end()) return std::nullopt;
  const auto *l = std::get_if<std::vector<int64_t>>(&it->second);
  if (!l || l->size() != 4) return std::nullopt;
  return ClampInfo{(*l)[0], (*l)[1], (*l)[2] != 0,
                   static_cast<unsigned>((*l)[3])};
}

/// Inserts `op` immediately before `anchor` (which must be in `block`).
inline Operation &insert_before(Block &block, const Operation *anchor,
                                Operation op) {
  for (size_t i = 0; i < block.ops.size(); ++i)
    if (&block.ops[i] == anchor)
      return *block.ops.insert(block.ops.begin() + static_cast<long>(i),
                               std::move(op));
  block.ops.push_back(std::move(op));
  return block.ops.back();
}

}  // namespace passes
}  // namespace atlaas
