#pragma once

#include <stdexcept>

#include "atlaas/eval.hpp"
#include "atlaas/passes/common.hpp"

namespace atlaas {

struct PassError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace passes {

namespace detail {

inline void morph_to_const(Operation &op, const BitVec &v) {
  op.op = Op::Const;
  op.value = v;
  op.operands.clear();
  op.regions.clear();
  op.attrs.clear();
}

/// Replaces loads of (or direct uses of) a fixed control input with the
/// descriptor's constant values; memref-packed controls carry one value per
/// time step.
inline size_t pin_control_arg(Function &f, ValueId arg,
                              const std::vector<int64_t> &vals) {
  size_t rewrites = 0;
  const Type &t = f.type_of(arg);
  if (t.is_memref()) {
    DefIndex index(f);
    walk_ops(f, [&](Operation &op) {
      if (op.op != Op::Load || op.operands[0] != arg) return;
      if (t.shape.size() != 1) return;  // packed controls are rank-1 series
      auto idx = index.const_value(op.operands[1]);
      if (!idx) return;  // loop-varying control access: leave for fallback
      size_t k = static_cast<size_t>(idx->to_signed());
      if (k >= vals.size())
        throw PassError("control binding for " + f.name_of(arg) +
                        " is shorter than time step " + std::to_string(k));
      morph_to_const(op, BitVec::make_signed(t.width, vals[k]));
      ++rewrites;
    });
    return rewrites;
  }
  // Scalar control: substitute one constant for every use.
  size_t uses = 0;
  walk_ops(f, [&](Operation &op) {
    for (ValueId v : op.operands) uses += v == arg;
  });
  if (uses == 0 || vals.empty()) return 0;
  Operation c;
  c.op = Op::Const;
  c.value = BitVec::make_signed(t.is_index() ? 64 : t.width, vals[0]);
  ValueId r = f.fresh_value("ctrl_" + f.name_of(arg), t);
  c.results = {r};
  f.body.ops.insert(f.body.ops.begin(), std::move(c));
  replace_all_uses(f, arg, r);
  return 1;
}

/// Replaces decoder-style extractions of a pinned encoding field
/// (trunci(shrui(reg, lo)) or trunci(reg) when lo == 0) with the pinned value.
inline size_t pin_encoding_field(Function &f, ValueId reg,
                                 const EncodingField &field, int64_t value) {
  size_t rewrites = 0;
  unsigned fw = field.field_width();
  DefIndex index(f);
  walk_ops(f, [&](Operation &op) {
    if (op.op != Op::Trunci) return;
    if (f.type_of(op.results[0]).width != fw) return;
    ValueId src = op.operands[0];
    if (field.lo == 0 && src == reg) {
      morph_to_const(op, BitVec::make_signed(fw, value));
      ++rewrites;
      return;
    }
    Operation *sh = index.def_op(src, Op::Shrui);
    if (!sh || sh->operands[0] != reg) return;
    auto amt = index.const_value(sh->operands[1]);
    if (!amt || amt->bits != field.lo) return;
    morph_to_const(op, BitVec::make_signed(fw, value));
    ++rewrites;
  });
  return rewrites;
}

inline bool fold_constants_once(Function &f, size_t &rewrites) {
  DefIndex index(f);
  bool changed = false;
  walk_ops(f, [&](Operation &op) {
    if (changed) return;
    switch (op.op) {
      case Op::Extsi:
      case Op::Extui:
      case Op::Trunci: {
        auto v = index.const_value(op.operands[0]);
        if (!v) return;
        morph_to_const(op, fold_cast(op.op, *v, f.type_of(op.results[0]).width));
        changed = true;
        ++rewrites;
        return;
      }
      case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
      case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
      case Op::Shrui: case Op::Cmpi: {
        auto a = index.const_value(op.operands[0]);
        auto b = index.const_value(op.operands[1]);
        if (!a || !b) return;
        morph_to_const(op, fold_int_op(op.op, op.pred, *a, *b));
        changed = true;
        ++rewrites;
        return;
      }
      default:
        return;
    }
  });
  return changed;
}

inline bool fold_selects_once(Function &f, size_t &rewrites) {
  DefIndex index(f);
  bool changed = false;
  walk_ops(f, [&](Operation &op) {
    if (changed || op.op != Op::Select) return;
    auto c = index.const_value(op.operands[0]);
    if (!c) return;
    replace_all_uses(f, op.results[0], op.operands[c->bits ? 1 : 2]);
    changed = true;
    ++rewrites;
  });
  return changed;
}

inline bool fold_ifs_once(Function &f, size_t &rewrites) {
  DefIndex index(f);
  Operation *target = nullptr;
  bool take_then = false;
  walk_ops(f, [&](Operation &op) {
    if (target || op.op != Op::If) return;
    auto c = index.const_value(op.operands[0]);
    if (!c) return;
    target = &op;
    take_then = c->bits != 0;
  });
  if (!target) return false;
  auto [block, pos] = index.position.at(target);

  std::vector<Operation> splice;
  std::vector<ValueId> yielded;
  if (take_then || target->regions.size() > 1) {
    Block &region = target->regions[take_then ? 0 : 1];
    if (!region.ops.empty() && region.ops.back().op == Op::Yield)
      yielded = region.ops.back().operands;
    for (auto &op : region.ops)
      if (op.op != Op::Yield) splice.push_back(std::move(op));
  }
  std::vector<ValueId> results = target->results;
  block->ops.erase(block->ops.begin() + static_cast<long>(pos));
  block->ops.insert(block->ops.begin() + static_cast<long>(pos),
                    std::make_move_iterator(splice.begin()),
                    std::make_move_iterator(splice.end()));
  for (size_t i = 0; i < results.size() && i < yielded.size(); ++i)
    replace_all_uses(f, results[i], yielded[i]);
  ++rewrites;
  return true;
}

inline void fold_to_fixpoint(Function &f, size_t &rewrites) {
  // constant-propagate -> select-fold -> if-fold -> DCE, capped.
  for (int round = 0; round < 100; ++round) {
    bool changed = false;
    while (fold_constants_once(f, rewrites)) changed = true;
    while (fold_selects_once(f, rewrites)) changed = true;
    while (fold_ifs_once(f, rewrites)) changed = true;
    dead_code_eliminate(f);
    if (!changed) break;
  }
}

}  // namespace detail

inline void specialize_control_impl(Function &f, const Descriptor &d,
                                    PassReport &report) {
  size_t pinned = 0;
  for (const auto &[key, vals] : d.fixed_controls) {
    if (auto arg = f.find_arg(key)) {
      pinned += detail::pin_control_arg(f, *arg, vals);
      continue;
    }
    if (const EncodingField *field = d.find_field(key)) {
      if (auto reg = f.find_arg(field->arg); reg && !vals.empty())
        pinned += detail::pin_encoding_field(f, *reg, *field, vals[0]);
      continue;
    }
    // Key absent from this function; group-level presence is checked by the
    // module verifier before the pipeline runs.
  }
  report.rewrites += pinned;
  if (pinned > 0) detail::fold_to_fixpoint(f, report.rewrites);
}

}  // namespace passes

inline std::pair<Function, PassReport> specialize_control(const Function &f,
                                                          const Descriptor &d) {
  Function out = f;
  PassReport report;
  report.pass = "specialize-control";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::specialize_control_impl(out, d, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

}  // namespace atlaas
