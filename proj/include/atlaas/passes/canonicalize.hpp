#pragma once

#include <optional>

#include "atlaas/passes/common.hpp"

namespace atlaas {
namespace passes {

// ---------------------------------------------------------------------------
// canon-bitmanip: collapse widening idioms into a single extsi.
//
// Form 1, the per-bit chain a netlist emits for a $signed context:
//   %z  = extui %x : iW to iV
//   %or = ori(... ori(%z, shli(extui(select(msb(x), 1, 0)), W)) ..., shli(.., V-1))
//   with msb(x) = trunci(shrui(%x, W-1)) : i1
// Form 2, the arithmetic pair:
//   %r = shrsi(shli(extui(%x : iW to iV), V-W), V-W)
// ---------------------------------------------------------------------------

namespace detail {

struct ExtMatch {
  Operation *root;      // op whose result becomes extsi(x)
  ValueId source;       // x
  unsigned to_width;    // V
};

// Validates one per-bit step: ori(prev, shli(extui(select(msb,1,0)), k)).
// Returns the `prev` value and the step's bit position.
inline std::optional<std::pair<ValueId, uint64_t>> match_perbit_step(
    const DefIndex &index, Operation *ori, ValueId msb, ValueId source) {
  for (int side = 0; side < 2; ++side) {
    ValueId prev = ori->operands[side ^ 1];
    Operation *shli = index.def_op(ori->operands[side], Op::Shli);
    if (!shli) continue;
    auto pos = index.const_value(shli->operands[1]);
    if (!pos) continue;
    Operation *wide = index.def_op(shli->operands[0], Op::Extui);
    if (!wide) continue;
    Operation *sel = index.def_op(wide->operands[0], Op::Select);
    if (!sel || sel->operands[0] != msb) continue;
    auto one = index.const_value(sel->operands[1]);
    auto zero = index.const_value(sel->operands[2]);
    if (!one || !zero || one->bits != 1 || zero->bits != 0) continue;
    (void)source;
    return std::make_pair(prev, static_cast<uint64_t>(pos->bits));
  }
  return std::nullopt;
}

inline std::optional<ExtMatch> match_perbit_chain(Function &f,
                                                  const DefIndex &index,
                                                  Operation *root) {
  if (root->op != Op::Ori) return std::nullopt;
  unsigned v = f.type_of(root->results[0]).width;

  // Find the msb bit from any step, then walk the whole chain against it.
  Operation *probe_shli = nullptr;
  for (int side = 0; side < 2; ++side)
    if (Operation *s = index.def_op(root->operands[side], Op::Shli))
      probe_shli = s;
  if (!probe_shli) return std::nullopt;
  Operation *probe_wide = index.def_op(probe_shli->operands[0], Op::Extui);
  if (!probe_wide) return std::nullopt;
  Operation *probe_sel = index.def_op(probe_wide->operands[0], Op::Select);
  if (!probe_sel) return std::nullopt;
  ValueId msb = probe_sel->operands[0];

  // msb must be trunci(shrui(x, W-1)) : i1.
  Operation *msb_trunc = index.def_op(msb, Op::Trunci);
  if (!msb_trunc || f.type_of(msb_trunc->results[0]).width != 1)
    return std::nullopt;
  Operation *msb_shift = index.def_op(msb_trunc->operands[0], Op::Shrui);
  if (!msb_shift) return std::nullopt;
  ValueId source = msb_shift->operands[0];
  unsigned w = f.type_of(source).width;
  if (w < 2 || w >= v) return std::nullopt;
  auto shift_amt = index.const_value(msb_shift->operands[1]);
  if (!shift_amt || shift_amt->bits != w - 1) return std::nullopt;

  // Walk ori steps from the root down to the base extui, collecting the bit
  // positions; they must cover [W, V) exactly.
  std::vector<bool> seen(v, false);
  ValueId cur = root->results[0];
  for (;;) {
    Operation *op = index.def_op(cur);
    if (!op) return std::nullopt;
    if (op->op == Op::Extui) {
      if (op->operands[0] != source ||
          f.type_of(op->results[0]).width != v)
        return std::nullopt;
      break;
    }
    if (op->op != Op::Ori) return std::nullopt;
    auto step = match_perbit_step(index, op, msb, source);
    if (!step) return std::nullopt;
    uint64_t k = step->second;
    if (k < w || k >= v || seen[k]) return std::nullopt;
    seen[k] = true;
    cur = step->first;
  }
  for (unsigned k = w; k < v; ++k)
    if (!seen[k]) return std::nullopt;
  return ExtMatch{root, source, v};
}

inline std::optional<ExtMatch> match_shift_pair(Function &f,
                                                const DefIndex &index,
                                                Operation *root) {
  if (root->op != Op::Shrsi) return std::nullopt;
  auto down = index.const_value(root->operands[1]);
  if (!down) return std::nullopt;
  Operation *shl = index.def_op(root->operands[0], Op::Shli);
  if (!shl) return std::nullopt;
  auto up = index.const_value(shl->operands[1]);
  if (!up || up->bits != down->bits) return std::nullopt;
  Operation *wide = index.def_op(shl->operands[0], Op::Extui);
  if (!wide) return std::nullopt;
  ValueId source = wide->operands[0];
  unsigned w = f.type_of(source).width;
  unsigned v = f.type_of(root->results[0]).width;
  if (w >= v || up->bits != v - w) return std::nullopt;
  return ExtMatch{root, source, v};
}

}  // namespace detail

inline void canon_bitmanip_impl(Function &f, PassReport &report) {
  for (;;) {
    DefIndex index(f);
    std::optional<detail::ExtMatch> match;
    walk_ops(f, [&](Operation &op) {
      if (match) return;
      if (auto m = detail::match_perbit_chain(f, index, &op))
        match = m;
      else if (auto m2 = detail::match_shift_pair(f, index, &op))
        match = m2;
    });
    if (!match) break;
    Operation ext;
    ext.op = Op::Extsi;
    ext.operands = {match->source};
    ValueId r = f.fresh_value("sext", Type::integer(match->to_width));
    ext.results = {r};
    Block *block = index.position.at(match->root).first;
    insert_before(*block, match->root, std::move(ext));
    replace_all_uses(f, match->root->results[0], r);
    ++report.rewrites;
    dead_code_eliminate(f);
  }
}

// ---------------------------------------------------------------------------
// narrow-types: fold redundant width round trips left after canonicalization.
// Folds trunci(ext(x)) back to x when the widths round-trip exactly, and
// ext-of-ext into one cast. ext(trunci(x)) is left alone: that shape is the
// saturation idiom a later pass recovers.
// ---------------------------------------------------------------------------

inline void narrow_types_impl(Function &f, PassReport &report) {
  for (int guard = 0; guard < 1000; ++guard) {
    DefIndex index(f);
    bool changed = false;
    walk_ops(f, [&](Operation &op) {
      if (changed) return;
      if (op.op == Op::Trunci) {
        Operation *inner = index.def_op(op.operands[0]);
        if (inner && (inner->op == Op::Extsi || inner->op == Op::Extui)) {
          ValueId x = inner->operands[0];
          if (f.type_of(op.results[0]).width == f.type_of(x).width) {
            replace_all_uses(f, op.results[0], x);
            changed = true;
            ++report.rewrites;
          }
        }
        return;
      }
      if (op.op == Op::Extsi || op.op == Op::Extui) {
        Operation *inner = index.def_op(op.operands[0]);
        if (!inner) return;
        if (inner->op == Op::Extsi && op.op == Op::Extsi) {
          op.operands[0] = inner->operands[0];
          changed = true;
          ++report.rewrites;
        } else if (inner->op == Op::Extui) {
          // extui(extui(x)) == extui(x); extsi(extui(x)) == extui(x) since
          // the zero-extended intermediate has a clear sign bit.
          op.op = Op::Extui;
          op.operands[0] = inner->operands[0];
          changed = true;
          ++report.rewrites;
        }
      }
    });
    if (!changed) break;
    dead_code_eliminate(f);
  }
}

}  // namespace passes

inline std::pair<Function, PassReport> canon_bitmanip(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "canon-bitmanip";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::canon_bitmanip_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

inline std::pair<Function, PassReport> narrow_types(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "narrow-types";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::narrow_types_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

}  // namespace atlaas
