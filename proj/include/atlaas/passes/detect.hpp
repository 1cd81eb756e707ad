#pragma once

#include <optional>

#include "atlaas/passes/common.hpp"

namespace atlaas {
namespace passes {

// ---------------------------------------------------------------------------
// detect-mac: walk each addi back through width casts to a multiplier and
// recover the pre-extension inputs. Operand widths above the bound are
// bit-packing composites, not datapath MACs, and are skipped.
// ---------------------------------------------------------------------------

inline void detect_mac_impl(Function &f, unsigned width_bound,
                            PassReport &report) {
  DefIndex index(f);
  walk_ops(f, [&](Operation &op) {
    if (op.op != Op::Addi) return;
    Operation *mul = nullptr;
    ValueId acc = kInvalidValue;
    for (int side = 0; side < 2; ++side) {
      ValueId root = skip_casts(index, op.operands[side]);
      if (Operation *m = index.def_op(root, Op::Muli)) {
        if (mul) return;  // both sides multiply: ambiguous, skip
        mul = m;
        acc = op.operands[side ^ 1];
      }
    }
    if (!mul) return;
    MacInfo info;
    info.lhs = skip_casts(index, mul->operands[0]);
    info.rhs = skip_casts(index, mul->operands[1]);
    info.acc = acc;
    const Type &lt = f.type_of(info.lhs);
    const Type &rt = f.type_of(info.rhs);
    if (!lt.is_int() || !rt.is_int()) return;
    info.lhs_width = lt.width;
    info.rhs_width = rt.width;
    if (info.lhs_width > width_bound || info.rhs_width > width_bound) return;
    AnnValue encoded = encode_mac(f, info);
    auto it = op.attrs.find(ann::kMac);
    if (it == op.attrs.end() || !(it->second == encoded)) {
      op.attrs[ann::kMac] = std::move(encoded);
      ++report.annotations_added;
    }
  });
}

// ---------------------------------------------------------------------------
// detect-clamp: tag both saturation surface forms with the recovered range.
//   ext(trunci(x : iV -> iw))              modular wrap-back idiom
//   select(v > HI, HI, select(v < LO, LO, v))   true min/max saturation
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<ClampInfo> match_ext_of_trunc(const Function &f,
                                                   const DefIndex &index,
                                                   const Operation &op) {
  if (op.op != Op::Extsi && op.op != Op::Extui) return std::nullopt;
  Operation *tr = index.def_op(op.operands[0], Op::Trunci);
  if (!tr) return std::nullopt;
  unsigned w = f.type_of(tr->results[0]).width;
  if (w > 63) return std::nullopt;  // range must fit the annotation payload
  ClampInfo c;
  c.narrow_width = w;
  c.is_signed = op.op == Op::Extsi;
  if (c.is_signed) {
    c.lo = -(int64_t{1} << (w - 1));
    c.hi = (int64_t{1} << (w - 1)) - 1;
  } else {
    c.lo = 0;
    c.hi = (int64_t{1} << w) - 1;
  }
  return c;
}

// Returns true when v == 2^(k-1)-1 (signed) for some narrower k, writing k.
inline bool is_signed_max(s128 v, unsigned max_width, unsigned &k) {
  for (unsigned w = 2; w < max_width && w <= 63; ++w)
    if (v == (s128{1} << (w - 1)) - 1) {
      k = w;
      return true;
    }
  return false;
}

inline bool is_unsigned_max(s128 v, unsigned max_width, unsigned &k) {
  for (unsigned w = 1; w < max_width && w <= 63; ++w)
    if (v == (s128{1} << w) - 1) {
      k = w;
      return true;
    }
  return false;
}

inline std::optional<ClampInfo> match_minmax(const Function &f,
                                             const DefIndex &index,
                                             const Operation &op) {
  if (op.op != Op::Select) return std::nullopt;
  Operation *cmp = index.def_op(op.operands[0], Op::Cmpi);
  if (!cmp) return std::nullopt;
  unsigned width = f.type_of(cmp->operands[0]).width;

  if (cmp->pred == CmpPred::Sgt) {
    // select(cmpi sgt v, HI; HI; inner)
    auto hi = index.const_value(cmp->operands[1]);
    if (!hi || op.operands[1] != cmp->operands[1]) return std::nullopt;
    ValueId v = cmp->operands[0];
    unsigned k = 0;
    if (!is_signed_max(hi->to_signed(), width, k)) return std::nullopt;
    Operation *inner = index.def_op(op.operands[2], Op::Select);
    if (!inner) return std::nullopt;
    Operation *cmp_lo = index.def_op(inner->operands[0], Op::Cmpi);
    if (!cmp_lo || cmp_lo->pred != CmpPred::Slt) return std::nullopt;
    if (cmp_lo->operands[0] != v) return std::nullopt;
    auto lo = index.const_value(cmp_lo->operands[1]);
    if (!lo || inner->operands[1] != cmp_lo->operands[1] ||
        inner->operands[2] != v)
      return std::nullopt;
    if (lo->to_signed() != -(s128{1} << (k - 1))) return std::nullopt;
    ClampInfo c;
    c.is_signed = true;
    c.narrow_width = k;
    c.lo = static_cast<int64_t>(lo->to_signed());
    c.hi = static_cast<int64_t>(hi->to_signed());
    return c;
  }
  if (cmp->pred == CmpPred::Ugt) {
    // select(cmpi ugt v, HI; HI; v) — an unsigned value needs no lower arm.
    auto hi = index.const_value(cmp->operands[1]);
    if (!hi || op.operands[1] != cmp->operands[1] ||
        op.operands[2] != cmp->operands[0])
      return std::nullopt;
    unsigned k = 0;
    if (!is_unsigned_max(static_cast<s128>(hi->bits), width, k))
      return std::nullopt;
    ClampInfo c;
    c.is_signed = false;
    c.narrow_width = k;
    c.lo = 0;
    c.hi = static_cast<int64_t>(hi->bits);
    return c;
  }
  return std::nullopt;
}

}  // namespace detail

inline void detect_clamp_impl(Function &f, PassReport &report) {
  DefIndex index(f);
  walk_ops(f, [&](Operation &op) {
    std::optional<ClampInfo> c = detail::match_ext_of_trunc(f, index, op);
    if (!c) c = detail::match_minmax(f, index, op);
    if (!c) return;
    AnnValue encoded = encode_clamp(*c);
    auto it = op.attrs.find(ann::kClamp);
    if (it == op.attrs.end() || !(it->second == encoded)) {
      op.attrs[ann::kClamp] = std::move(encoded);
      ++report.annotations_added;
    }
  });
}

}  // namespace passes

inline std::pair<Function, PassReport> detect_mac(const Function &f,
                                                  unsigned width_bound = 32) {
  Function out = f;
  PassReport report;
  report.pass = "detect-mac";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::detect_mac_impl(out, width_bound, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

inline std::pair<Function, PassReport> detect_clamp(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "detect-clamp";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::detect_clamp_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

}  // namespace atlaas
