#pragma once

#include <optional>

#include "atlaas/passes/common.hpp"

namespace atlaas {
namespace passes {

// ---------------------------------------------------------------------------
// reconstruct-loops: reroll unrolled reduction chains into scf.for.
//
// Two chain families are recognized, both requiring stride-1 constant element
// indices 0..n-1 and chain length >= 2:
//   MAC chains:  acc_k = addi(mul(cast(A[k]), cast(B[k])), acc_{k-1}),
//                found via the atlaas.mac annotations;
//   max chains:  m_k = select(cmpi sgt(m_{k-1}, A[k]), m_{k-1}, A[k]).
// Anything else passes through untouched.
// ---------------------------------------------------------------------------

namespace detail {

struct CastSig {
  Op op;
  unsigned width;
  friend bool operator==(const CastSig &, const CastSig &) = default;
};

struct MacStep {
  Operation *add = nullptr;
  MacInfo info;
  Operation *lhs_load = nullptr;
  Operation *rhs_load = nullptr;
  std::vector<CastSig> lhs_casts, rhs_casts;  // from mul operand down to load
  Operation *mul = nullptr;
  bool acc_first = false;
  int64_t index = -1;
};

struct MacChain {
  std::vector<MacStep> steps;
  Block *block = nullptr;
  ValueId lhs_mem = kInvalidValue, rhs_mem = kInvalidValue;
};

inline std::optional<int64_t> single_const_index(const Function &f,
                                                 const DefIndex &index,
                                                 const Operation *load,
                                                 size_t mem_at) {
  (void)f;
  if (load->operands.size() != mem_at + 2) return std::nullopt;  // rank 1 only
  auto c = index.const_value(load->operands[mem_at + 1]);
  if (!c) return std::nullopt;
  return static_cast<int64_t>(c->to_signed());
}

// Walks mul operand -> ... -> load, recording the cast signature.
inline Operation *trace_to_load(const Function &f, const DefIndex &index,
                                ValueId from, ValueId expected_root,
                                std::vector<CastSig> &sig) {
  ValueId v = from;
  for (;;) {
    Operation *op = index.def_op(v);
    if (!op) return nullptr;
    if (is_cast(op->op)) {
      sig.push_back(CastSig{op->op, f.type_of(op->results[0]).width});
      if (index.use_count(op->results[0]) != 1) return nullptr;
      v = op->operands[0];
      continue;
    }
    if (op->op == Op::Load && v == expected_root) return op;
    return nullptr;
  }
}

inline std::optional<MacStep> analyze_mac_step(const Function &f,
                                               const DefIndex &index,
                                               Operation *add) {
  auto info = decode_mac(f, *add);
  if (!info) return std::nullopt;
  MacStep step;
  step.add = add;
  step.info = *info;
  step.acc_first = add->operands[0] == info->acc;
  ValueId mul_side = add->operands[step.acc_first ? 1 : 0];
  Operation *mul = index.def_op(skip_casts(index, mul_side), Op::Muli);
  if (!mul || mul_side != mul->results[0]) return std::nullopt;  // direct only
  if (index.use_count(mul->results[0]) != 1) return std::nullopt;
  step.mul = mul;
  step.lhs_load =
      trace_to_load(f, index, mul->operands[0], info->lhs, step.lhs_casts);
  step.rhs_load =
      trace_to_load(f, index, mul->operands[1], info->rhs, step.rhs_casts);
  if (!step.lhs_load || !step.rhs_load) return std::nullopt;
  if (index.use_count(step.lhs_load->results[0]) != 1 ||
      index.use_count(step.rhs_load->results[0]) != 1)
    return std::nullopt;
  auto li = single_const_index(f, index, step.lhs_load, 0);
  auto ri = single_const_index(f, index, step.rhs_load, 0);
  if (!li || !ri || *li != *ri) return std::nullopt;
  step.index = *li;
  return step;
}

inline std::optional<MacChain> find_mac_chain(Function &f, DefIndex &index) {
  // Map from mac-add result to its analyzed step.
  std::map<ValueId, MacStep> steps;
  std::map<ValueId, ValueId> next_of_acc;  // acc value -> add result
  walk_ops(f, [&](Operation &op) {
    if (op.op != Op::Addi) return;
    if (auto step = analyze_mac_step(f, index, &op)) {
      steps[op.results[0]] = *step;
      next_of_acc[step->info.acc] = op.results[0];
    }
  });
  for (auto &[result, head] : steps) {
    if (steps.count(head.info.acc)) continue;  // not a chain head
    MacChain chain;
    chain.block = index.position.at(head.add).first;
    ValueId cur = result;
    for (;;) {
      const MacStep &s = steps.at(cur);
      chain.steps.push_back(s);
      auto next = next_of_acc.find(cur);
      if (next == next_of_acc.end()) break;
      // Intermediate accumulators must feed the next step and nothing else.
      if (index.use_count(cur) != 1) break;
      if (index.position.at(steps.at(next->second).add).first != chain.block)
        break;
      cur = next->second;
    }
    if (chain.steps.size() < 2) continue;
    // Validate uniform structure and stride-1 indices from 0.
    const MacStep &first = chain.steps[0];
    chain.lhs_mem = first.lhs_load->operands[0];
    chain.rhs_mem = first.rhs_load->operands[0];
    bool ok = true;
    for (size_t k = 0; k < chain.steps.size(); ++k) {
      const MacStep &s = chain.steps[k];
      ok &= s.index == static_cast<int64_t>(k);
      ok &= s.lhs_load->operands[0] == chain.lhs_mem;
      ok &= s.rhs_load->operands[0] == chain.rhs_mem;
      ok &= s.lhs_casts == first.lhs_casts && s.rhs_casts == first.rhs_casts;
      ok &= s.acc_first == first.acc_first;
      ok &= index.position.at(s.add).first == chain.block;
    }
    // The chain must cover every load of these indices, i.e. the memrefs'
    // element count is irrelevant but the trip count equals the chain length.
    if (ok) return chain;
  }
  return std::nullopt;
}

inline void reroll_mac_chain(Function &f, DefIndex &index,
                             const MacChain &chain) {
  const MacStep &first = chain.steps[0];
  Operation *last_add = chain.steps.back().add;
  ValueId init = first.info.acc;
  Type acc_t = f.type_of(last_add->results[0]);
  int64_t n = static_cast<int64_t>(chain.steps.size());

  Operation loop;
  loop.op = Op::For;
  loop.lower = 0;
  loop.upper = n;
  loop.step = 1;
  loop.operands = {init};
  ValueId result = f.fresh_value("dot", acc_t);
  loop.results = {result};
  loop.regions.emplace_back();
  Block &body = loop.regions[0];
  ValueId iv = f.fresh_value("i", Type::index());
  ValueId iter = f.fresh_value("acc_iter", acc_t);
  body.args = {iv, iter};

  auto emit_stream = [&](ValueId mem, const std::vector<CastSig> &casts,
                         std::string_view hint) {
    Operation load;
    load.op = Op::Load;
    load.operands = {mem, iv};
    ValueId lv = f.fresh_value(hint, Type::integer(f.type_of(mem).width));
    load.results = {lv};
    body.ops.push_back(std::move(load));
    ValueId cur = lv;
    for (auto it = casts.rbegin(); it != casts.rend(); ++it) {
      Operation cast;
      cast.op = it->op;
      cast.operands = {cur};
      cur = f.fresh_value(std::string(hint) + "_w", Type::integer(it->width));
      cast.results = {cur};
      body.ops.push_back(std::move(cast));
    }
    return std::make_pair(lv, cur);
  };
  auto [lhs_elem, lhs_val] = emit_stream(chain.lhs_mem, first.lhs_casts, "a");
  auto [rhs_elem, rhs_val] = emit_stream(chain.rhs_mem, first.rhs_casts, "b");

  Operation mul;
  mul.op = Op::Muli;
  mul.operands = {lhs_val, rhs_val};
  ValueId prod = f.fresh_value("prod", acc_t);
  mul.results = {prod};
  body.ops.push_back(std::move(mul));

  Operation add;
  add.op = Op::Addi;
  add.operands = first.acc_first ? std::vector<ValueId>{iter, prod}
                                 : std::vector<ValueId>{prod, iter};
  ValueId sum = f.fresh_value("sum", acc_t);
  add.results = {sum};
  MacInfo body_mac{lhs_elem, rhs_elem, iter,
                   f.type_of(lhs_elem).width, f.type_of(rhs_elem).width};
  add.attrs[ann::kMac] = encode_mac(f, body_mac);
  body.ops.push_back(std::move(add));

  Operation yield;
  yield.op = Op::Yield;
  yield.operands = {sum};
  body.ops.push_back(std::move(yield));

  insert_before(*chain.block, last_add, std::move(loop));
  replace_all_uses(f, last_add->results[0], result);
}

struct MaxStep {
  Operation *sel = nullptr;
  Operation *cmp = nullptr;
  Operation *load = nullptr;
  ValueId acc = kInvalidValue;
  int64_t index = -1;
};

struct MaxChain {
  std::vector<MaxStep> steps;
  Block *block = nullptr;
  ValueId mem = kInvalidValue;
};

inline std::optional<MaxStep> analyze_max_step(const Function &f,
                                               const DefIndex &index,
                                               Operation *sel) {
  if (sel->op != Op::Select) return std::nullopt;
  Operation *cmp = index.def_op(sel->operands[0], Op::Cmpi);
  if (!cmp || cmp->pred != CmpPred::Sgt) return std::nullopt;
  if (index.use_count(cmp->results[0]) != 1) return std::nullopt;
  if (sel->operands[1] != cmp->operands[0] ||
      sel->operands[2] != cmp->operands[1])
    return std::nullopt;
  Operation *load = index.def_op(cmp->operands[1], Op::Load);
  if (!load) return std::nullopt;
  if (index.use_count(load->results[0]) != 2) return std::nullopt;
  MaxStep step;
  step.sel = sel;
  step.cmp = cmp;
  step.load = load;
  step.acc = cmp->operands[0];
  auto idx = single_const_index(f, index, load, 0);
  if (!idx) return std::nullopt;
  step.index = *idx;
  return step;
}

inline std::optional<MaxChain> find_max_chain(Function &f, DefIndex &index) {
  std::map<ValueId, MaxStep> steps;
  std::map<ValueId, ValueId> next_of_acc;
  walk_ops(f, [&](Operation &op) {
    if (auto step = analyze_max_step(f, index, &op)) {
      steps[op.results[0]] = *step;
      next_of_acc[step->acc] = op.results[0];
    }
  });
  for (auto &[result, head] : steps) {
    if (steps.count(head.acc)) continue;
    MaxChain chain;
    chain.block = index.position.at(head.sel).first;
    ValueId cur = result;
    for (;;) {
      const MaxStep &s = steps.at(cur);
      chain.steps.push_back(s);
      auto next = next_of_acc.find(cur);
      if (next == next_of_acc.end()) break;
      // An intermediate maximum feeds exactly the next step's cmpi + select.
      if (index.use_count(cur) != 2) break;
      if (index.position.at(steps.at(next->second).sel).first != chain.block)
        break;
      cur = next->second;
    }
    if (chain.steps.size() < 2) continue;
    chain.mem = chain.steps[0].load->operands[0];
    bool ok = true;
    for (size_t k = 0; k < chain.steps.size(); ++k) {
      const MaxStep &s = chain.steps[k];
      ok &= s.index == static_cast<int64_t>(k);
      ok &= s.load->operands[0] == chain.mem;
      ok &= index.position.at(s.sel).first == chain.block;
    }
    if (ok) return chain;
  }
  return std::nullopt;
}

inline void reroll_max_chain(Function &f, DefIndex &index,
                             const MaxChain &chain) {
  Operation *last = chain.steps.back().sel;
  ValueId init = chain.steps[0].acc;
  Type elem_t = f.type_of(last->results[0]);
  int64_t n = static_cast<int64_t>(chain.steps.size());

  Operation loop;
  loop.op = Op::For;
  loop.lower = 0;
  loop.upper = n;
  loop.step = 1;
  loop.operands = {init};
  ValueId result = f.fresh_value("max", elem_t);
  loop.results = {result};
  loop.regions.emplace_back();
  Block &body = loop.regions[0];
  ValueId iv = f.fresh_value("i", Type::index());
  ValueId iter = f.fresh_value("max_iter", elem_t);
  body.args = {iv, iter};

  Operation load;
  load.op = Op::Load;
  load.operands = {chain.mem, iv};
  ValueId elem = f.fresh_value("elem", Type::integer(f.type_of(chain.mem).width));
  load.results = {elem};
  body.ops.push_back(std::move(load));

  Operation cmp;
  cmp.op = Op::Cmpi;
  cmp.pred = CmpPred::Sgt;
  cmp.operands = {iter, elem};
  ValueId cond = f.fresh_value("gt", Type::integer(1));
  cmp.results = {cond};
  body.ops.push_back(std::move(cmp));

  Operation sel;
  sel.op = Op::Select;
  sel.operands = {cond, iter, elem};
  ValueId best = f.fresh_value("best", elem_t);
  sel.results = {best};
  body.ops.push_back(std::move(sel));

  Operation yield;
  yield.op = Op::Yield;
  yield.operands = {best};
  body.ops.push_back(std::move(yield));

  insert_before(*chain.block, last, std::move(loop));
  replace_all_uses(f, last->results[0], result);
}

}  // namespace detail

inline void reconstruct_loops_impl(Function &f, PassReport &report) {
  for (;;) {
    DefIndex index(f);
    if (auto chain = detail::find_mac_chain(f, index)) {
      detail::reroll_mac_chain(f, index, *chain);
      dead_code_eliminate(f);
      ++report.rewrites;
      continue;
    }
    if (auto chain = detail::find_max_chain(f, index)) {
      detail::reroll_max_chain(f, index, *chain);
      dead_code_eliminate(f);
      ++report.rewrites;
      continue;
    }
    break;
  }
}

// ---------------------------------------------------------------------------
// lift-to-linalg: tag loops matching the canonical reduction shapes.
// ---------------------------------------------------------------------------

namespace detail {

inline bool defined_in(const Block &b, ValueId v) {
  for (ValueId a : b.args)
    if (a == v) return true;
  bool found = false;
  walk_ops(b, [&](const Operation &op) {
    for (ValueId r : op.results) found |= r == v;
  });
  return found;
}

inline const Operation *body_def(const Block &b, ValueId v) {
  for (const auto &op : b.ops)
    for (ValueId r : op.results)
      if (r == v) return &op;
  return nullptr;
}

// load at the induction variable from a memref defined outside the loop
inline const Operation *loop_elem_load(const Block &body, ValueId v,
                                       ValueId iv) {
  const Operation *load = body_def(body, v);
  if (!load || load->op != Op::Load) return nullptr;
  if (load->operands.size() != 2 || load->operands[1] != iv) return nullptr;
  if (defined_in(body, load->operands[0])) return nullptr;
  return load;
}

inline bool is_dot_shape(const Function &f, const Operation &loop) {
  if (loop.operands.size() != 1 || loop.lower != 0 || loop.step != 1)
    return false;
  const Block &body = loop.regions[0];
  ValueId iv = body.args[0];
  ValueId iter = body.args[1];
  const Operation *yield = body.ops.empty() ? nullptr : &body.ops.back();
  if (!yield || yield->op != Op::Yield || yield->operands.size() != 1)
    return false;
  const Operation *add = body_def(body, yield->operands[0]);
  if (!add || add->op != Op::Addi) return false;
  ValueId mul_side;
  if (add->operands[0] == iter)
    mul_side = add->operands[1];
  else if (add->operands[1] == iter)
    mul_side = add->operands[0];
  else
    return false;
  const Operation *mul = body_def(body, mul_side);
  if (!mul || mul->op != Op::Muli) return false;
  size_t cast_count = 0;
  const Operation *loads[2] = {nullptr, nullptr};
  for (int side = 0; side < 2; ++side) {
    ValueId v = mul->operands[side];
    for (;;) {
      const Operation *op = body_def(body, v);
      if (op && is_cast(op->op)) {
        ++cast_count;
        v = op->operands[0];
        continue;
      }
      break;
    }
    loads[side] = loop_elem_load(body, v, iv);
    if (!loads[side]) return false;
  }
  (void)f;
  // Exactly the matched operations and nothing else.
  size_t expected = 2 /*loads*/ + cast_count + 1 /*mul*/ + 1 /*add*/ + 1;
  return body.ops.size() == expected;
}

inline bool is_max_reduce_shape(const Function &f, const Operation &loop) {
  if (loop.operands.size() != 1 || loop.lower != 0 || loop.step != 1)
    return false;
  const Block &body = loop.regions[0];
  ValueId iv = body.args[0];
  ValueId iter = body.args[1];
  const Operation *yield = body.ops.empty() ? nullptr : &body.ops.back();
  if (!yield || yield->op != Op::Yield || yield->operands.size() != 1)
    return false;
  const Operation *sel = body_def(body, yield->operands[0]);
  if (!sel || sel->op != Op::Select) return false;
  const Operation *cmp = body_def(body, sel->operands[0]);
  if (!cmp || cmp->op != Op::Cmpi || cmp->pred != CmpPred::Sgt) return false;
  if (cmp->operands[0] != iter || sel->operands[1] != iter ||
      sel->operands[2] != cmp->operands[1])
    return false;
  if (!loop_elem_load(body, cmp->operands[1], iv)) return false;
  (void)f;
  return body.ops.size() == 4;
}

}  // namespace detail

inline void lift_to_linalg_impl(Function &f, PassReport &report) {
  walk_ops(f, [&](Operation &op) {
    if (op.op != Op::For) return;
    const char *tag = nullptr;
    if (detail::is_dot_shape(f, op))
      tag = "dot_product";
    else if (detail::is_max_reduce_shape(f, op))
      tag = "max_reduce";
    if (!tag) return;
    AnnValue v = std::string(tag);
    auto it = op.attrs.find(ann::kLinalgOp);
    if (it == op.attrs.end() || !(it->second == v)) {
      op.attrs[ann::kLinalgOp] = std::move(v);
      ++report.annotations_added;
    }
  });
}

}  // namespace passes

inline std::pair<Function, PassReport> reconstruct_loops(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "reconstruct-loops";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::reconstruct_loops_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

inline std::pair<Function, PassReport> lift_to_linalg(const Function &f) {
  Function out = f;
  PassReport report;
  report.pass = "lift-to-linalg";
  report.function = f.name;
  report.ops_before = count_ops(f);
  passes::lift_to_linalg_impl(out, report);
  report.ops_after = count_ops(out);
  return {std::move(out), std::move(report)};
}

}  // namespace atlaas
