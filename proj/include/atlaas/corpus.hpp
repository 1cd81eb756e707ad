#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "atlaas/expectations.hpp"
#include "atlaas/ir.hpp"

namespace atlaas {

/// Parameters for one synthetic accelerator design. The generator emits the
/// same IR shape a symbolic RTL extraction produces: per-(instruction, ASV)
/// functions, bit-level idioms, signal names as metadata, packed input time
/// series, and instruction descriptors.
struct DesignSpec {
  enum class Kind { Pe, MacChain, DmaCopy, Pool, FsmPair };

  Kind kind = Kind::Pe;
  int input_width = 8;    // W: multiplier input width
  int acc_width = 32;     // V: accumulator width
  int out_width = 8;      // w: clamped output width
  int chain_length = 16;  // mac_chain: number of unrolled MAC steps
  int vector_length = 2;  // dma_copy: elements moved per instruction
  int banks = 3;          // dma_copy: stride register banks
  int window = 4;         // pool: reduction window
  bool relu = false;      // pe: emit a mux-gated ReLU stage
  uint64_t seed = 0;

  // seed bit 0 picks the sign-extension surface form (per-bit chain vs
  // arithmetic shift pair); bit 1 picks the clamp surface form (ext(trunci)
  // vs compare/select min/max chain).
  bool perbit_extension() const { return (seed & 1) == 0; }
  bool idiom_clamp() const { return (seed & 2) == 0; }

  std::string kind_name() const {
    switch (kind) {
      case Kind::Pe: return "pe";
      case Kind::MacChain: return "mac_chain";
      case Kind::DmaCopy: return "dma_copy";
      case Kind::Pool: return "pool";
      case Kind::FsmPair: return "fsm_pair";
    }
    return "?";
  }

  void validate() const {
    switch (kind) {
      case Kind::Pe:
        if (input_width < 2 || input_width >= acc_width ||
            out_width >= acc_width || out_width < 2)
          throw std::invalid_argument(
              "pe requires 2 <= W < V and 2 <= w < V");
        break;
      case Kind::MacChain:
        if (chain_length < 1)
          throw std::invalid_argument("mac_chain requires n >= 1");
        if (input_width < 2 || input_width >= acc_width)
          throw std::invalid_argument("mac_chain requires 2 <= W < V");
        break;
      case Kind::DmaCopy:
        if (banks < 1 || banks > 3)
          throw std::invalid_argument("dma_copy requires banks in {1,2,3}");
        if (vector_length < 1)
          throw std::invalid_argument("dma_copy requires vector_length >= 1");
        break;
      case Kind::Pool:
        if (window < 2) throw std::invalid_argument("pool requires window >= 2");
        break;
      case Kind::FsmPair:
        break;
    }
  }
};

struct GeneratedDesign {
  Module module;
  Expectations expect;
};

namespace detail {

// Per-bit sign-extension chain, the netlist form of a widening $signed
// context: zero-extend, then OR the sign bit into each upper position.
inline ValueId emit_perbit_extension(FunctionBuilder &b, ValueId x, unsigned w,
                                     unsigned v) {
  ValueId shift_amt = b.const_int(w - 1, w);
  ValueId sign_word = b.binary(Op::Shrui, x, shift_amt, "msbw");
  ValueId msb = b.trunci(sign_word, 1, "msb");
  ValueId one1 = b.const_int(1, 1);
  ValueId zero1 = b.const_int(0, 1);
  ValueId acc = b.extui(x, v, "zext");
  for (unsigned k = w; k < v; ++k) {
    ValueId bit = b.select(msb, one1, zero1, "bit");
    ValueId wide = b.extui(bit, v, "bitw");
    ValueId pos = b.const_int(static_cast<int64_t>(k), v);
    ValueId shifted = b.binary(Op::Shli, wide, pos, "sh");
    acc = b.binary(Op::Ori, acc, shifted, "or");
  }
  return acc;
}

// Arithmetic variant of the same widening: shl then ashr by (v - w).
inline ValueId emit_shift_extension(FunctionBuilder &b, ValueId x, unsigned w,
                                    unsigned v) {
  ValueId wide = b.extui(x, v, "zext");
  ValueId amt = b.const_int(static_cast<int64_t>(v - w), v);
  ValueId up = b.binary(Op::Shli, wide, amt, "shl");
  return b.binary(Op::Shrsi, up, amt, "sext_arith");
}

inline ValueId emit_extension(FunctionBuilder &b, const DesignSpec &spec,
                              ValueId x, unsigned w, unsigned v) {
  return spec.perbit_extension() ? emit_perbit_extension(b, x, w, v)
                                 : emit_shift_extension(b, x, w, v);
}

// Saturating write-back. The ext(trunci) form wraps (annotation-only idiom);
// the compare/select form genuinely saturates.
inline ValueId emit_clamp(FunctionBuilder &b, const DesignSpec &spec,
                          ValueId value, unsigned v, unsigned w) {
  if (spec.idiom_clamp()) {
    ValueId narrow = b.trunci(value, w, "narrow");
    return b.extsi(narrow, v, "clamped");
  }
  int64_t hi = (int64_t{1} << (w - 1)) - 1;
  int64_t lo = -(int64_t{1} << (w - 1));
  ValueId hi_c = b.const_int(hi, v);
  ValueId lo_c = b.const_int(lo, v);
  ValueId too_low = b.cmpi(CmpPred::Slt, value, lo_c, "too_low");
  ValueId lower = b.select(too_low, lo_c, value, "lo_clamped");
  ValueId too_high = b.cmpi(CmpPred::Sgt, value, hi_c, "too_high");
  return b.select(too_high, hi_c, lower, "clamped");
}

// Extracts descriptor field arg[hi:lo] the way a decoder netlist does.
inline ValueId emit_field_extract(FunctionBuilder &b, ValueId reg,
                                  unsigned reg_width, unsigned hi, unsigned lo,
                                  std::string_view hint) {
  ValueId amt = b.const_int(lo, reg_width);
  ValueId shifted = b.binary(Op::Shrui, reg, amt, "fsh");
  return b.trunci(shifted, hi - lo + 1, hint);
}

inline GeneratedDesign generate_pe(const DesignSpec &spec) {
  unsigned w = static_cast<unsigned>(spec.input_width);
  unsigned v = static_cast<unsigned>(spec.acc_width);
  unsigned ow = static_cast<unsigned>(spec.out_width);

  FunctionBuilder b("pe__acc");
  ValueId in_a = b.arg("in_a", Type::memref({1}, w));
  ValueId in_b = b.arg("in_b", Type::memref({1}, w));
  ValueId in_d = b.arg("in_d", Type::memref({1}, v));
  ValueId in_df = b.arg("in_control_dataflow", Type::memref({1}, 1));
  ValueId in_act = kInvalidValue;
  if (spec.relu) in_act = b.arg("in_control_act", Type::memref({1}, 1));

  ValueId i0 = b.const_index(0);
  ValueId a = b.load(in_a, {i0}, "a");
  ValueId bb = b.load(in_b, {i0}, "b");
  ValueId d = b.load(in_d, {i0}, "d");
  ValueId df = b.load(in_df, {i0}, "dataflow");

  ValueId a_wide = emit_extension(b, spec, a, w, v);
  ValueId b_wide = emit_extension(b, spec, bb, w, v);
  ValueId prod = b.binary(Op::Muli, a_wide, b_wide, "prod");
  // Weight-stationary: accumulate the travelling partial sum directly.
  ValueId ws_sum = b.binary(Op::Addi, prod, d, "ws_sum");
  // Output-stationary arm (dead under a WS descriptor): double-pumped path.
  ValueId one_v = b.const_int(1, v);
  ValueId os_shift = b.binary(Op::Shli, prod, one_v, "os_shift");
  ValueId os_sum = b.binary(Op::Addi, os_shift, d, "os_sum");
  ValueId sum = b.select(df, ws_sum, os_sum, "sum");

  ValueId clamped = emit_clamp(b, spec, sum, v, ow);
  ValueId result = clamped;
  if (spec.relu) {
    ValueId act = b.load(in_act, {i0}, "act");
    ValueId zero_v = b.const_int(0, v);
    ValueId pos = b.cmpi(CmpPred::Sgt, clamped, zero_v, "pos");
    ValueId rectified = b.select(pos, clamped, zero_v, "rectified");
    result = b.select(act, rectified, clamped, "act_sel");
  }
  b.ret(result);

  GeneratedDesign out;
  Descriptor d_pe;
  d_pe.instruction = "pe";
  d_pe.asvs = {"acc"};
  d_pe.fixed_controls["in_control_dataflow"] = {1};
  if (spec.relu) d_pe.fixed_controls["in_control_act"] = {1};
  out.module.descriptors.push_back(std::move(d_pe));
  out.module.functions.push_back(b.take());

  const Function &fn = out.module.functions[0];
  auto &e = out.expect;
  e.add("pre.pe__acc.op_count", static_cast<int64_t>(count_ops(fn)));
  e.add("pre.pe__acc.count.ori",
        spec.perbit_extension() ? 2 * (int64_t{v} - w) : 0);
  e.add("pre.pe__acc.selects_on.in_control_dataflow", 1);
  e.add("post_a1.pe__acc.count.ori", 0);
  e.add("post_a1.pe__acc.count.shrui", 0);
  e.add("post_a1.pe__acc.count.shrsi", 0);
  e.add("post_a1.pe__acc.count.extsi", 2 + (spec.idiom_clamp() ? 1 : 0));
  e.add("post_a1.pe__acc.count.select",
        1 + (spec.idiom_clamp() ? 0 : 2) + (spec.relu ? 2 : 0));
  e.add("post_b4.pe__acc.selects_on.in_control_dataflow", 0);
  e.add("post_b4.pe__acc.count.select",
        (spec.idiom_clamp() ? 0 : 2) + (spec.relu ? 1 : 0));
  {
    int64_t hi = (int64_t{1} << (ow - 1)) - 1;
    int64_t lo = -(int64_t{1} << (ow - 1));
    e.add("post_b5.pe__acc.clamp", std::to_string(lo) + "," +
                                       std::to_string(hi) + ",1," +
                                       std::to_string(ow));
    e.add("final.pe__acc.clamp_range",
          std::to_string(lo) + "," + std::to_string(hi));
  }
  e.add("post_c6.pe__acc.loop_count", 0);
  e.add("final.pe__acc.compute", "dot_product");
  int64_t final_ops = 1 + 3 + 2 + 1 + 1 + (spec.idiom_clamp() ? 2 : 6) +
                      (spec.relu ? 3 : 0) + 1;
  e.add("final.pe__acc.op_count", final_ops);
  e.add("final.pe__acc.core_ops", final_ops - 1);
  return out;
}

inline GeneratedDesign generate_mac_chain(const DesignSpec &spec) {
  unsigned w = static_cast<unsigned>(spec.input_width);
  unsigned v = static_cast<unsigned>(spec.acc_width);
  int64_t n = spec.chain_length;

  FunctionBuilder b("mac__acc");
  ValueId in_a = b.arg("in_a", Type::memref({n}, w));
  ValueId in_b = b.arg("in_b", Type::memref({n}, w));
  ValueId in_acc = b.arg("in_acc", Type::integer(v));

  ValueId acc = in_acc;
  for (int64_t k = 0; k < n; ++k) {
    ValueId idx = b.const_index(k);
    ValueId a = b.load(in_a, {idx}, "a");
    ValueId ae = b.extsi(a, v, "ae");
    ValueId x = b.load(in_b, {idx}, "b");
    ValueId xe = b.extsi(x, v, "be");
    ValueId prod = b.binary(Op::Muli, ae, xe, "prod");
    acc = b.binary(Op::Addi, prod, acc, "acc");
  }
  b.ret(acc);

  GeneratedDesign out;
  Descriptor d;
  d.instruction = "mac";
  d.asvs = {"acc"};
  out.module.descriptors.push_back(std::move(d));
  out.module.functions.push_back(b.take());

  auto &e = out.expect;
  e.add("pre.mac__acc.op_count",
        static_cast<int64_t>(count_ops(out.module.functions[0])));
  e.add("post_b3.mac__acc.count.addi", n);
  e.add("post_c6.mac__acc.loop_count", n >= 2 ? 1 : 0);
  e.add("post_c6.mac__acc.count.muli", 1);
  e.add("post_c6.mac__acc.iter_args_max", n >= 2 ? 1 : 0);
  e.add("post_c7.mac__acc.dot_loops", n >= 2 ? 1 : 0);
  e.add("final.mac__acc.compute", "dot_product");
  e.add("final.mac__acc.loop_trip", n >= 2 ? n : 0);
  e.add("final.mac__acc.op_count", n >= 2 ? 9 : 8);
  return out;
}

inline GeneratedDesign generate_dma_copy(const DesignSpec &spec) {
  int64_t len = spec.vector_length;
  int banks = spec.banks;
  GeneratedDesign out;

  // mvin: data movement into the scratchpad plus next-address computation.
  {
    FunctionBuilder b("mvin__spad");
    ValueId dram = b.arg("dram_rdata", Type::memref({len}, 8));
    ValueId spad = b.arg("spad", Type::memref({len}, 8));
    ValueId mem = spad;
    for (int64_t k = 0; k < len; ++k) {
      ValueId idx = b.const_index(k);
      ValueId val = b.load(dram, {idx}, "beat");
      mem = b.store(val, mem, {idx}, "spad_v");
    }
    b.ret(mem);
    out.module.functions.push_back(b.take());
  }
  {
    FunctionBuilder b("mvin__dram_base_addr");
    ValueId rs1 = b.arg("rs1", Type::integer(64));
    std::vector<ValueId> strides;
    for (int k = 0; k < banks; ++k)
      strides.push_back(
          b.arg("strides_" + std::to_string(k), Type::integer(64)));
    ValueId addr = b.arg("dram_base_addr", Type::integer(64));
    ValueId selected = strides.back();
    if (banks > 1) {
      ValueId bank = emit_field_extract(b, rs1, 64, 4, 3, "bank");
      for (int k = banks - 2; k >= 0; --k) {
        ValueId kk = b.const_int(k, 2);
        ValueId is_k = b.cmpi(CmpPred::Eq, bank, kk, "is_bank");
        selected = b.select(is_k, strides[k], selected, "stride_sel");
      }
    }
    ValueId next = b.binary(Op::Addi, addr, selected, "next_addr");
    b.ret(next);
    out.module.functions.push_back(b.take());
  }
  // config_mvin: bank-selected stride register file updates.
  for (int k = 0; k < banks; ++k) {
    FunctionBuilder b("config_mvin__strides_" + std::to_string(k));
    ValueId rs1 = b.arg("rs1", Type::integer(64));
    ValueId rs2 = b.arg("rs2", Type::integer(64));
    ValueId cur = b.arg("strides_" + std::to_string(k), Type::integer(64));
    ValueId bank = emit_field_extract(b, rs1, 64, 4, 3, "bank");
    ValueId kk = b.const_int(k, 2);
    ValueId hit = b.cmpi(CmpPred::Eq, bank, kk, "hit");
    ValueId next = b.select(hit, rs2, cur, "next");
    b.ret(next);
    out.module.functions.push_back(b.take());
  }

  Descriptor d_mvin;
  d_mvin.instruction = "mvin";
  d_mvin.asvs = {"spad", "dram_base_addr"};
  d_mvin.encoding.push_back(EncodingField{"bank", "rs1", 4, 3});
  out.module.descriptors.push_back(std::move(d_mvin));
  Descriptor d_cfg;
  d_cfg.instruction = "config_mvin";
  for (int k = 0; k < banks; ++k)
    d_cfg.asvs.push_back("strides_" + std::to_string(k));
  d_cfg.encoding.push_back(EncodingField{"bank", "rs1", 4, 3});
  out.module.descriptors.push_back(std::move(d_cfg));

  auto &e = out.expect;
  e.add("final.mvin__spad.role.dram_rdata", "input");
  e.add("final.mvin__spad.port.dram_rdata", "dram_addr");
  e.add("final.mvin__spad.role.spad", "output");
  e.add("final.mvin__spad.port.spad", "spad_addr");
  e.add("final.mvin__spad.compute", "opaque");
  e.add("final.mvin__dram_base_addr.compute", "opaque");
  e.add("taidl.instruction_count", 2);
  e.add("taidl.banked_count", 1);
  e.add("taidl.banked.strides",
        std::to_string(banks) + " select rs1[4:3]");
  e.add("taidl.body_kind.mvin", "dma_load");
  e.add("taidl.body_kind.config_mvin", "config");
  return out;
}

inline GeneratedDesign generate_pool(const DesignSpec &spec) {
  int64_t window = spec.window;
  FunctionBuilder b("pool__pool_acc");
  ValueId src = b.arg("in_acc_window", Type::memref({window}, 8));

  ValueId best = b.const_int(-128, 8);
  for (int64_t k = 0; k < window; ++k) {
    ValueId idx = b.const_index(k);
    ValueId elem = b.load(src, {idx}, "elem");
    ValueId gt = b.cmpi(CmpPred::Sgt, best, elem, "gt");
    best = b.select(gt, best, elem, "best");
  }
  b.ret(best);

  GeneratedDesign out;
  Descriptor d;
  d.instruction = "pool";
  d.asvs = {"pool_acc"};
  out.module.descriptors.push_back(std::move(d));
  out.module.functions.push_back(b.take());

  auto &e = out.expect;
  e.add("pre.pool__pool_acc.op_count",
        static_cast<int64_t>(count_ops(out.module.functions[0])));
  e.add("post_c6.pool__pool_acc.loop_count", 1);
  e.add("post_c7.pool__pool_acc.max_loops", 1);
  e.add("final.pool__pool_acc.compute", "max_reduce");
  e.add("final.pool__pool_acc.role.in_acc_window", "input");
  e.add("final.pool__pool_acc.port.in_acc_window", "spad_addr");
  e.add("final.pool__pool_acc.loop_trip", window);
  e.add("final.pool__pool_acc.op_count", 7);
  e.add("taidl.body_kind.pool", "compute");
  return out;
}

inline GeneratedDesign generate_fsm_pair(const DesignSpec &spec) {
  unsigned w = static_cast<unsigned>(spec.input_width);
  unsigned v = static_cast<unsigned>(spec.acc_width);
  GeneratedDesign out;

  {
    FunctionBuilder b("preload__state");
    b.arg("state", Type::integer(2));
    ValueId one = b.const_int(1, 2);
    b.ret(one);
    out.module.functions.push_back(b.take());
  }
  {
    FunctionBuilder b("compute__acc");
    ValueId in_a = b.arg("in_a", Type::integer(w));
    ValueId in_b = b.arg("in_b", Type::integer(w));
    ValueId state = b.arg("state", Type::integer(2));
    ValueId acc = b.arg("acc", Type::integer(v));
    ValueId one = b.const_int(1, 2);
    ValueId armed = b.cmpi(CmpPred::Eq, state, one, "armed");
    ValueId next = b.build_if(
        armed, Type::integer(v),
        [&](FunctionBuilder &bb) {
          ValueId ae = bb.extsi(in_a, v, "ae");
          ValueId be = bb.extsi(in_b, v, "be");
          ValueId prod = bb.binary(Op::Muli, ae, be, "prod");
          ValueId sum = bb.binary(Op::Addi, prod, acc, "sum");
          bb.yield({sum});
        },
        [&](FunctionBuilder &bb) { bb.yield({acc}); }, "next_acc");
    b.ret(next);
    out.module.functions.push_back(b.take());
  }
  {
    FunctionBuilder b("compute__state");
    ValueId state = b.arg("state", Type::integer(2));
    ValueId one = b.const_int(1, 2);
    ValueId armed = b.cmpi(CmpPred::Eq, state, one, "armed");
    ValueId zero = b.const_int(0, 2);
    ValueId next = b.build_if(
        armed, Type::integer(2),
        [&](FunctionBuilder &bb) { bb.yield({zero}); },
        [&](FunctionBuilder &bb) { bb.yield({state}); }, "next_state");
    b.ret(next);
    out.module.functions.push_back(b.take());
  }

  Descriptor d_pre;
  d_pre.instruction = "preload";
  d_pre.asvs = {"state"};
  out.module.descriptors.push_back(std::move(d_pre));
  Descriptor d_cmp;
  d_cmp.instruction = "compute";
  d_cmp.asvs = {"state", "acc"};
  out.module.descriptors.push_back(std::move(d_cmp));

  auto &e = out.expect;
  e.add("final.preload__state.compute", "opaque");
  e.add("final.compute__acc.compute", "dot_product");
  e.add("taidl.order_count", 1);
  e.add("taidl.order.0", "preload before compute via state");
  e.add("taidl.instruction_count", 2);
  return out;
}

}  // namespace detail

/// Deterministic pure function of the spec (seed included). The resulting
/// module verifies; the expectations are the structural outcomes the lifting
/// pipeline must reach on it.
inline GeneratedDesign generate(const DesignSpec &spec) {
  spec.validate();
  switch (spec.kind) {
    case DesignSpec::Kind::Pe: return detail::generate_pe(spec);
    case DesignSpec::Kind::MacChain: return detail::generate_mac_chain(spec);
    case DesignSpec::Kind::DmaCopy: return detail::generate_dma_copy(spec);
    case DesignSpec::Kind::Pool: return detail::generate_pool(spec);
    case DesignSpec::Kind::FsmPair: return detail::generate_fsm_pair(spec);
  }
  throw std::invalid_argument("unknown design kind");
}

/// The standard design set used end to end: one of each kind.
inline std::vector<DesignSpec> default_corpus_specs() {
  DesignSpec pe;
  pe.kind = DesignSpec::Kind::Pe;
  DesignSpec mac;
  mac.kind = DesignSpec::Kind::MacChain;
  mac.chain_length = 16;
  DesignSpec dma;
  dma.kind = DesignSpec::Kind::DmaCopy;
  dma.banks = 3;
  DesignSpec pool;
  pool.kind = DesignSpec::Kind::Pool;
  pool.window = 4;
  DesignSpec fsm;
  fsm.kind = DesignSpec::Kind::FsmPair;
  return {pe, mac, dma, pool, fsm};
}

}  // namespace atlaas
