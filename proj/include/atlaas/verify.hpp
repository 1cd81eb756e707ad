#pragma once

#include <set>
#include <string>
#include <vector>

#include "atlaas/ir.hpp"

namespace atlaas {

struct Violation {
  std::string rule;    // stable rule name, e.g. "width mismatch"
  std::string detail;  // offending value / op context
};

namespace detail {

class Verifier {
 public:
  explicit Verifier(const Function &f) : f_(f) {}

  std::vector<Violation> run() {
    for (const auto &a : f_.args) {
      define(a.value, "argument");
      if (f_.name_of(a.value).empty()) fail("signal-name", "unnamed argument");
      check_type(f_.type_of(a.value), f_.name_of(a.value));
    }
    check_block(f_.body, /*is_function_body=*/true, nullptr);
    return std::move(violations_);
  }

 private:
  void fail(std::string rule, std::string detail) {
    violations_.push_back({std::move(rule), std::move(detail)});
  }

  std::string vname(ValueId v) const { return "%" + f_.name_of(v); }

  void check_type(const Type &t, const std::string &ctx) {
    if (t.is_int() && (t.width < 1 || t.width > 128))
      fail("integer-width", ctx + ": i" + std::to_string(t.width));
    if (t.is_memref()) {
      if (t.shape.empty()) fail("memref-shape", ctx + ": empty shape");
      for (int64_t e : t.shape)
        if (e < 1) fail("memref-shape", ctx + ": extent " + std::to_string(e));
      if (t.width < 1 || t.width > 128)
        fail("integer-width", ctx + ": element i" + std::to_string(t.width));
    }
  }

  void define(ValueId v, const std::string &ctx) {
    if (!defined_.insert(v).second)
      fail("ssa-single-def", vname(v) + " redefined in " + ctx);
    in_scope_.back().insert(v);
  }

  bool visible(ValueId v) const {
    for (const auto &scope : in_scope_)
      if (scope.count(v)) return true;
    return false;
  }

  void use(ValueId v, const std::string &ctx) {
    if (v >= f_.values.size()) {
      fail("ssa-dominance", "unknown value in " + ctx);
      return;
    }
    if (!visible(v)) fail("ssa-dominance", vname(v) + " used in " + ctx +
                          " before definition or out of scope");
  }

  const Type *operand_type(const Operation &op, size_t i) {
    if (i >= op.operands.size() || op.operands[i] >= f_.values.size())
      return nullptr;
    return &f_.type_of(op.operands[i]);
  }

  // Whether an index operand is a constant or a loop induction variable.
  bool const_or_induction(ValueId v) const {
    return const_values_.count(v) || induction_vars_.count(v);
  }

  void check_block(const Block &b, bool is_function_body, const Operation *parent) {
    in_scope_.emplace_back();
    for (ValueId a : b.args) define(a, "block argument");
    for (size_t i = 0; i < b.ops.size(); ++i) {
      const Operation &op = b.ops[i];
      bool is_last = i + 1 == b.ops.size();
      for (ValueId v : op.operands) use(v, op_name(op.op));
      check_op(op, parent);
      if (op.op == Op::Return && !(is_function_body && is_last))
        fail("terminator-placement", "return not at end of function body");
      if (op.op == Op::Yield && (is_function_body || !is_last))
        fail("terminator-placement", "yield not at end of a region");
      for (ValueId r : op.results) define(r, op_name(op.op));
    }
    if (is_function_body) {
      if (b.ops.empty() || b.ops.back().op != Op::Return)
        fail("return-shape", "function body must end with return");
      else if (b.ops.back().operands.size() != 1)
        fail("return-shape", "return must yield exactly one value");
    } else {
      if (b.ops.empty() || b.ops.back().op != Op::Yield)
        fail("terminator-placement", "region must end with yield");
    }
    in_scope_.pop_back();
  }

  void check_op(const Operation &op, const Operation *parent) {
    for (ValueId r : op.results)
      if (r < f_.values.size()) check_type(f_.type_of(r), vname(r));
    if (!op.regions.empty() && op.op != Op::If && op.op != Op::For)
      fail("region-op", std::string(op_name(op.op)) + " carries a region");

    switch (op.op) {
      case Op::Const: {
        if (op.results.size() != 1 || op.operands.size() != 0) {
          fail("op-arity", "const");
          break;
        }
        const Type &t = f_.type_of(op.results[0]);
        if (!t.is_int() && !t.is_index())
          fail("const-type", vname(op.results[0]));
        else if (t.is_int() && op.value.width != t.width)
          fail("const-type", vname(op.results[0]) + ": payload width");
        const_values_[op.results[0]] =
            static_cast<int64_t>(op.value.to_signed());
        break;
      }
      case Op::Extsi:
      case Op::Extui:
      case Op::Trunci: {
        if (op.operands.size() != 1 || op.results.size() != 1) {
          fail("op-arity", op_name(op.op));
          break;
        }
        const Type *in = operand_type(op, 0);
        const Type &out = f_.type_of(op.results[0]);
        if (!in || !in->is_int() || !out.is_int()) {
          fail("cast-type", vname(op.results[0]));
          break;
        }
        if (op.op == Op::Trunci) {
          if (out.width >= in->width)
            fail("trunc-narrows", vname(op.results[0]));
        } else if (out.width <= in->width) {
          fail("ext-widens", vname(op.results[0]));
        }
        break;
      }
      case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
      case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
      case Op::Shrui: {
        if (op.operands.size() != 2 || op.results.size() != 1) {
          fail("op-arity", op_name(op.op));
          break;
        }
        const Type *a = operand_type(op, 0);
        const Type *b = operand_type(op, 1);
        const Type &r = f_.type_of(op.results[0]);
        if (!a || !b || !a->is_int() || !b->is_int() || !r.is_int())
          fail("width mismatch", std::string(op_name(op.op)) + " " +
                                     vname(op.results[0]) + ": non-integer");
        else if (a->width != b->width || a->width != r.width)
          fail("width mismatch", std::string(op_name(op.op)) + " " +
                                     vname(op.results[0]));
        break;
      }
      case Op::Cmpi: {
        if (op.operands.size() != 2 || op.results.size() != 1) {
          fail("op-arity", "cmpi");
          break;
        }
        const Type *a = operand_type(op, 0);
        const Type *b = operand_type(op, 1);
        if (!a || !b || !a->is_int() || !b->is_int() || a->width != b->width)
          fail("width mismatch", "cmpi " + vname(op.results[0]));
        if (!(f_.type_of(op.results[0]) == Type::integer(1)))
          fail("cmpi-result", vname(op.results[0]));
        break;
      }
      case Op::Select: {
        if (op.operands.size() != 3 || op.results.size() != 1) {
          fail("op-arity", "select");
          break;
        }
        const Type *c = operand_type(op, 0);
        const Type *t = operand_type(op, 1);
        const Type *e = operand_type(op, 2);
        if (!c || !(*c == Type::integer(1)))
          fail("select-cond", vname(op.results[0]));
        if (!t || !e || !(*t == *e) || !(f_.type_of(op.results[0]) == *t))
          fail("select-types", vname(op.results[0]));
        break;
      }
      case Op::Load:
      case Op::Store: {
        size_t mem_at = op.op == Op::Load ? 0 : 1;
        if (op.operands.size() < mem_at + 2 || op.results.size() != 1) {
          fail("op-arity", op_name(op.op));
          break;
        }
        const Type *mem = operand_type(op, mem_at);
        if (!mem || !mem->is_memref()) {
          fail("memref-operand", std::string(op_name(op.op)) + " " +
                                     vname(op.results[0]));
          break;
        }
        size_t n_idx = op.operands.size() - mem_at - 1;
        if (n_idx != mem->shape.size())
          fail("index-rank", vname(op.results[0]));
        for (size_t i = 0; i < n_idx; ++i) {
          ValueId idx = op.operands[mem_at + 1 + i];
          if (idx >= f_.values.size()) continue;
          if (!f_.type_of(idx).is_index())
            fail("index-kind", vname(idx) + " not index-typed");
          if (!const_or_induction(idx))
            fail("index-kind",
                 vname(idx) + " is neither a constant nor an induction variable");
          else
            check_index_bounds(idx, i < mem->shape.size() ? mem->shape[i] : 0);
        }
        if (op.op == Op::Load) {
          if (!(f_.type_of(op.results[0]) == Type::integer(mem->width)))
            fail("load-type", vname(op.results[0]));
        } else {
          const Type *v = operand_type(op, 0);
          if (!v || !v->is_int() || v->width != mem->width)
            fail("store-type", vname(op.results[0]));
          if (!(f_.type_of(op.results[0]) == *mem))
            fail("store-type", vname(op.results[0]) + ": result version type");
        }
        break;
      }
      case Op::If: {
        if (op.operands.size() != 1 || op.regions.size() < 1 ||
            op.regions.size() > 2 || op.results.size() > 1) {
          fail("if-shape", "scf.if");
          break;
        }
        const Type *c = operand_type(op, 0);
        if (!c || !(*c == Type::integer(1)))
          fail("if-shape", "condition must be i1");
        if (op.results.size() == 1 && op.regions.size() != 2)
          fail("if-shape", "scf.if with a result requires an else region");
        for (const auto &r : op.regions) {
          if (!r.args.empty()) fail("if-shape", "region takes arguments");
          check_block(r, false, &op);
        }
        break;
      }
      case Op::For: {
        if (op.regions.size() != 1) {
          fail("loop-shape", "scf.for must have one region");
          break;
        }
        if (op.step < 1) fail("loop-shape", "step must be >= 1");
        if (op.lower > op.upper) fail("loop-shape", "lower > upper");
        const Block &body = op.regions[0];
        if (body.args.size() != op.operands.size() + 1) {
          fail("loop-carried arity", "iter_args vs block arguments");
          break;
        }
        if (body.args[0] < f_.values.size() &&
            !f_.type_of(body.args[0]).is_index())
          fail("loop-shape", "induction variable must be index");
        if (op.results.size() != op.operands.size())
          fail("loop-carried arity", "results vs iter_args");
        for (size_t i = 0; i < op.operands.size(); ++i) {
          const Type *init = operand_type(op, i);
          if (init && body.args[i + 1] < f_.values.size() &&
              !(f_.type_of(body.args[i + 1]) == *init))
            fail("loop-carried arity", "iter_arg type mismatch");
          if (init && i < op.results.size() &&
              !(f_.type_of(op.results[i]) == *init))
            fail("loop-carried arity", "result type mismatch");
        }
        induction_vars_.insert(body.args[0]);
        loop_ranges_[body.args[0]] = {op.lower, op.upper};
        check_block(body, false, &op);
        break;
      }
      case Op::Yield: {
        size_t expected = 0;
        if (parent) {
          expected = parent->op == Op::For ? parent->operands.size()
                                           : parent->results.size();
        }
        if (op.operands.size() != expected)
          fail(parent && parent->op == Op::For ? "loop-carried arity"
                                               : "if-shape",
               "yield arity");
        else if (parent)
          for (size_t i = 0; i < op.operands.size(); ++i) {
            const Type *y = operand_type(op, i);
            const Type &want =
                parent->op == Op::For
                    ? f_.type_of(parent->regions[0].args[i + 1])
                    : f_.type_of(parent->results[i]);
            if (y && !(*y == want)) fail("yield-type", "yield operand type");
          }
        break;
      }
      case Op::Return:
        break;
    }
  }

  void check_index_bounds(ValueId idx, int64_t extent) {
    auto cv = const_values_.find(idx);
    if (cv != const_values_.end()) {
      int64_t v = cv->second;
      if (v < 0 || v >= extent)
        fail("index-bounds", vname(idx) + " = " + std::to_string(v) +
                                 " outside extent " + std::to_string(extent));
    } else {
      auto it = loop_ranges_.find(idx);
      if (it != loop_ranges_.end() &&
          (it->second.first < 0 || it->second.second > extent))
        fail("index-bounds", vname(idx) + " range [" +
                                 std::to_string(it->second.first) + ", " +
                                 std::to_string(it->second.second) +
                                 ") outside extent " + std::to_string(extent));
    }
  }

  const Function &f_;
  std::vector<Violation> violations_;
  std::set<ValueId> defined_;
  std::vector<std::set<ValueId>> in_scope_;
  std::map<ValueId, int64_t> const_values_;
  std::set<ValueId> induction_vars_;
  std::map<ValueId, std::pair<int64_t, int64_t>> loop_ranges_;
};

}  // namespace detail

inline std::vector<Violation> verify(const Function &f) {
  return detail::Verifier(f).run();
}

inline std::vector<Violation> verify(const Module &m) {
  std::vector<Violation> all;
  std::set<std::string> names;
  for (const auto &f : m.functions) {
    if (!names.insert(f.name).second)
      all.push_back({"duplicate-function", "@" + f.name});
    for (auto v : verify(f)) {
      v.detail = "@" + f.name + ": " + v.detail;
      all.push_back(std::move(v));
    }
  }
  // Descriptor control keys must name a signal (or an encoding field) visible
  // in at least one function of the instruction's group.
  for (const auto &d : m.descriptors) {
    std::vector<const Function *> members;
    for (const auto &f : m.functions)
      if (f.instruction() == d.instruction) members.push_back(&f);
    if (members.empty()) continue;
    for (const auto &[key, values] : d.fixed_controls) {
      std::string signal = key;
      if (const EncodingField *field = d.find_field(key)) signal = field->arg;
      bool present = false;
      for (const Function *f : members)
        present |= f->find_arg(signal).has_value();
      if (!present)
        all.push_back({"descriptor-control",
                       d.instruction + ": control '" + key +
                           "' names no argument of the group"});
    }
  }
  return all;
}

inline bool verifies(const Function &f) { return verify(f).empty(); }
inline bool verifies(const Module &m) { return verify(m).empty(); }

inline std::string violations_to_string(const std::vector<Violation> &vs) {
  std::string out;
  for (const auto &v : vs) {
    out += v.rule;
    out += ": ";
    out += v.detail;
    out += "\n";
  }
  return out;
}

}  // namespace atlaas
