#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "atlaas/ir.hpp"

namespace atlaas {

struct MemrefValue {
  Type type;
  std::vector<BitVec> elems;  // row-major

  static MemrefValue zeros(const Type &t) {
    MemrefValue m{t, {}};
    m.elems.assign(static_cast<size_t>(t.element_count()),
                   BitVec::make(t.width, 0));
    return m;
  }

  friend bool operator==(const MemrefValue &a, const MemrefValue &b) {
    return a.type == b.type && a.elems == b.elems;
  }
};

using RuntimeValue = std::variant<BitVec, MemrefValue>;

inline std::string runtime_value_to_string(const RuntimeValue &v) {
  if (auto *b = std::get_if<BitVec>(&v)) return b->to_string();
  const auto &m = std::get<MemrefValue>(v);
  std::string out = "[";
  for (size_t i = 0; i < m.elems.size(); ++i) {
    if (i) out += ", ";
    out += m.elems[i].to_string();
  }
  return out + "]";
}

/// Per-argument assignment, keyed by signal name.
struct Environment {
  std::map<std::string, RuntimeValue> args;

  static Environment zeros(const Function &f) {
    Environment env;
    for (const auto &a : f.args) {
      const Type &t = f.type_of(a.value);
      if (t.is_memref())
        env.args[f.name_of(a.value)] = MemrefValue::zeros(t);
      else
        env.args[f.name_of(a.value)] = BitVec::make(t.is_index() ? 64 : t.width, 0);
    }
    return env;
  }

  std::string to_string() const {
    std::string out;
    for (const auto &[k, v] : args)
      out += k + " = " + runtime_value_to_string(v) + "\n";
    return out;
  }
};

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Scalar semantics of a single integer operation; shared between direct
/// evaluation and constant folding.
inline BitVec fold_int_op(Op op, CmpPred pred, const BitVec &a, const BitVec &b) {
  switch (op) {
    case Op::Addi: return a + b;
    case Op::Subi: return a - b;
    case Op::Muli: return a * b;
    case Op::Andi: return a & b;
    case Op::Ori: return a | b;
    case Op::Xori: return a ^ b;
    case Op::Shli: return a.shl(b);
    case Op::Shrsi: return a.ashr(b);
    case Op::Shrui: return a.lshr(b);
    case Op::Cmpi: {
      bool r = false;
      switch (pred) {
        case CmpPred::Eq: r = a.bits == b.bits; break;
        case CmpPred::Ne: r = a.bits != b.bits; break;
        case CmpPred::Slt: r = a.to_signed() < b.to_signed(); break;
        case CmpPred::Sle: r = a.to_signed() <= b.to_signed(); break;
        case CmpPred::Sgt: r = a.to_signed() > b.to_signed(); break;
        case CmpPred::Sge: r = a.to_signed() >= b.to_signed(); break;
        case CmpPred::Ult: r = a.bits < b.bits; break;
        case CmpPred::Ule: r = a.bits <= b.bits; break;
        case CmpPred::Ugt: r = a.bits > b.bits; break;
        case CmpPred::Uge: r = a.bits >= b.bits; break;
      }
      return BitVec::make(1, r ? 1 : 0);
    }
    default: throw EvalError("fold_int_op: not a scalar binary op");
  }
}

inline BitVec fold_cast(Op op, const BitVec &v, unsigned to_width) {
  switch (op) {
    case Op::Extsi: return v.sext(to_width);
    case Op::Extui: return v.zext(to_width);
    case Op::Trunci: return v.trunc(to_width);
    default: throw EvalError("fold_cast: not a cast");
  }
}

namespace detail {

class Evaluator {
 public:
  Evaluator(const Function &f, const Environment &env) : f_(f) {
    slots_.resize(f.values.size());
    for (const auto &a : f.args) {
      auto it = env.args.find(f.name_of(a.value));
      if (it == env.args.end())
        throw EvalError("environment missing argument " + f.name_of(a.value));
      slots_[a.value] = it->second;
    }
  }

  RuntimeValue run() {
    auto result = exec_block(f_.body);
    if (!result || result->empty())
      throw EvalError("function did not return a value");
    return (*result)[0];
  }

 private:
  const BitVec &scalar(ValueId v) {
    auto *b = std::get_if<BitVec>(&get(v));
    if (!b) throw EvalError("expected scalar for %" + f_.name_of(v));
    return *b;
  }
  const MemrefValue &memref(ValueId v) {
    auto *m = std::get_if<MemrefValue>(&get(v));
    if (!m) throw EvalError("expected memref for %" + f_.name_of(v));
    return *m;
  }
  RuntimeValue &get(ValueId v) {
    if (!slots_[v]) throw EvalError("read of unset value %" + f_.name_of(v));
    return *slots_[v];
  }

  size_t flat_index(const Operation &op, size_t first_idx_operand,
                    const MemrefValue &m) {
    const auto &shape = m.type.shape;
    size_t flat = 0;
    for (size_t d = 0; d < shape.size(); ++d) {
      int64_t idx = static_cast<int64_t>(
          scalar(op.operands[first_idx_operand + d]).to_signed());
      if (idx < 0 || idx >= shape[d])
        throw EvalError("index out of bounds");
      flat = flat * static_cast<size_t>(shape[d]) + static_cast<size_t>(idx);
    }
    return flat;
  }

  // Runs a block; returns the terminator's operand values (yield/return), or
  // nullopt for a block that falls through (cannot happen in verified IR).
  std::optional<std::vector<RuntimeValue>> exec_block(const Block &b) {
    for (const auto &op : b.ops) {
      switch (op.op) {
        case Op::Const:
          slots_[op.results[0]] = op.value;
          break;
        case Op::Extsi:
        case Op::Extui:
        case Op::Trunci:
          slots_[op.results[0]] = fold_cast(
              op.op, scalar(op.operands[0]), f_.type_of(op.results[0]).width);
          break;
        case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
        case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
        case Op::Shrui: case Op::Cmpi:
          slots_[op.results[0]] = fold_int_op(
              op.op, op.pred, scalar(op.operands[0]), scalar(op.operands[1]));
          break;
        case Op::Select: {
          bool c = scalar(op.operands[0]).bits != 0;
          slots_[op.results[0]] = get(op.operands[c ? 1 : 2]);
          break;
        }
        case Op::Load: {
          const MemrefValue &m = memref(op.operands[0]);
          slots_[op.results[0]] = m.elems[flat_index(op, 1, m)];
          break;
        }
        case Op::Store: {
          MemrefValue m = memref(op.operands[1]);
          m.elems[flat_index(op, 2, m)] = scalar(op.operands[0]);
          slots_[op.results[0]] = std::move(m);
          break;
        }
        case Op::If: {
          bool c = scalar(op.operands[0]).bits != 0;
          const Block &region =
              c ? op.regions[0]
                : (op.regions.size() > 1 ? op.regions[1] : op.regions[0]);
          if (!c && op.regions.size() < 2) break;  // no else: nothing to run
          auto yielded = exec_block(region);
          if (yielded)
            for (size_t i = 0; i < op.results.size(); ++i)
              slots_[op.results[i]] = (*yielded)[i];
          break;
        }
        case Op::For: {
          const Block &body = op.regions[0];
          std::vector<RuntimeValue> carried;
          for (ValueId init : op.operands) carried.push_back(get(init));
          for (int64_t i = op.lower; i < op.upper; i += op.step) {
            slots_[body.args[0]] = BitVec::make_signed(64, i);
            for (size_t k = 0; k < carried.size(); ++k)
              slots_[body.args[k + 1]] = carried[k];
            auto yielded = exec_block(body);
            if (yielded) carried = std::move(*yielded);
          }
          for (size_t k = 0; k < op.results.size(); ++k)
            slots_[op.results[k]] = carried[k];
          break;
        }
        case Op::Yield:
        case Op::Return: {
          std::vector<RuntimeValue> out;
          for (ValueId v : op.operands) out.push_back(get(v));
          return out;
        }
      }
    }
    return std::nullopt;
  }

  const Function &f_;
  std::vector<std::optional<RuntimeValue>> slots_;
};

}  // namespace detail

/// Executes a verified function under a complete environment. Deterministic;
/// two's-complement wrap semantics throughout.
inline RuntimeValue evaluate(const Function &f, const Environment &env) {
  return detail::Evaluator(f, env).run();
}

}  // namespace atlaas
