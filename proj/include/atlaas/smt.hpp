#pragma once

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "atlaas/equiv.hpp"
#include "atlaas/ir.hpp"

namespace atlaas {

namespace detail {

inline std::string smt_sanitize(std::string_view s) {
  std::string out;
  for (char c : s)
    out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0])))
    out.insert(out.begin(), '_');
  return out;
}

inline std::string bv_literal(const BitVec &v) {
  return "(_ bv" + v.to_unsigned_string() + " " + std::to_string(v.width) + ")";
}

// Encodes one function as a chain of define-fun terms over the shared
// argument symbols. Loops have constant bounds and unroll; stores build
// array terms (memory is SSA, so version chaining is direct).
class SmtEncoder {
 public:
  SmtEncoder(std::ostringstream &os, const Function &f, std::string prefix,
             const std::map<std::string, std::string> &arg_syms)
      : os_(os), f_(f), prefix_(std::move(prefix)) {
    for (const auto &a : f.args) {
      const std::string &name = f.name_of(a.value);
      terms_[a.value] = arg_syms.at(name);
    }
  }

  /// Returns the (term, sort) of the returned value.
  std::pair<std::string, std::string> encode() {
    auto ret = encode_block(f_.body);
    return {ret[0], sort_of(return_value_type())};
  }

  Type return_value_type() const {
    const Operation &ret = f_.body.ops.back();
    return f_.type_of(ret.operands[0]);
  }

 private:
  std::string sort_of(const Type &t) const {
    if (t.is_memref())
      return "(Array (_ BitVec 32) (_ BitVec " + std::to_string(t.width) + "))";
    return "(_ BitVec " + std::to_string(t.is_index() ? 64 : t.width) + ")";
  }

  std::string define(ValueId v, const Type &t, const std::string &body) {
    std::string name =
        prefix_ + std::to_string(counter_++) + "_" + smt_sanitize(f_.name_of(v));
    os_ << "(define-fun " << name << " () " << sort_of(t) << " " << body
        << ")\n";
    terms_[v] = name;
    return name;
  }

  const std::string &term(ValueId v) { return terms_.at(v); }

  int64_t index_of(ValueId v) { return index_values_.at(v); }

  int64_t flat_index(const Operation &op, size_t first, const Type &mem_t) {
    int64_t flat = 0;
    for (size_t d = 0; d < mem_t.shape.size(); ++d)
      flat = flat * mem_t.shape[d] + index_of(op.operands[first + d]);
    return flat;
  }

  // Returns the terminator's operand terms.
  std::vector<std::string> encode_block(const Block &b) {
    for (const auto &op : b.ops) {
      switch (op.op) {
        case Op::Const: {
          const Type &t = f_.type_of(op.results[0]);
          if (t.is_index()) {
            index_values_[op.results[0]] =
                static_cast<int64_t>(op.value.to_signed());
          } else {
            terms_[op.results[0]] = bv_literal(op.value);
          }
          break;
        }
        case Op::Extsi:
        case Op::Extui: {
          unsigned from = f_.type_of(op.operands[0]).width;
          unsigned to = f_.type_of(op.results[0]).width;
          const char *fn = op.op == Op::Extsi ? "sign_extend" : "zero_extend";
          define(op.results[0], f_.type_of(op.results[0]),
                 "((_ " + std::string(fn) + " " + std::to_string(to - from) +
                     ") " + term(op.operands[0]) + ")");
          break;
        }
        case Op::Trunci: {
          unsigned to = f_.type_of(op.results[0]).width;
          define(op.results[0], f_.type_of(op.results[0]),
                 "((_ extract " + std::to_string(to - 1) + " 0) " +
                     term(op.operands[0]) + ")");
          break;
        }
        case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
        case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
        case Op::Shrui: {
          const char *fn = nullptr;
          switch (op.op) {
            case Op::Addi: fn = "bvadd"; break;
            case Op::Subi: fn = "bvsub"; break;
            case Op::Muli: fn = "bvmul"; break;
            case Op::Andi: fn = "bvand"; break;
            case Op::Ori: fn = "bvor"; break;
            case Op::Xori: fn = "bvxor"; break;
            case Op::Shli: fn = "bvshl"; break;
            case Op::Shrsi: fn = "bvashr"; break;
            case Op::Shrui: fn = "bvlshr"; break;
            default: break;
          }
          define(op.results[0], f_.type_of(op.results[0]),
                 "(" + std::string(fn) + " " + term(op.operands[0]) + " " +
                     term(op.operands[1]) + ")");
          break;
        }
        case Op::Cmpi: {
          std::string a = term(op.operands[0]);
          std::string b = term(op.operands[1]);
          std::string rel;
          switch (op.pred) {
            case CmpPred::Eq: rel = "(= " + a + " " + b + ")"; break;
            case CmpPred::Ne: rel = "(distinct " + a + " " + b + ")"; break;
            case CmpPred::Slt: rel = "(bvslt " + a + " " + b + ")"; break;
            case CmpPred::Sle: rel = "(bvsle " + a + " " + b + ")"; break;
            case CmpPred::Sgt: rel = "(bvsgt " + a + " " + b + ")"; break;
            case CmpPred::Sge: rel = "(bvsge " + a + " " + b + ")"; break;
            case CmpPred::Ult: rel = "(bvult " + a + " " + b + ")"; break;
            case CmpPred::Ule: rel = "(bvule " + a + " " + b + ")"; break;
            case CmpPred::Ugt: rel = "(bvugt " + a + " " + b + ")"; break;
            case CmpPred::Uge: rel = "(bvuge " + a + " " + b + ")"; break;
          }
          define(op.results[0], Type::integer(1),
                 "(ite " + rel + " (_ bv1 1) (_ bv0 1))");
          break;
        }
        case Op::Select:
          define(op.results[0], f_.type_of(op.results[0]),
                 "(ite (= " + term(op.operands[0]) + " (_ bv1 1)) " +
                     term(op.operands[1]) + " " + term(op.operands[2]) + ")");
          break;
        case Op::Load: {
          const Type &mt = f_.type_of(op.operands[0]);
          int64_t idx = flat_index(op, 1, mt);
          define(op.results[0], f_.type_of(op.results[0]),
                 "(select " + term(op.operands[0]) + " (_ bv" +
                     std::to_string(idx) + " 32))");
          break;
        }
        case Op::Store: {
          const Type &mt = f_.type_of(op.operands[1]);
          int64_t idx = flat_index(op, 2, mt);
          define(op.results[0], mt,
                 "(store " + term(op.operands[1]) + " (_ bv" +
                     std::to_string(idx) + " 32) " + term(op.operands[0]) + ")");
          break;
        }
        case Op::If: {
          std::string cond =
              "(= " + term(op.operands[0]) + " (_ bv1 1))";
          auto then_terms = encode_block(op.regions[0]);
          std::vector<std::string> else_terms;
          if (op.regions.size() > 1) else_terms = encode_block(op.regions[1]);
          for (size_t i = 0; i < op.results.size(); ++i)
            define(op.results[i], f_.type_of(op.results[i]),
                   "(ite " + cond + " " + then_terms[i] + " " + else_terms[i] +
                       ")");
          break;
        }
        case Op::For: {
          const Block &body = op.regions[0];
          std::vector<std::string> carried;
          for (ValueId init : op.operands) carried.push_back(term(init));
          for (int64_t i = op.lower; i < op.upper; i += op.step) {
            index_values_[body.args[0]] = i;
            for (size_t k = 0; k < carried.size(); ++k)
              terms_[body.args[k + 1]] = carried[k];
            carried = encode_block(body);
          }
          for (size_t k = 0; k < op.results.size(); ++k) {
            if (op.lower >= op.upper)
              terms_[op.results[k]] = term(op.operands[k]);
            else
              terms_[op.results[k]] = carried[k];
          }
          break;
        }
        case Op::Yield:
        case Op::Return: {
          std::vector<std::string> out;
          for (ValueId v : op.operands) out.push_back(term(v));
          return out;
        }
      }
    }
    return {};
  }

  std::ostringstream &os_;
  const Function &f_;
  std::string prefix_;
  std::map<ValueId, std::string> terms_;
  std::map<ValueId, int64_t> index_values_;
  int counter_ = 0;
};

}  // namespace detail

/// Emits a QF_ABV script asserting the existence of an input on which the two
/// functions disagree; `unsat` from any conforming solver proves equivalence
/// over the (possibly restricted) domain.
inline std::string emit_smt(const Function &f, const Function &g,
                            const Restriction &restriction = {}) {
  check_signatures_match(f, g);
  std::ostringstream os;
  os << "(set-logic QF_ABV)\n";
  os << "; equivalence query: @" << f.name << " vs @" << g.name << "\n";
  os << "; sat = counterexample exists, unsat = equivalent\n";

  std::map<std::string, std::string> arg_syms;
  for (const auto &a : f.args) {
    const std::string &name = f.name_of(a.value);
    const Type &t = f.type_of(a.value);
    std::string sym = "arg_" + detail::smt_sanitize(name);
    arg_syms[name] = sym;
    if (t.is_memref())
      os << "(declare-const " << sym << " (Array (_ BitVec 32) (_ BitVec "
         << t.width << ")))\n";
    else
      os << "(declare-const " << sym << " (_ BitVec "
         << (t.is_index() ? 64u : t.width) << "))\n";
  }

  // Domain restriction: fixed controls and encoding-field pins.
  for (const auto &[name, vals] : restriction.fixed) {
    auto arg = f.find_arg(name);
    if (!arg) continue;
    const Type &t = f.type_of(*arg);
    if (t.is_memref()) {
      for (int64_t i = 0; i < t.element_count(); ++i) {
        int64_t v = static_cast<size_t>(i) < vals.size() ? vals[i] : vals.back();
        os << "(assert (= (select " << arg_syms[name] << " (_ bv" << i
           << " 32)) " << detail::bv_literal(BitVec::make_signed(t.width, v))
           << "))\n";
      }
    } else if (!vals.empty()) {
      os << "(assert (= " << arg_syms[name] << " "
         << detail::bv_literal(BitVec::make_signed(t.width, vals[0])) << "))\n";
    }
  }
  for (const auto &pin : restriction.pins) {
    auto arg = f.find_arg(pin.arg);
    if (!arg) continue;
    unsigned fw = pin.hi - pin.lo + 1;
    os << "(assert (= ((_ extract " << pin.hi << " " << pin.lo << ") "
       << arg_syms[pin.arg] << ") "
       << detail::bv_literal(BitVec::make(fw, pin.value)) << "))\n";
  }

  detail::SmtEncoder left(os, f, "f", arg_syms);
  auto [f_ret, f_sort] = left.encode();
  detail::SmtEncoder right(os, g, "g", arg_syms);
  auto [g_ret, g_sort] = right.encode();

  os << "(define-fun lhs () " << f_sort << " " << f_ret << ")\n";
  os << "(define-fun rhs () " << g_sort << " " << g_ret << ")\n";
  os << "(assert (not (= lhs rhs)))\n";
  os << "(check-sat)\n";
  return os.str();
}

}  // namespace atlaas
