#pragma once

#include <sstream>
#include <string>

#include "atlaas/ir.hpp"

namespace atlaas {

namespace detail {

inline std::string quote(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string type_to_string(const Type &t) {
  switch (t.kind) {
    case Type::Kind::Int: return "i" + std::to_string(t.width);
    case Type::Kind::Index: return "index";
    case Type::Kind::Memref: {
      std::string s = "memref<";
      for (int64_t e : t.shape) s += std::to_string(e) + "x";
      s += "i" + std::to_string(t.width) + ">";
      return s;
    }
  }
  return "?";
}

inline std::string ann_value_to_string(const AnnValue &v) {
  if (auto *i = std::get_if<int64_t>(&v)) return std::to_string(*i);
  if (auto *s = std::get_if<std::string>(&v)) return quote(*s);
  const auto &list = std::get<std::vector<int64_t>>(v);
  std::string out = "[";
  for (size_t i = 0; i < list.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(list[i]);
  }
  return out + "]";
}

inline std::string annotations_to_string(const Annotations &a) {
  if (a.empty()) return "";
  std::string out = "{";
  bool first = true;
  for (const auto &[k, v] : a) {
    if (!first) out += " ";
    first = false;
    out += k + " = " + ann_value_to_string(v);
  }
  return out + "}";
}

class Printer {
 public:
  explicit Printer(std::ostringstream &os) : os_(os) {}

  void print_module(const Module &m) {
    os_ << "// atlaas-ir\n";
    for (const auto &d : m.descriptors) print_descriptor(d);
    for (const auto &f : m.functions) print_function(f);
  }

  void print_descriptor(const Descriptor &d) {
    os_ << "descriptor " << quote(d.instruction) << " {\n";
    if (!d.fixed_controls.empty()) {
      os_ << "  controls:";
      for (const auto &[k, vals] : d.fixed_controls) {
        os_ << " " << quote(k) << " = [";
        for (size_t i = 0; i < vals.size(); ++i)
          os_ << (i ? ", " : "") << vals[i];
        os_ << "]";
      }
      os_ << "\n";
    }
    if (!d.asvs.empty()) {
      os_ << "  asvs:";
      for (const auto &a : d.asvs) os_ << " " << quote(a);
      os_ << "\n";
    }
    if (!d.encoding.empty()) {
      os_ << "  encoding:";
      for (const auto &f : d.encoding)
        os_ << " " << quote(f.name) << " = " << quote(f.arg) << " [" << f.hi
            << ":" << f.lo << "]";
      os_ << "\n";
    }
    if (d.macro) {
      os_ << "  macro: " << quote(d.macro->primitive) << " bounds";
      for (const auto &b : d.macro->bound_regs) os_ << " " << quote(b);
      os_ << "\n";
    }
    os_ << "}\n";
  }

  void print_function(const Function &f) {
    fn_ = &f;
    os_ << "func @" << f.name << "(";
    for (size_t i = 0; i < f.args.size(); ++i) {
      const auto &a = f.args[i];
      if (i) os_ << ", ";
      os_ << "%" << f.name_of(a.value) << ": "
          << type_to_string(f.type_of(a.value));
      if (!a.attrs.empty()) os_ << " " << annotations_to_string(a.attrs);
    }
    os_ << ")";
    if (!f.attrs.empty()) os_ << " " << annotations_to_string(f.attrs);
    os_ << " {\n";
    print_block(f.body, 1);
    os_ << "}\n";
  }

 private:
  std::string v(ValueId id) const { return "%" + fn_->name_of(id); }

  void indent(int depth) {
    for (int i = 0; i < depth; ++i) os_ << "  ";
  }

  void print_block(const Block &b, int depth) {
    for (const auto &op : b.ops) print_op(op, depth);
  }

  void print_results(const Operation &op) {
    for (size_t i = 0; i < op.results.size(); ++i)
      os_ << (i ? ", " : "") << v(op.results[i]);
    if (!op.results.empty()) os_ << " = ";
  }

  void print_attrs_suffix(const Operation &op) {
    if (!op.attrs.empty()) os_ << " " << annotations_to_string(op.attrs);
    os_ << "\n";
  }

  void print_op(const Operation &op, int depth) {
    indent(depth);
    const Function &f = *fn_;
    switch (op.op) {
      case Op::Const:
        print_results(op);
        os_ << "const " << op.value.to_string() << " : "
            << type_to_string(f.type_of(op.results[0]));
        break;
      case Op::Extsi:
      case Op::Extui:
      case Op::Trunci:
        print_results(op);
        os_ << op_name(op.op) << " " << v(op.operands[0]) << " : "
            << type_to_string(f.type_of(op.operands[0])) << " to "
            << type_to_string(f.type_of(op.results[0]));
        break;
      case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
      case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
      case Op::Shrui:
        print_results(op);
        os_ << op_name(op.op) << " " << v(op.operands[0]) << ", "
            << v(op.operands[1]) << " : "
            << type_to_string(f.type_of(op.results[0]));
        break;
      case Op::Cmpi:
        print_results(op);
        os_ << "cmpi " << pred_name(op.pred) << ", " << v(op.operands[0])
            << ", " << v(op.operands[1]) << " : "
            << type_to_string(f.type_of(op.operands[0]));
        break;
      case Op::Select:
        print_results(op);
        os_ << "select " << v(op.operands[0]) << ", " << v(op.operands[1])
            << ", " << v(op.operands[2]) << " : "
            << type_to_string(f.type_of(op.results[0]));
        break;
      case Op::Load: {
        print_results(op);
        os_ << "load " << v(op.operands[0]) << "[";
        for (size_t i = 1; i < op.operands.size(); ++i)
          os_ << (i > 1 ? ", " : "") << v(op.operands[i]);
        os_ << "] : " << type_to_string(f.type_of(op.operands[0]));
        break;
      }
      case Op::Store: {
        print_results(op);
        os_ << "store " << v(op.operands[0]) << ", " << v(op.operands[1])
            << "[";
        for (size_t i = 2; i < op.operands.size(); ++i)
          os_ << (i > 2 ? ", " : "") << v(op.operands[i]);
        os_ << "] : " << type_to_string(f.type_of(op.operands[1]));
        break;
      }
      case Op::If: {
        print_results(op);
        os_ << "scf.if " << v(op.operands[0]);
        if (!op.results.empty())
          os_ << " -> " << type_to_string(f.type_of(op.results[0]));
        os_ << " {\n";
        print_block(op.regions[0], depth + 1);
        indent(depth);
        os_ << "}";
        if (op.regions.size() > 1) {
          os_ << " else {\n";
          print_block(op.regions[1], depth + 1);
          indent(depth);
          os_ << "}";
        }
        print_attrs_suffix(op);
        return;
      }
      case Op::For: {
        print_results(op);
        os_ << "scf.for " << v(op.regions[0].args[0]) << " = " << op.lower
            << " to " << op.upper << " step " << op.step;
        if (!op.operands.empty()) {
          os_ << " iter_args(";
          for (size_t i = 0; i < op.operands.size(); ++i) {
            if (i) os_ << ", ";
            os_ << v(op.regions[0].args[i + 1]) << " = " << v(op.operands[i]);
          }
          os_ << ")";
        }
        if (!op.results.empty()) {
          os_ << " -> ";
          for (size_t i = 0; i < op.results.size(); ++i)
            os_ << (i ? ", " : "") << type_to_string(f.type_of(op.results[i]));
        }
        os_ << " {\n";
        print_block(op.regions[0], depth + 1);
        indent(depth);
        os_ << "}";
        print_attrs_suffix(op);
        return;
      }
      case Op::Yield:
        os_ << "yield";
        for (size_t i = 0; i < op.operands.size(); ++i)
          os_ << (i ? "," : "") << " " << v(op.operands[i]);
        if (!op.operands.empty())
          os_ << " : " << type_to_string(f.type_of(op.operands[0]));
        break;
      case Op::Return:
        os_ << "return";
        if (!op.operands.empty())
          os_ << " " << v(op.operands[0]) << " : "
              << type_to_string(f.type_of(op.operands[0]));
        break;
    }
    print_attrs_suffix(op);
  }

  std::ostringstream &os_;
  const Function *fn_ = nullptr;
};

}  // namespace detail

inline std::string print(const Module &m) {
  std::ostringstream os;
  detail::Printer(os).print_module(m);
  return os.str();
}

inline std::string print(const Function &f) {
  std::ostringstream os;
  detail::Printer p(os);
  p.print_function(f);
  return os.str();
}

inline std::string to_string(const Type &t) { return detail::type_to_string(t); }

}  // namespace atlaas
