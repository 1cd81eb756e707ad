#pragma once

#include <cctype>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

#include "atlaas/ir.hpp"
#include "atlaas/verify.hpp"

namespace atlaas {

struct ParseError : std::runtime_error {
  int line, col;
  ParseError(int line, int col, const std::string &msg)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
};

struct VerifyError : std::runtime_error {
  std::vector<Violation> violations;
  explicit VerifyError(std::vector<Violation> vs)
      : std::runtime_error("verification failed:\n" + violations_to_string(vs)),
        violations(std::move(vs)) {}
};

namespace detail {

enum class Tok {
  Ident, Percent, Int, String, At, Arrow,
  LParen, RParen, LBrace, RBrace, LBracket, RBracket,
  Lt, Gt, Comma, Eq, Colon, End,
};

struct Token {
  Tok kind;
  std::string text;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { advance(); }

  const Token &peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  [[noreturn]] void error(const std::string &msg) {
    throw ParseError(line_, col_, msg);
  }

  char cur() const { return pos_ < src_.size() ? src_[pos_] : '\0'; }
  char lookahead() const {
    return pos_ + 1 < src_.size() ? src_[pos_ + 1] : '\0';
  }
  void bump() {
    if (cur() == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_trivia() {
    for (;;) {
      while (std::isspace(static_cast<unsigned char>(cur()))) bump();
      if (cur() == '/' && lookahead() == '/') {
        while (cur() && cur() != '\n') bump();
        continue;
      }
      break;
    }
  }

  static bool ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
  }
  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
  }

  void advance() {
    skip_trivia();
    tok_.line = line_;
    tok_.col = col_;
    tok_.text.clear();
    char c = cur();
    if (!c) {
      tok_.kind = Tok::End;
      return;
    }
    if (c == '-' && lookahead() == '>') {
      bump();
      bump();
      tok_.kind = Tok::Arrow;
      return;
    }
    if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      tok_.kind = Tok::Int;
      if (c == '-') {
        tok_.text += c;
        bump();
      }
      if (!std::isdigit(static_cast<unsigned char>(cur())))
        error("expected digits after '-'");
      while (std::isdigit(static_cast<unsigned char>(cur()))) {
        tok_.text += cur();
        bump();
      }
      return;
    }
    if (c == '%') {
      bump();
      if (!ident_start(cur()) && !std::isdigit(static_cast<unsigned char>(cur())))
        error("expected value name after '%'");
      while (ident_char(cur())) {
        tok_.text += cur();
        bump();
      }
      tok_.kind = Tok::Percent;
      return;
    }
    if (c == '"') {
      bump();
      while (cur() && cur() != '"') {
        if (cur() == '\\') {
          bump();
          if (!cur()) error("unterminated string");
        }
        tok_.text += cur();
        bump();
      }
      if (cur() != '"') error("unterminated string");
      bump();
      tok_.kind = Tok::String;
      return;
    }
    if (ident_start(c)) {
      while (ident_char(cur())) {
        tok_.text += cur();
        bump();
      }
      tok_.kind = Tok::Ident;
      return;
    }
    switch (c) {
      case '@': tok_.kind = Tok::At; break;
      case '(': tok_.kind = Tok::LParen; break;
      case ')': tok_.kind = Tok::RParen; break;
      case '{': tok_.kind = Tok::LBrace; break;
      case '}': tok_.kind = Tok::RBrace; break;
      case '[': tok_.kind = Tok::LBracket; break;
      case ']': tok_.kind = Tok::RBracket; break;
      case '<': tok_.kind = Tok::Lt; break;
      case '>': tok_.kind = Tok::Gt; break;
      case ',': tok_.kind = Tok::Comma; break;
      case '=': tok_.kind = Tok::Eq; break;
      case ':': tok_.kind = Tok::Colon; break;
      default: error(std::string("unexpected character '") + c + "'");
    }
    tok_.text = c;
    bump();
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {}

  Module parse_module() {
    Module m;
    while (at_ident("descriptor")) m.descriptors.push_back(parse_descriptor());
    while (at_ident("func")) m.functions.push_back(parse_function());
    expect(Tok::End, "end of input");
    return m;
  }

 private:
  [[noreturn]] void error(const Token &t, const std::string &msg) {
    throw ParseError(t.line, t.col, msg);
  }

  bool at_ident(std::string_view kw) const {
    return lex_.peek().kind == Tok::Ident && lex_.peek().text == kw;
  }

  Token expect(Tok kind, const std::string &what) {
    if (lex_.peek().kind != kind)
      error(lex_.peek(), "expected " + what + ", got '" + lex_.peek().text + "'");
    return lex_.next();
  }

  Token expect_ident(std::string_view kw) {
    if (!at_ident(kw))
      error(lex_.peek(),
            "expected '" + std::string(kw) + "', got '" + lex_.peek().text + "'");
    return lex_.next();
  }

  int64_t expect_int() {
    Token t = expect(Tok::Int, "integer");
    return std::strtoll(t.text.c_str(), nullptr, 10);
  }

  // -- descriptors ---------------------------------------------------------

  Descriptor parse_descriptor() {
    expect_ident("descriptor");
    Descriptor d;
    d.instruction = expect(Tok::String, "instruction name").text;
    expect(Tok::LBrace, "'{'");
    if (at_ident("controls")) {
      lex_.next();
      expect(Tok::Colon, "':'");
      while (lex_.peek().kind == Tok::String) {
        std::string key = lex_.next().text;
        expect(Tok::Eq, "'='");
        expect(Tok::LBracket, "'['");
        std::vector<int64_t> vals;
        vals.push_back(expect_int());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.next();
          vals.push_back(expect_int());
        }
        expect(Tok::RBracket, "']'");
        d.fixed_controls[key] = std::move(vals);
      }
    }
    if (at_ident("asvs")) {
      lex_.next();
      expect(Tok::Colon, "':'");
      while (lex_.peek().kind == Tok::String) d.asvs.push_back(lex_.next().text);
    }
    if (at_ident("encoding")) {
      lex_.next();
      expect(Tok::Colon, "':'");
      while (lex_.peek().kind == Tok::String) {
        EncodingField f;
        f.name = lex_.next().text;
        expect(Tok::Eq, "'='");
        f.arg = expect(Tok::String, "argument name").text;
        expect(Tok::LBracket, "'['");
        f.hi = static_cast<unsigned>(expect_int());
        expect(Tok::Colon, "':'");
        f.lo = static_cast<unsigned>(expect_int());
        expect(Tok::RBracket, "']'");
        if (f.lo > f.hi) error(lex_.peek(), "encoding field lo > hi");
        d.encoding.push_back(std::move(f));
      }
    }
    if (at_ident("macro")) {
      lex_.next();
      expect(Tok::Colon, "':'");
      MacroSpec m;
      m.primitive = expect(Tok::String, "primitive instruction").text;
      expect_ident("bounds");
      while (lex_.peek().kind == Tok::String)
        m.bound_regs.push_back(lex_.next().text);
      d.macro = std::move(m);
    }
    expect(Tok::RBrace, "'}'");
    return d;
  }

  // -- types ----------------------------------------------------------------

  Type parse_type() {
    Token t = expect(Tok::Ident, "type");
    if (t.text == "index") return Type::index();
    if (t.text == "memref") {
      expect(Tok::Lt, "'<'");
      // Shape tokens interleave ints and 'x...' runs; re-split the raw text.
      std::string raw;
      while (lex_.peek().kind != Tok::Gt && lex_.peek().kind != Tok::End)
        raw += lex_.next().text;
      expect(Tok::Gt, "'>'");
      std::vector<std::string> parts;
      std::string cur;
      for (char c : raw) {
        if (c == 'x') {
          parts.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      parts.push_back(cur);
      if (parts.size() < 2 || parts.back().size() < 2 || parts.back()[0] != 'i')
        error(t, "malformed memref type");
      std::vector<int64_t> shape;
      for (size_t i = 0; i + 1 < parts.size(); ++i)
        shape.push_back(std::strtoll(parts[i].c_str(), nullptr, 10));
      unsigned w =
          static_cast<unsigned>(std::strtoul(parts.back().c_str() + 1, nullptr, 10));
      return Type::memref(std::move(shape), w);
    }
    if (t.text.size() > 1 && t.text[0] == 'i') {
      char *end = nullptr;
      unsigned long w = std::strtoul(t.text.c_str() + 1, &end, 10);
      if (end && *end == '\0') return Type::integer(static_cast<unsigned>(w));
    }
    error(t, "unknown type '" + t.text + "'");
  }

  // -- annotations -----------------------------------------------------------

  AnnValue parse_ann_value() {
    if (lex_.peek().kind == Tok::Int) return expect_int();
    if (lex_.peek().kind == Tok::String) return lex_.next().text;
    if (lex_.peek().kind == Tok::LBracket) {
      lex_.next();
      std::vector<int64_t> vals;
      if (lex_.peek().kind != Tok::RBracket) {
        vals.push_back(expect_int());
        while (lex_.peek().kind == Tok::Comma) {
          lex_.next();
          vals.push_back(expect_int());
        }
      }
      expect(Tok::RBracket, "']'");
      return vals;
    }
    error(lex_.peek(), "expected annotation value");
  }

  Annotations parse_annotations() {
    Annotations a;
    expect(Tok::LBrace, "'{'");
    while (lex_.peek().kind == Tok::Ident) {
      std::string key = lex_.next().text;
      expect(Tok::Eq, "'='");
      a[key] = parse_ann_value();
      if (lex_.peek().kind == Tok::Comma) lex_.next();
    }
    expect(Tok::RBrace, "'}'");
    return a;
  }

  bool at_annotation_dict() {
    // After an op, '{' introduces an annotation dict (region braces are
    // consumed by the structured-op parsers before we get here).
    return lex_.peek().kind == Tok::LBrace;
  }

  // -- functions --------------------------------------------------------------

  struct Scope {
    std::vector<std::pair<std::string, ValueId>> names;
  };

  ValueId define_value(Function &f, const Token &tok, const Type &t) {
    for (const auto &scope : scopes_)
      for (const auto &[n, v] : scope.names)
        if (n == tok.text)
          error(tok, "value %" + tok.text + " redefined");
    if (f.has_value_named(tok.text))
      error(tok, "value %" + tok.text + " redefined");
    ValueId v = f.make_value(tok.text, t);
    scopes_.back().names.emplace_back(tok.text, v);
    return v;
  }

  ValueId lookup(const Token &tok) {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      for (const auto &[n, v] : it->names)
        if (n == tok.text) return v;
    error(tok, "use of undefined value %" + tok.text);
  }

  Function parse_function() {
    expect_ident("func");
    expect(Tok::At, "'@'");
    Function f;
    f.name = expect(Tok::Ident, "function name").text;
    scopes_.clear();
    scopes_.emplace_back();
    expect(Tok::LParen, "'('");
    for (;;) {
      Token name = expect(Tok::Percent, "argument name");
      expect(Tok::Colon, "':'");
      Type t = parse_type();
      Annotations attrs;
      if (lex_.peek().kind == Tok::LBrace) attrs = parse_annotations();
      ValueId v = define_value(f, name, t);
      f.args.push_back(FuncArg{v, std::move(attrs)});
      if (lex_.peek().kind != Tok::Comma) break;
      lex_.next();
    }
    expect(Tok::RParen, "')'");
    if (lex_.peek().kind == Tok::LBrace && starts_annotation_dict())
      f.attrs = parse_annotations();
    expect(Tok::LBrace, "'{'");
    parse_block_ops(f, f.body, nullptr);
    expect(Tok::RBrace, "'}'");
    return f;
  }

  // Distinguishes `{key = ...}` from a function body. A body's first token is
  // a value, an opcode, or '}'; an attribute dict opens with `ident =`.
  bool starts_annotation_dict() {
    Lexer probe = lex_;
    probe.next();  // '{'
    if (probe.peek().kind != Tok::Ident) return false;
    probe.next();
    return probe.peek().kind == Tok::Eq;
  }

  void parse_block_ops(Function &f, Block &b, const Operation *parent) {
    while (lex_.peek().kind != Tok::RBrace && lex_.peek().kind != Tok::End)
      b.ops.push_back(parse_op(f, parent));
  }

  Op opcode_from(const Token &t) {
    static const std::pair<const char *, Op> table[] = {
        {"const", Op::Const},   {"extsi", Op::Extsi}, {"extui", Op::Extui},
        {"trunci", Op::Trunci}, {"addi", Op::Addi},   {"subi", Op::Subi},
        {"muli", Op::Muli},     {"andi", Op::Andi},   {"ori", Op::Ori},
        {"xori", Op::Xori},     {"shli", Op::Shli},   {"shrsi", Op::Shrsi},
        {"shrui", Op::Shrui},   {"cmpi", Op::Cmpi},   {"select", Op::Select},
        {"load", Op::Load},     {"store", Op::Store}, {"scf.if", Op::If},
        {"scf.for", Op::For},   {"yield", Op::Yield}, {"return", Op::Return},
    };
    for (const auto &[name, op] : table)
      if (t.text == name) return op;
    error(t, "unknown opcode '" + t.text + "'");
  }

  CmpPred pred_from(const Token &t) {
    static const std::pair<const char *, CmpPred> table[] = {
        {"eq", CmpPred::Eq},   {"ne", CmpPred::Ne},   {"slt", CmpPred::Slt},
        {"sle", CmpPred::Sle}, {"sgt", CmpPred::Sgt}, {"sge", CmpPred::Sge},
        {"ult", CmpPred::Ult}, {"ule", CmpPred::Ule}, {"ugt", CmpPred::Ugt},
        {"uge", CmpPred::Uge},
    };
    for (const auto &[name, p] : table)
      if (t.text == name) return p;
    error(t, "unknown cmpi predicate '" + t.text + "'");
  }

  Operation parse_op(Function &f, const Operation *parent) {
    std::vector<Token> result_names;
    if (lex_.peek().kind == Tok::Percent) {
      result_names.push_back(lex_.next());
      while (lex_.peek().kind == Tok::Comma) {
        lex_.next();
        result_names.push_back(expect(Tok::Percent, "result name"));
      }
      expect(Tok::Eq, "'='");
    }
    Token opcode_tok = expect(Tok::Ident, "opcode");
    Op op = opcode_from(opcode_tok);
    Operation out;
    out.op = op;

    auto single_result = [&](Type t) {
      if (result_names.size() != 1)
        error(opcode_tok, std::string(op_name(op)) + " defines one result");
      out.results.push_back(define_value(f, result_names[0], t));
    };
    auto no_result = [&] {
      if (!result_names.empty())
        error(opcode_tok, std::string(op_name(op)) + " defines no result");
    };

    switch (op) {
      case Op::Const: {
        Token vtok = expect(Tok::Int, "constant value");
        expect(Tok::Colon, "':'");
        Type t = parse_type();
        if (!t.is_int() && !t.is_index())
          error(vtok, "const must be integer or index typed");
        s128 raw = 0;
        bool neg = vtok.text[0] == '-';
        for (char c : vtok.text)
          if (std::isdigit(static_cast<unsigned char>(c)))
            raw = raw * 10 + (c - '0');
        if (neg) raw = -raw;
        out.value = BitVec::make_signed(t.is_index() ? 64 : t.width, raw);
        single_result(t);
        break;
      }
      case Op::Extsi:
      case Op::Extui:
      case Op::Trunci: {
        out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        expect(Tok::Colon, "':'");
        parse_type();  // source type is recorded on the operand itself
        expect_ident("to");
        single_result(parse_type());
        break;
      }
      case Op::Addi: case Op::Subi: case Op::Muli: case Op::Andi:
      case Op::Ori: case Op::Xori: case Op::Shli: case Op::Shrsi:
      case Op::Shrui: {
        out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        expect(Tok::Comma, "','");
        out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        expect(Tok::Colon, "':'");
        single_result(parse_type());
        break;
      }
      case Op::Cmpi: {
        out.pred = pred_from(expect(Tok::Ident, "predicate"));
        expect(Tok::Comma, "','");
        out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        expect(Tok::Comma, "','");
        out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        expect(Tok::Colon, "':'");
        parse_type();
        single_result(Type::integer(1));
        break;
      }
      case Op::Select: {
        for (int i = 0; i < 3; ++i) {
          if (i) expect(Tok::Comma, "','");
          out.operands.push_back(lookup(expect(Tok::Percent, "operand")));
        }
        expect(Tok::Colon, "':'");
        single_result(parse_type());
        break;
      }
      case Op::Load: {
        out.operands.push_back(lookup(expect(Tok::Percent, "memref")));
        parse_index_list(f, out);
        expect(Tok::Colon, "':'");
        Type t = parse_type();
        if (!t.is_memref()) error(opcode_tok, "load expects a memref type");
        single_result(Type::integer(t.width));
        break;
      }
      case Op::Store: {
        out.operands.push_back(lookup(expect(Tok::Percent, "value")));
        expect(Tok::Comma, "','");
        out.operands.push_back(lookup(expect(Tok::Percent, "memref")));
        parse_index_list(f, out);
        expect(Tok::Colon, "':'");
        Type t = parse_type();
        if (!t.is_memref()) error(opcode_tok, "store expects a memref type");
        single_result(t);
        break;
      }
      case Op::If: {
        out.operands.push_back(lookup(expect(Tok::Percent, "condition")));
        std::vector<Type> result_types;
        if (lex_.peek().kind == Tok::Arrow) {
          lex_.next();
          result_types.push_back(parse_type());
        }
        if (result_names.size() != result_types.size())
          error(opcode_tok, "scf.if result binding does not match '->' types");
        for (size_t i = 0; i < result_types.size(); ++i)
          out.results.push_back(define_value(f, result_names[i], result_types[i]));
        out.regions.emplace_back();
        expect(Tok::LBrace, "'{'");
        scopes_.emplace_back();
        parse_block_ops(f, out.regions[0], &out);
        scopes_.pop_back();
        expect(Tok::RBrace, "'}'");
        if (at_ident("else")) {
          lex_.next();
          out.regions.emplace_back();
          expect(Tok::LBrace, "'{'");
          scopes_.emplace_back();
          parse_block_ops(f, out.regions[1], &out);
          scopes_.pop_back();
          expect(Tok::RBrace, "'}'");
        }
        if (at_annotation_dict()) out.attrs = parse_annotations();
        return out;
      }
      case Op::For: {
        Token iv_tok = expect(Tok::Percent, "induction variable");
        expect(Tok::Eq, "'='");
        out.lower = expect_int();
        expect_ident("to");
        out.upper = expect_int();
        expect_ident("step");
        out.step = expect_int();
        // Init values resolve in the enclosing scope, before the body scope
        // opens.
        std::vector<std::pair<Token, ValueId>> iters;
        if (at_ident("iter_args")) {
          lex_.next();
          expect(Tok::LParen, "'('");
          for (;;) {
            Token iter = expect(Tok::Percent, "iter_arg");
            expect(Tok::Eq, "'='");
            ValueId init_v = lookup(expect(Tok::Percent, "init value"));
            iters.emplace_back(iter, init_v);
            if (lex_.peek().kind != Tok::Comma) break;
            lex_.next();
          }
          expect(Tok::RParen, "')'");
        }
        std::vector<Type> result_types;
        if (lex_.peek().kind == Tok::Arrow) {
          lex_.next();
          result_types.push_back(parse_type());
          while (lex_.peek().kind == Tok::Comma) {
            lex_.next();
            result_types.push_back(parse_type());
          }
        }
        out.regions.emplace_back();
        scopes_.emplace_back();
        out.regions[0].args.push_back(define_value(f, iv_tok, Type::index()));
        for (auto &[iter_tok, init_v] : iters) {
          out.operands.push_back(init_v);
          out.regions[0].args.push_back(
              define_value(f, iter_tok, f.type_of(init_v)));
        }
        expect(Tok::LBrace, "'{'");
        parse_block_ops(f, out.regions[0], &out);
        expect(Tok::RBrace, "'}'");
        scopes_.pop_back();
        if (result_names.size() != result_types.size())
          error(opcode_tok, "scf.for result binding does not match '->' types");
        for (size_t i = 0; i < result_types.size(); ++i)
          out.results.push_back(define_value(f, result_names[i], result_types[i]));
        if (at_annotation_dict()) out.attrs = parse_annotations();
        return out;
      }
      case Op::Yield: {
        no_result();
        while (lex_.peek().kind == Tok::Percent) {
          out.operands.push_back(lookup(lex_.next()));
          if (lex_.peek().kind != Tok::Comma) break;
          lex_.next();
        }
        if (lex_.peek().kind == Tok::Colon) {
          lex_.next();
          parse_type();
        }
        break;
      }
      case Op::Return: {
        no_result();
        if (lex_.peek().kind == Tok::Percent) {
          out.operands.push_back(lookup(lex_.next()));
          expect(Tok::Colon, "':'");
          parse_type();
        }
        break;
      }
    }
    if (at_annotation_dict()) out.attrs = parse_annotations();
    return out;
  }

  void parse_index_list(Function &f, Operation &out) {
    expect(Tok::LBracket, "'['");
    for (;;) {
      out.operands.push_back(lookup(expect(Tok::Percent, "index")));
      if (lex_.peek().kind != Tok::Comma) break;
      lex_.next();
    }
    expect(Tok::RBracket, "']'");
  }

  Lexer lex_;
  std::vector<Scope> scopes_;
};

}  // namespace detail

/// Parses textual IR without running the verifier.
inline Module parse_module_unverified(std::string_view text) {
  return detail::Parser(text).parse_module();
}

/// Parses textual IR and verifies the result; throws ParseError or VerifyError.
inline Module parse_module(std::string_view text) {
  Module m = parse_module_unverified(text);
  auto violations = verify(m);
  if (!violations.empty()) throw VerifyError(std::move(violations));
  return m;
}

}  // namespace atlaas
