// SPDX-License-Identifier: Apache-2.0

#include "ownsan/text.h"

#include <cctype>
#include <map>
#include <set>
#include <sstream>

namespace ownsan {

namespace {

enum class Tok { Ident, Value, Func, Int, Punct, Arrow, Hash, Newline, End };

struct Token {
  Tok kind;
  std::string text;
  int64_t num = 0;
  int line = 0;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<Token> lex(const std::string &text) {
  std::vector<Token> out;
  int line = 1;
  size_t i = 0;
  const size_t n = text.size();
  auto word = [&](size_t from) {
    size_t j = from;
    while (j < n && ident_char(text[j]))
      ++j;
    return j;
  };
  while (i < n) {
    char c = text[i];
    if (c == '\n') {
      out.push_back({Tok::Newline, "\n", 0, line});
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r') {
      ++i;
      continue;
    }
    if (c == ';') {
      while (i < n && text[i] != '\n')
        ++i;
      continue;
    }
    if (c == '%' || c == '@' || c == '#') {
      size_t j = word(i + 1);
      if (j == i + 1)
        throw ParseError(line, std::string("expected name after '") + c + "'");
      Tok k = c == '%' ? Tok::Value : (c == '@' ? Tok::Func : Tok::Hash);
      out.push_back({k, text.substr(i + 1, j - i - 1), 0, line});
      i = j;
      continue;
    }
    if (c == '-' && i + 1 < n && text[i + 1] == '>') {
      out.push_back({Tok::Arrow, "->", 0, line});
      i += 2;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '-' && i + 1 < n && std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
      size_t j = i + 1;
      while (j < n && std::isdigit(static_cast<unsigned char>(text[j])))
        ++j;
      if (j < n && ident_start(text[j]))
        throw ParseError(line, "malformed integer literal");
      Token t{Tok::Int, text.substr(i, j - i), 0, line};
      try {
        t.num = std::stoll(t.text);
      } catch (const std::exception &) {
        throw ParseError(line, "integer literal out of range");
      }
      out.push_back(t);
      i = j;
      continue;
    }
    if (ident_start(c)) {
      size_t j = word(i);
      out.push_back({Tok::Ident, text.substr(i, j - i), 0, line});
      i = j;
      continue;
    }
    if (std::string("(){},:=!.").find(c) != std::string::npos) {
      out.push_back({Tok::Punct, std::string(1, c), 0, line});
      ++i;
      continue;
    }
    throw ParseError(line, std::string("unexpected character '") + c + "'");
  }
  out.push_back({Tok::End, "", 0, line});
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, std::vector<Annotation> *annots)
      : toks_(std::move(toks)), annots_(annots) {}

  Program run() {
    Program p;
    skip_newlines();
    while (peek().kind != Tok::End) {
      p.functions.push_back(function());
      skip_newlines();
    }
    return p;
  }

  // Instructions whose source carried an explicit !rawptr.
  std::set<std::pair<std::string, size_t>> explicit_rawptr;

 private:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  std::vector<Annotation> *annots_;

  const Token &peek(size_t k = 0) const {
    size_t i = pos_ + k;
    return i < toks_.size() ? toks_[i] : toks_.back();
  }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (pos_ + 1 < toks_.size())
      ++pos_;
    return t;
  }
  bool is_punct(const char *p, size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool is_ident(const char *w, size_t k = 0) const {
    return peek(k).kind == Tok::Ident && peek(k).text == w;
  }
  [[noreturn]] void fail(const std::string &msg) const {
    const Token &t = peek();
    std::string near = t.kind == Tok::Newline ? "end of line"
                       : t.kind == Tok::End   ? "end of input"
                                              : "'" + t.text + "'";
    throw ParseError(t.line, msg + " near " + near);
  }
  void expect_punct(const char *p) {
    if (!is_punct(p))
      fail(std::string("expected '") + p + "'");
    next();
  }
  std::string expect_ident(const char *what) {
    if (peek().kind != Tok::Ident)
      fail(std::string("expected ") + what);
    return next().text;
  }
  std::string expect_value(const char *what) {
    if (peek().kind != Tok::Value)
      fail(std::string("expected ") + what);
    return next().text;
  }
  ValueKind expect_kind() {
    std::string w = expect_ident("value kind");
    auto k = parse_kind(w);
    if (!k)
      throw ParseError(toks_[pos_ - 1].line, "unknown value kind '" + w + "'");
    return *k;
  }
  void skip_newlines() {
    while (peek().kind == Tok::Newline)
      next();
  }
  bool at_line_end() const {
    return peek().kind == Tok::Newline || peek().kind == Tok::End || is_punct("}");
  }

  Function function() {
    if (!is_ident("fn"))
      fail("expected 'fn'");
    Function f;
    f.line = next().line;
    f.name = expect_ident("function name");
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        Param prm;
        prm.name = expect_value("parameter");
        expect_punct(":");
        prm.kind = expect_kind();
        f.params.push_back(prm);
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    if (peek().kind == Tok::Arrow) {
      next();
      f.ret_kind = expect_kind();
    }
    if (is_ident("entry")) {
      next();
      f.is_entry = true;
    }
    expect_punct("{");
    body(f);
    expect_punct("}");
    if (!at_line_end() && peek().kind != Tok::End)
      fail("expected end of line after '}'");
    return f;
  }

  void body(Function &f) {
    for (;;) {
      skip_newlines();
      if (is_punct("}"))
        return;
      if (peek().kind == Tok::End)
        fail("unterminated function body");
      if (peek().kind == Tok::Hash) {
        annotation(f);
        continue;
      }
      if (peek().kind == Tok::Ident && is_punct(":", 1)) {
        Label l;
        l.name = next().text;
        next();
        l.index = f.instrs.size();
        f.labels.push_back(l);
        if (!at_line_end())
          fail("expected end of line after label");
        continue;
      }
      f.instrs.push_back(instruction(f));
      if (!at_line_end())
        fail("expected end of line");
    }
  }

  void annotation(Function &f) {
    const Token &h = next();
    if (!annots_)
      throw ParseError(h.line, "unexpected annotation line '#" + h.text + "'");
    Annotation a;
    a.function = f.name;
    a.index = f.instrs.size();
    a.tag = h.text;
    a.line = h.line;
    while (!at_line_end()) {
      const Token &t = next();
      switch (t.kind) {
      case Tok::Value:
        a.words.push_back("%" + t.text);
        break;
      case Tok::Func:
        a.words.push_back("@" + t.text);
        break;
      default:
        a.words.push_back(t.text);
      }
    }
    annots_->push_back(std::move(a));
  }

  Operand operand() {
    const Token &t = peek();
    switch (t.kind) {
    case Tok::Value:
      return Operand::value(next().text);
    case Tok::Func:
      return Operand::func(next().text);
    case Tok::Int:
      return Operand::lit(next().num);
    default:
      fail("expected operand");
    }
  }

  void comma() { expect_punct(","); }

  std::vector<Operand> arg_list() {
    std::vector<Operand> args;
    expect_punct("(");
    if (!is_punct(")")) {
      for (;;) {
        args.push_back(operand());
        if (is_punct(",")) {
          next();
          continue;
        }
        break;
      }
    }
    expect_punct(")");
    return args;
  }

  Instruction instruction(const Function &f) {
    Instruction in;
    in.line = peek().line;
    if (peek().kind == Tok::Value) {
      in.result = next().text;
      expect_punct("=");
    }
    std::string opname = expect_ident("opcode");
    auto op = parse_opcode(opname);
    if (!op)
      throw ParseError(in.line, "unknown opcode '" + opname + "'");
    in.op = *op;
    switch (in.op) {
    case Opcode::HeapAlloc:
    case Opcode::HeapAllocUninit:
    case Opcode::RawAlloc:
    case Opcode::VecPush:
    case Opcode::VecPop:
    case Opcode::BoxFromRaw:
    case Opcode::Copy:
    case Opcode::Move:
    case Opcode::Drop:
    case Opcode::Forget:
    case Opcode::EndScope:
    case Opcode::DerefRead:
      in.operands.push_back(operand());
      break;
    case Opcode::VecNew:
    case Opcode::ApiSetLen:
    case Opcode::Gep:
    case Opcode::DerefWrite:
      in.operands.push_back(operand());
      comma();
      in.operands.push_back(operand());
      break;
    case Opcode::ApiUnchecked:
      in.operands.push_back(operand());
      comma();
      in.aux = expect_ident("unchecked operation");
      comma();
      in.operands.push_back(operand());
      break;
    case Opcode::AsRaw:
      in.operands.push_back(operand());
      if (is_ident("count")) {
        next();
        in.operands.push_back(operand());
      }
      break;
    case Opcode::StoreField:
    case Opcode::LoadField: {
      in.operands.push_back(Operand::value(expect_value("owner value")));
      expect_punct(".");
      in.aux = expect_ident("field name");
      if (in.op == Opcode::StoreField) {
        comma();
        in.operands.push_back(operand());
      } else {
        if (!is_ident("as"))
          fail("expected 'as KIND' after load_field");
        next();
        in.result_kind = expect_kind();
      }
      break;
    }
    case Opcode::Null:
      break;
    case Opcode::Call:
      in.aux = expect_ident("callee name");
      in.operands = arg_list();
      break;
    case Opcode::ICall: {
      in.operands.push_back(Operand::value(expect_value("function value")));
      auto args = arg_list();
      in.operands.insert(in.operands.end(), args.begin(), args.end());
      if (!is_ident("sig"))
        fail("expected sig(...) on icall");
      next();
      expect_punct("(");
      Signature s;
      if (!is_punct(")") && peek().kind != Tok::Arrow) {
        for (;;) {
          s.params.push_back(expect_kind());
          if (is_punct(",")) {
            next();
            continue;
          }
          break;
        }
      }
      if (peek().kind == Tok::Arrow) {
        next();
        s.ret = expect_kind();
      }
      expect_punct(")");
      in.sig = s;
      break;
    }
    case Opcode::Ret:
      if (!at_line_end() && !is_punct("!"))
        in.operands.push_back(operand());
      break;
    case Opcode::Br:
      in.labels.push_back(expect_ident("label"));
      break;
    case Opcode::CondBr:
      in.operands.push_back(operand());
      comma();
      in.labels.push_back(expect_ident("label"));
      comma();
      in.labels.push_back(expect_ident("label"));
      break;
    }
    while (is_punct("!")) {
      int line = next().line;
      if (peek().kind != Tok::Ident)
        throw ParseError(line, "malformed attribute");
      std::string a = next().text;
      if (a == "unsafe")
        in.is_unsafe = true;
      else if (a == "rawptr")
        explicit_rawptr.insert({f.name, f.instrs.size()});
      else
        throw ParseError(line, "malformed attribute '!" + a + "'");
    }
    return in;
  }
};

std::string operand_text(const Operand &o) {
  switch (o.tag) {
  case Operand::Tag::Value:
    return "%" + o.name;
  case Operand::Tag::Func:
    return "@" + o.name;
  case Operand::Tag::Literal:
    return std::to_string(o.literal);
  }
  return "?";
}

Program parse_impl(const std::string &text, std::vector<Annotation> *annots) {
  Parser ps(lex(text), annots);
  Program p = ps.run();
  resolve_program(p);
  for (const auto &f : p.functions)
    for (size_t i = 0; i < f.instrs.size(); ++i)
      if (ps.explicit_rawptr.count({f.name, i}) && !f.instrs[i].is_rawptr)
        throw ParseError(f.instrs[i].line,
                         "malformed attribute '!rawptr': no raw operand or result");
  return p;
}

} // namespace

Program parse_program(const std::string &text) { return parse_impl(text, nullptr); }

Program parse_annotated(const std::string &text, std::vector<Annotation> &out) {
  return parse_impl(text, &out);
}

void resolve_program(Program &p) {
  std::map<std::string, const Function *> fns;
  std::set<std::string> taken;
  for (const auto &f : p.functions) {
    fns.emplace(f.name, &f);
    for (const auto &in : f.instrs)
      for (const auto &o : in.operands)
        if (o.tag == Operand::Tag::Func)
          taken.insert(o.name);
  }
  std::map<std::string, std::optional<ValueKind>> ret_kinds;
  for (const auto &f : p.functions)
    ret_kinds.emplace(f.name, f.ret_kind);

  for (auto &f : p.functions) {
    f.address_taken = taken.count(f.name) > 0;
    std::map<std::string, ValueKind> vars;
    for (const auto &prm : f.params)
      vars.emplace(prm.name, prm.kind);

    auto operand_kind = [&](const Operand &o) -> std::optional<ValueKind> {
      switch (o.tag) {
      case Operand::Tag::Literal:
        return ValueKind::Scalar;
      case Operand::Tag::Func:
        return ValueKind::Func;
      case Operand::Tag::Value: {
        auto it = vars.find(o.name);
        if (it == vars.end())
          return std::nullopt;
        return it->second;
      }
      }
      return std::nullopt;
    };

    auto result_kind = [&](const Instruction &in) -> std::optional<ValueKind> {
      switch (in.op) {
      case Opcode::HeapAlloc:
      case Opcode::HeapAllocUninit:
      case Opcode::VecNew:
      case Opcode::Move:
      case Opcode::BoxFromRaw:
        return ValueKind::Owner;
      case Opcode::AsRaw:
      case Opcode::RawAlloc:
      case Opcode::Null:
        return ValueKind::Raw;
      case Opcode::ApiUnchecked:
      case Opcode::DerefRead:
        return ValueKind::Scalar;
      case Opcode::Copy:
      case Opcode::Gep:
        return in.operands.empty() ? std::nullopt : operand_kind(in.operands[0]);
      case Opcode::LoadField:
        return in.result_kind;
      case Opcode::Call: {
        auto it = ret_kinds.find(in.aux);
        if (it == ret_kinds.end() || !it->second)
          return ValueKind::Scalar;
        return *it->second;
      }
      case Opcode::ICall:
        return in.sig && in.sig->ret ? *in.sig->ret : ValueKind::Scalar;
      default:
        return ValueKind::Scalar;
      }
    };

    for (bool changed = true; changed;) {
      changed = false;
      for (auto &in : f.instrs) {
        if (!in.result)
          continue;
        auto k = result_kind(in);
        if (!k)
          continue;
        if (!vars.count(*in.result)) {
          vars.emplace(*in.result, *k);
          changed = true;
        }
      }
    }

    for (auto &in : f.instrs) {
      for (auto &o : in.operands) {
        auto k = operand_kind(o);
        if (!k)
          throw ParseError(in.line, "unknown value '%" + o.name + "' in function '" +
                                        f.name + "'");
        o.kind = *k;
      }
      if (in.result) {
        auto k = result_kind(in);
        if (!k)
          throw ParseError(in.line, "cannot determine kind of '%" + *in.result + "'");
        in.result_kind = *k;
      } else if (in.op != Opcode::LoadField) {
        in.result_kind = ValueKind::Scalar;
      }
      bool raw = in.result && in.result_kind == ValueKind::Raw;
      for (const auto &o : in.operands)
        raw = raw || o.kind == ValueKind::Raw;
      in.is_rawptr = raw;
    }
  }
}

std::string print_instruction(const Instruction &in) {
  std::ostringstream os;
  if (in.result)
    os << "%" << *in.result << " = ";
  os << opcode_name(in.op);
  const auto &ops = in.operands;
  auto list = [&](size_t from) {
    for (size_t i = from; i < ops.size(); ++i)
      os << (i == from ? "" : ", ") << operand_text(ops[i]);
  };
  switch (in.op) {
  case Opcode::ApiUnchecked:
    os << " " << operand_text(ops.at(0)) << ", " << in.aux << ", " << operand_text(ops.at(1));
    break;
  case Opcode::AsRaw:
    os << " " << operand_text(ops.at(0));
    if (ops.size() > 1)
      os << " count " << operand_text(ops[1]);
    break;
  case Opcode::StoreField:
    os << " %" << ops.at(0).name << "." << in.aux << ", " << operand_text(ops.at(1));
    break;
  case Opcode::LoadField:
    os << " %" << ops.at(0).name << "." << in.aux << " as " << kind_name(in.result_kind);
    break;
  case Opcode::Call:
    os << " " << in.aux << "(";
    list(0);
    os << ")";
    break;
  case Opcode::ICall:
    os << " " << operand_text(ops.at(0)) << "(";
    list(1);
    os << ") " << signature_string(*in.sig);
    break;
  case Opcode::Br:
    os << " " << in.labels.at(0);
    break;
  case Opcode::CondBr:
    os << " " << operand_text(ops.at(0)) << ", " << in.labels.at(0) << ", " << in.labels.at(1);
    break;
  default:
    if (!ops.empty()) {
      os << " ";
      list(0);
    }
  }
  if (in.is_unsafe)
    os << " !unsafe";
  if (in.is_rawptr)
    os << " !rawptr";
  return os.str();
}

std::string print_program(const Program &p) { return print_program_with(p, nullptr); }

std::string print_program_with(const Program &p, const LineHook &before) {
  std::ostringstream os;
  for (size_t fi = 0; fi < p.functions.size(); ++fi) {
    const auto &f = p.functions[fi];
    if (fi)
      os << "\n";
    os << "fn " << f.name << "(";
    for (size_t i = 0; i < f.params.size(); ++i)
      os << (i ? ", " : "") << "%" << f.params[i].name << ": " << kind_name(f.params[i].kind);
    os << ")";
    if (f.ret_kind)
      os << " -> " << kind_name(*f.ret_kind);
    if (f.is_entry)
      os << " entry";
    os << " {\n";
    for (size_t i = 0; i <= f.instrs.size(); ++i) {
      for (const auto &l : f.labels)
        if (l.index == i)
          os << l.name << ":\n";
      if (i == f.instrs.size())
        continue;
      if (before)
        for (const auto &extra : before(f.name, i))
          os << "  " << extra << "\n";
      os << "  " << print_instruction(f.instrs[i]) << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

} // namespace ownsan
