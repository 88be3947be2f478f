// SPDX-License-Identifier: Apache-2.0

#include "ownsan/validate.h"

#include <map>
#include <set>

#include "ownsan/dataflow.h"

namespace ownsan {

namespace {

const std::set<std::string> kUncheckedOps = {"add", "sub", "mul", "neg", "shl", "shr"};

bool produces_value(Opcode op) {
  switch (op) {
  case Opcode::HeapAlloc:
  case Opcode::HeapAllocUninit:
  case Opcode::VecNew:
  case Opcode::ApiUnchecked:
  case Opcode::AsRaw:
  case Opcode::RawAlloc:
  case Opcode::BoxFromRaw:
  case Opcode::Gep:
  case Opcode::Copy:
  case Opcode::LoadField:
  case Opcode::Move:
  case Opcode::DerefRead:
  case Opcode::Null:
    return true;
  default:
    return false;
  }
}

size_t operand_arity(Opcode op) {
  switch (op) {
  case Opcode::Null:
  case Opcode::Br:
    return 0;
  case Opcode::VecNew:
  case Opcode::ApiSetLen:
  case Opcode::ApiUnchecked:
  case Opcode::Gep:
  case Opcode::DerefWrite:
  case Opcode::StoreField:
    return 2;
  default:
    return 1;
  }
}

class Checker {
 public:
  explicit Checker(const Program &p) : p_(p) {}

  std::vector<Diagnostic> run() {
    std::set<std::string> names;
    for (const auto &f : p_.functions)
      if (!names.insert(f.name).second)
        add(f.name, f.line, "duplicate function", "function '" + f.name + "' defined twice");
    auto entries = p_.entries();
    if (entries.empty())
      add("", 0, "missing entry", "no function marked entry and no 'main'");
    collect_fields();
    for (const auto &f : p_.functions)
      function(f);
    return std::move(out_);
  }

 private:
  const Program &p_;
  std::vector<Diagnostic> out_;
  std::map<std::string, ValueKind> field_kinds_;

  void add(const std::string &fn, int line, const std::string &rule, const std::string &msg) {
    out_.push_back({fn, line, rule, msg});
  }

  void collect_fields() {
    for (const auto &f : p_.functions)
      for (const auto &in : f.instrs) {
        if (in.op != Opcode::StoreField && in.op != Opcode::LoadField)
          continue;
        ValueKind k = in.op == Opcode::StoreField
                          ? (in.operands.size() > 1 ? in.operands[1].kind : ValueKind::Scalar)
                          : in.result_kind;
        auto [it, fresh] = field_kinds_.emplace(in.aux, k);
        if (!fresh && it->second != k)
          add(f.name, in.line, "field kind conflict",
              "field '" + in.aux + "' used as " + kind_name(k) + " and " +
                  kind_name(it->second));
      }
  }

  void want(const Function &f, const Instruction &in, size_t i,
            std::initializer_list<ValueKind> kinds) {
    if (i >= in.operands.size())
      return;
    const auto &o = in.operands[i];
    for (auto k : kinds)
      if (o.kind == k)
        return;
    std::string allowed;
    for (auto k : kinds)
      allowed += (allowed.empty() ? "" : "|") + std::string(kind_name(k));
    add(f.name, in.line, "operand kind mismatch",
        std::string(opcode_name(in.op)) + " operand " + std::to_string(i) + " is " +
            kind_name(o.kind) + ", expected " + allowed);
  }

  void args_match(const Function &f, const Instruction &in, const std::vector<ValueKind> &params,
                  size_t first, const std::string &what) {
    size_t nargs = in.operands.size() - first;
    if (nargs != params.size()) {
      add(f.name, in.line, "arity mismatch",
          what + " expects " + std::to_string(params.size()) + " arguments, got " +
              std::to_string(nargs));
      return;
    }
    for (size_t a = 0; a < nargs; ++a)
      if (in.operands[first + a].kind != params[a])
        add(f.name, in.line, "operand kind mismatch",
            what + " argument " + std::to_string(a) + " is " +
                kind_name(in.operands[first + a].kind) + ", expected " + kind_name(params[a]));
  }

  void function(const Function &f) {
    std::set<std::string> params;
    for (const auto &prm : f.params)
      if (!params.insert(prm.name).second)
        add(f.name, f.line, "duplicate parameter", "parameter '%" + prm.name + "' repeated");
    std::set<std::string> labels;
    for (const auto &l : f.labels)
      if (!labels.insert(l.name).second)
        add(f.name, f.line, "duplicate label", "label '" + l.name + "' repeated");

    std::map<std::string, ValueKind> var_kinds;
    for (const auto &prm : f.params)
      var_kinds.emplace(prm.name, prm.kind);
    for (const auto &in : f.instrs) {
      if (!in.result)
        continue;
      auto [it, fresh] = var_kinds.emplace(*in.result, in.result_kind);
      if (!fresh && it->second != in.result_kind)
        add(f.name, in.line, "kind conflict",
            "'%" + *in.result + "' defined as " + kind_name(in.result_kind) + " and " +
                kind_name(it->second));
    }

    ReachingDefs rd(f);
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      instruction(f, in);
      for (const auto &l : in.labels)
        if (!f.label_index(l))
          add(f.name, in.line, "unknown label", "branch to undefined label '" + l + "'");
      if (!rd.reachable(i))
        continue;
      for (const auto &o : in.operands)
        if (o.is_value() && !rd.must_be_defined(i, o.name))
          add(f.name, in.line, "use before definition",
              "'%" + o.name + "' may be used before it is defined");
    }
  }

  void instruction(const Function &f, const Instruction &in) {
    const auto &ops = in.operands;
    bool raw = in.result && in.result_kind == ValueKind::Raw;
    for (const auto &o : ops)
      raw = raw || o.kind == ValueKind::Raw;
    if (raw != in.is_rawptr)
      add(f.name, in.line, "rawptr attr mismatch",
          std::string(opcode_name(in.op)) +
              (raw ? " touches a raw value but lacks !rawptr" : " carries !rawptr without raw values"));

    if ((in.op == Opcode::ApiSetLen || in.op == Opcode::ApiUnchecked ||
         in.op == Opcode::BoxFromRaw) &&
        !in.is_unsafe)
      add(f.name, in.line, "unsafe attr required",
          std::string(opcode_name(in.op)) + " must carry !unsafe");

    if (produces_value(in.op) && !in.result)
      add(f.name, in.line, "missing result", std::string(opcode_name(in.op)) + " needs a result");
    if (!produces_value(in.op) && in.op != Opcode::Call && in.op != Opcode::ICall && in.result)
      add(f.name, in.line, "unexpected result",
          std::string(opcode_name(in.op)) + " produces no value");

    if (in.op != Opcode::Call && in.op != Opcode::ICall && in.op != Opcode::Ret &&
        in.op != Opcode::AsRaw) {
      if (ops.size() != operand_arity(in.op))
        add(f.name, in.line, "arity mismatch",
            std::string(opcode_name(in.op)) + " takes " + std::to_string(operand_arity(in.op)) +
                " operands");
    }

    using K = ValueKind;
    switch (in.op) {
    case Opcode::HeapAlloc:
    case Opcode::HeapAllocUninit:
    case Opcode::RawAlloc:
      want(f, in, 0, {K::Scalar});
      break;
    case Opcode::VecNew:
      want(f, in, 0, {K::Scalar});
      want(f, in, 1, {K::Scalar});
      break;
    case Opcode::VecPush:
    case Opcode::VecPop:
    case Opcode::Move:
    case Opcode::Drop:
    case Opcode::Forget:
    case Opcode::EndScope:
      want(f, in, 0, {K::Owner});
      break;
    case Opcode::ApiSetLen:
      want(f, in, 0, {K::Owner});
      want(f, in, 1, {K::Scalar});
      break;
    case Opcode::ApiUnchecked:
      want(f, in, 0, {K::Scalar});
      want(f, in, 1, {K::Scalar});
      if (!kUncheckedOps.count(in.aux))
        add(f.name, in.line, "unknown unchecked op", "api_unchecked op '" + in.aux + "'");
      break;
    case Opcode::AsRaw:
      if (ops.empty() || ops.size() > 2)
        add(f.name, in.line, "arity mismatch", "as_raw takes a pointer and optional count");
      want(f, in, 0, {K::Owner, K::Raw});
      want(f, in, 1, {K::Scalar});
      break;
    case Opcode::BoxFromRaw:
      want(f, in, 0, {K::Raw});
      break;
    case Opcode::Gep:
      want(f, in, 0, {K::Owner, K::Raw});
      want(f, in, 1, {K::Scalar});
      break;
    case Opcode::StoreField:
    case Opcode::LoadField:
      want(f, in, 0, {K::Owner});
      break;
    case Opcode::DerefRead:
      want(f, in, 0, {K::Owner, K::Raw});
      break;
    case Opcode::DerefWrite:
      want(f, in, 0, {K::Owner, K::Raw});
      want(f, in, 1, {K::Scalar});
      break;
    case Opcode::CondBr:
      want(f, in, 0, {K::Scalar});
      break;
    case Opcode::Call: {
      const Function *callee = p_.find(in.aux);
      if (!callee) {
        add(f.name, in.line, "unknown callee", "call to undefined function '" + in.aux + "'");
        break;
      }
      args_match(f, in, callee->signature().params, 0, "call " + in.aux);
      if (in.result && !callee->ret_kind)
        add(f.name, in.line, "unexpected result", "'" + in.aux + "' returns no value");
      break;
    }
    case Opcode::ICall:
      want(f, in, 0, {K::Func});
      if (!in.sig)
        break;
      args_match(f, in, in.sig->params, 1, "icall");
      if (in.result && !in.sig->ret)
        add(f.name, in.line, "unexpected result", "icall signature returns no value");
      break;
    case Opcode::Ret:
      if (ops.size() > 1)
        add(f.name, in.line, "arity mismatch", "ret takes at most one operand");
      if (f.ret_kind && (ops.empty() || ops[0].kind != *f.ret_kind))
        add(f.name, in.line, "return kind mismatch",
            "'" + f.name + "' must return " + kind_name(*f.ret_kind));
      if (!f.ret_kind && !ops.empty())
        add(f.name, in.line, "return kind mismatch", "'" + f.name + "' returns no value");
      break;
    default:
      break;
    }
  }
};

} // namespace

std::string format_diagnostic(const Diagnostic &d) {
  std::string s = d.function.empty() ? "<program>" : d.function;
  s += ":" + std::to_string(d.line) + ": " + d.rule + ": " + d.message;
  return s;
}

std::vector<Diagnostic> validate_program(const Program &p) { return Checker(p).run(); }

} // namespace ownsan
