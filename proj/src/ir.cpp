// SPDX-License-Identifier: Apache-2.0

#include "ownsan/ir.h"

#include <array>

namespace ownsan {

namespace {

struct OpInfo {
  Opcode op;
  const char *name;
};

constexpr std::array<OpInfo, 26> kOps = {{
    {Opcode::HeapAlloc, "heap_alloc"},
    {Opcode::HeapAllocUninit, "heap_alloc_uninit"},
    {Opcode::VecNew, "vec_new"},
    {Opcode::VecPush, "vec_push"},
    {Opcode::VecPop, "vec_pop"},
    {Opcode::ApiSetLen, "api_set_len"},
    {Opcode::ApiUnchecked, "api_unchecked"},
    {Opcode::AsRaw, "as_raw"},
    {Opcode::RawAlloc, "raw_alloc"},
    {Opcode::BoxFromRaw, "box_from_raw"},
    {Opcode::Gep, "gep"},
    {Opcode::Copy, "copy"},
    {Opcode::StoreField, "store_field"},
    {Opcode::LoadField, "load_field"},
    {Opcode::Move, "move"},
    {Opcode::Drop, "drop"},
    {Opcode::Forget, "forget"},
    {Opcode::EndScope, "end_scope"},
    {Opcode::DerefRead, "deref_read"},
    {Opcode::DerefWrite, "deref_write"},
    {Opcode::Null, "null"},
    {Opcode::Call, "call"},
    {Opcode::ICall, "icall"},
    {Opcode::Ret, "ret"},
    {Opcode::Br, "br"},
    {Opcode::CondBr, "cbr"},
}};

} // namespace

const char *kind_name(ValueKind k) {
  switch (k) {
  case ValueKind::Owner:
    return "owner";
  case ValueKind::Raw:
    return "raw";
  case ValueKind::Scalar:
    return "scalar";
  case ValueKind::Func:
    return "func";
  }
  return "?";
}

std::optional<ValueKind> parse_kind(const std::string &s) {
  if (s == "owner")
    return ValueKind::Owner;
  if (s == "raw")
    return ValueKind::Raw;
  if (s == "scalar")
    return ValueKind::Scalar;
  if (s == "func")
    return ValueKind::Func;
  return std::nullopt;
}

const char *opcode_name(Opcode op) {
  for (const auto &i : kOps)
    if (i.op == op)
      return i.name;
  return "?";
}

std::optional<Opcode> parse_opcode(const std::string &s) {
  for (const auto &i : kOps)
    if (s == i.name)
      return i.op;
  return std::nullopt;
}

bool is_allocation(Opcode op) {
  return op == Opcode::HeapAlloc || op == Opcode::HeapAllocUninit ||
         op == Opcode::VecNew || op == Opcode::RawAlloc;
}

bool is_deallocation(Opcode op) {
  return op == Opcode::Drop || op == Opcode::Forget || op == Opcode::EndScope;
}

bool is_dereference(Opcode op) {
  return op == Opcode::DerefRead || op == Opcode::DerefWrite;
}

bool is_container_modifier(Opcode op) {
  return op == Opcode::VecPush || op == Opcode::VecPop || op == Opcode::ApiSetLen;
}

bool is_terminator(Opcode op) {
  return op == Opcode::Ret || op == Opcode::Br || op == Opcode::CondBr;
}

std::string signature_string(const Signature &s) {
  std::string out = "sig(";
  for (size_t i = 0; i < s.params.size(); ++i) {
    if (i)
      out += ",";
    out += kind_name(s.params[i]);
  }
  if (s.ret) {
    out += "->";
    out += kind_name(*s.ret);
  }
  out += ")";
  return out;
}

Signature Function::signature() const {
  Signature s;
  for (const auto &p : params)
    s.params.push_back(p.kind);
  s.ret = ret_kind;
  return s;
}

std::optional<size_t> Function::label_index(const std::string &l) const {
  for (const auto &lab : labels)
    if (lab.name == l)
      return lab.index;
  return std::nullopt;
}

std::optional<ValueKind> Function::param_kind(const std::string &n) const {
  for (const auto &p : params)
    if (p.name == n)
      return p.kind;
  return std::nullopt;
}

const Function *Program::find(const std::string &name) const {
  for (const auto &f : functions)
    if (f.name == name)
      return &f;
  return nullptr;
}

std::vector<std::string> Program::entries() const {
  std::vector<std::string> out;
  for (const auto &f : functions)
    if (f.is_entry)
      out.push_back(f.name);
  if (out.empty() && find("main"))
    out.push_back("main");
  return out;
}

size_t Program::instruction_count() const {
  size_t n = 0;
  for (const auto &f : functions)
    n += f.instrs.size();
  return n;
}

} // namespace ownsan
