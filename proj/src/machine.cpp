// SPDX-License-Identifier: Apache-2.0

#include "machine.h"

#include <limits>

namespace ownsan {

std::optional<int64_t> unchecked_result(const std::string &op, int64_t x, int64_t n) {
  int64_t r = 0;
  if (op == "add")
    return __builtin_add_overflow(x, n, &r) ? std::nullopt : std::optional<int64_t>(r);
  if (op == "sub")
    return __builtin_sub_overflow(x, n, &r) ? std::nullopt : std::optional<int64_t>(r);
  if (op == "mul")
    return __builtin_mul_overflow(x, n, &r) ? std::nullopt : std::optional<int64_t>(r);
  if (op == "neg")
    return x == std::numeric_limits<int64_t>::min() ? std::nullopt : std::optional<int64_t>(-x);
  if (op == "shl" || op == "shr") {
    if (n < 0 || n > 63)
      return std::nullopt;
    if (op == "shr")
      return x >> n;
    uint64_t u = static_cast<uint64_t>(x) << n;
    int64_t back = static_cast<int64_t>(u) >> n;
    return back == x ? std::optional<int64_t>(static_cast<int64_t>(u)) : std::nullopt;
  }
  throw Error("unknown unchecked operation '" + op + "'");
}

int64_t wrapping_result(const std::string &op, int64_t x, int64_t n) {
  uint64_t ux = static_cast<uint64_t>(x), un = static_cast<uint64_t>(n);
  if (op == "add")
    return static_cast<int64_t>(ux + un);
  if (op == "sub")
    return static_cast<int64_t>(ux - un);
  if (op == "mul")
    return static_cast<int64_t>(ux * un);
  if (op == "neg")
    return static_cast<int64_t>(0 - ux);
  if (op == "shl")
    return static_cast<int64_t>(ux << (un & 63));
  if (op == "shr")
    return x >> (un & 63);
  throw Error("unknown unchecked operation '" + op + "'");
}

Machine::Machine(const Program &p, const ExecOptions &opts, std::string mode)
    : p_(p), opts_(opts) {
  report_.mode = std::move(mode);
}

RtObject *Machine::object(const RtValue &v) {
  if (v.is_null() || v.object >= static_cast<int64_t>(objects_.size()))
    return nullptr;
  return &objects_[static_cast<size_t>(v.object)];
}

void Machine::report(ViolationClass c, const Function &f, size_t i, const std::string &ptr,
                     std::string detail) {
  // A site inside a loop reports each class once.
  if (reported_.insert({c, f.name, i}).second)
    report_.violations.push_back({c, f.name, i, ptr, std::move(detail)});
  suppress_ = true;
  if (!opts_.continue_on_error)
    stop_ = true;
}

void Machine::fault(const Function &f, size_t i, std::string detail) {
  report_.faults.push_back({f.name, i, std::move(detail)});
}

RtValue Machine::value_of(const Frame &fr, const Operand &o) const {
  RtValue v;
  switch (o.tag) {
  case Operand::Tag::Literal:
    v.scalar = o.literal;
    return v;
  case Operand::Tag::Func:
    v.kind = ValueKind::Func;
    v.func = o.name;
    return v;
  case Operand::Tag::Value:
    break;
  }
  auto it = fr.vars.find(o.name);
  if (it == fr.vars.end())
    throw Error(fr.fn->name + ":" + std::to_string(fr.pc) + ": '%" + o.name +
                "' has no value");
  return it->second;
}

int64_t Machine::allocate(int64_t capacity, int64_t len) {
  RtObject o;
  o.capacity = capacity;
  o.len = len;
  o.cells.assign(static_cast<size_t>(std::max<int64_t>(capacity, 0)), 0);
  objects_.push_back(std::move(o));
  return static_cast<int64_t>(objects_.size()) - 1;
}

void Machine::deallocate(const Function &f, size_t i, const RtValue &owner) {
  RtObject *o = object(owner);
  if (!o)
    return fault(f, i, "deallocation through null");
  if (o->freed)
    return fault(f, i, "object freed twice");
  o->freed = true;
}

int64_t Machine::read(const Function &f, size_t i, const RtValue &p) {
  RtObject *o = object(p);
  if (!o)
    return fault(f, i, "null dereference"), 0;
  if (o->freed)
    return fault(f, i, "read of freed object"), 0;
  if (p.offset < 0 || p.offset >= o->capacity)
    return fault(f, i, "read outside object"), 0;
  return o->cells[static_cast<size_t>(p.offset)];
}

void Machine::write(const Function &f, size_t i, const RtValue &p, int64_t v) {
  RtObject *o = object(p);
  if (!o)
    return fault(f, i, "null dereference");
  if (o->freed)
    return fault(f, i, "write to freed object");
  if (p.offset < 0 || p.offset >= o->capacity)
    return fault(f, i, "write outside object");
  o->cells[static_cast<size_t>(p.offset)] = v;
}

void Machine::push(const Function &f, size_t i, const RtValue &owner) {
  RtObject *o = object(owner);
  if (!o || o->freed)
    return fault(f, i, "push to invalid container");
  if (o->len >= o->capacity)
    return fault(f, i, "push beyond capacity");
  ++o->len;
}

void Machine::pop(const Function &f, size_t i, const RtValue &owner) {
  RtObject *o = object(owner);
  if (!o || o->freed)
    return fault(f, i, "pop from invalid container");
  if (o->len > 0)
    --o->len;
}

bool Machine::field_access(const Function &f, size_t i, const RtValue &obj) {
  RtObject *o = object(obj);
  if (!o)
    return fault(f, i, "field access through null"), false;
  if (o->freed)
    return fault(f, i, "field access on freed object"), false;
  return true;
}

void Machine::call(const Function &callee, std::vector<RtValue> args) {
  if (args.size() != callee.params.size())
    throw Error("call to '" + callee.name + "' with " + std::to_string(args.size()) +
                " arguments");
  report_.executed_functions.insert(callee.name);
  Frame fr;
  fr.fn = &callee;
  for (size_t k = 0; k < args.size(); ++k)
    fr.vars[callee.params[k].name] = std::move(args[k]);
  stack_.push_back(std::move(fr));
}

void Machine::finish_call(std::optional<RtValue> ret) {
  stack_.pop_back();
  if (stack_.empty())
    return;
  Frame &caller = stack_.back();
  const Instruction &in = caller.fn->instrs[caller.pc];
  if (in.result) {
    if (!ret)
      throw Error(caller.fn->name + ":" + std::to_string(caller.pc) + ": callee returned no value");
    caller.vars[*in.result] = *ret;
  }
  after(*caller.fn, caller.pc, caller);
  ++caller.pc;
}

ExecutionReport Machine::run() {
  for (const auto &name : p_.entries()) {
    const Function *entry = p_.find(name);
    if (!entry)
      throw Error("entry '" + name + "' is not defined");
    std::vector<RtValue> args;
    for (const auto &prm : entry->params) {
      RtValue v;
      v.kind = prm.kind;
      args.push_back(v);
    }
    call(*entry, std::move(args));
    while (!stack_.empty() && !stop_) {
      Frame &fr = stack_.back();
      if (fr.pc >= fr.fn->instrs.size()) {
        finish_call(std::nullopt);
        continue;
      }
      if (++report_.executed_instructions > opts_.step_budget)
        throw Error("step budget of " + std::to_string(opts_.step_budget) + " exceeded");
      step();
      after_instruction();
    }
    stack_.clear();
    if (stop_)
      break;
  }
  return std::move(report_);
}

void Machine::step() {
  Frame &fr = stack_.back();
  const Function &f = *fr.fn;
  const size_t i = fr.pc;
  const Instruction &in = f.instrs[i];
  auto arg = [&](size_t k) { return value_of(fr, in.operands.at(k)); };
  auto pointer_arg = [&](size_t k) {
    RtValue v = arg(k);
    if (!is_pointer_kind(v.kind))
      throw Error(f.name + ":" + std::to_string(i) + ": " + opcode_name(in.op) +
                  " expects a pointer operand");
    return v;
  };

  suppress_ = false;
  before(f, i, fr);
  if (stop_)
    return;

  std::optional<RtValue> result;
  auto jump = [&](const std::string &label) {
    auto idx = f.label_index(label);
    if (!idx)
      throw Error(f.name + ": unknown label '" + label + "'");
    fr.pc = *idx;
  };
  auto mint = [&](ValueKind k, int64_t obj, int64_t offset) {
    RtValue v;
    v.kind = k;
    v.instance = fresh_instance();
    v.object = obj;
    v.offset = offset;
    return v;
  };

  switch (in.op) {
  case Opcode::HeapAlloc:
  case Opcode::HeapAllocUninit:
  case Opcode::RawAlloc: {
    int64_t n = arg(0).scalar;
    int64_t len = in.op == Opcode::HeapAlloc ? n : 0;
    result = mint(in.result_kind, allocate(n, len), 0);
    break;
  }
  case Opcode::VecNew:
    result = mint(ValueKind::Owner, allocate(arg(0).scalar, arg(1).scalar), 0);
    break;
  case Opcode::VecPush:
    if (!suppress_)
      push(f, i, pointer_arg(0));
    break;
  case Opcode::VecPop:
    if (!suppress_)
      pop(f, i, pointer_arg(0));
    break;
  case Opcode::ApiSetLen:
    if (!suppress_) {
      RtValue v = pointer_arg(0);
      if (RtObject *o = object(v); o && !o->freed)
        o->len = arg(1).scalar;
      else
        fault(f, i, "set_len on invalid container");
    }
    break;
  case Opcode::ApiUnchecked: {
    RtValue v;
    v.scalar = wrapping_result(in.aux, arg(0).scalar, arg(1).scalar);
    result = v;
    break;
  }
  case Opcode::AsRaw: {
    RtValue src = pointer_arg(0);
    result = mint(ValueKind::Raw, src.object, src.offset);
    break;
  }
  case Opcode::BoxFromRaw: {
    RtValue src = pointer_arg(0);
    result = mint(ValueKind::Owner, src.object, src.offset);
    break;
  }
  case Opcode::Move: {
    RtValue src = pointer_arg(0);
    result = mint(ValueKind::Owner, src.object, src.offset);
    break;
  }
  case Opcode::Gep: {
    RtValue src = pointer_arg(0);
    result = mint(src.kind, src.object, src.offset + arg(1).scalar);
    break;
  }
  case Opcode::Copy:
    result = arg(0);
    break;
  case Opcode::Null:
    result = mint(ValueKind::Raw, -1, 0);
    break;
  case Opcode::StoreField: {
    RtValue obj = pointer_arg(0);
    if (!suppress_ && field_access(f, i, obj))
      objects_[static_cast<size_t>(obj.object)].fields[in.aux] = arg(1);
    break;
  }
  case Opcode::LoadField: {
    RtValue obj = pointer_arg(0);
    RtValue v;
    v.kind = in.result_kind;
    if (!suppress_ && field_access(f, i, obj)) {
      auto &fields = objects_[static_cast<size_t>(obj.object)].fields;
      auto it = fields.find(in.aux);
      if (it == fields.end())
        fault(f, i, "field '" + in.aux + "' read before any store");
      else
        v = it->second;
    }
    result = v;
    break;
  }
  case Opcode::Drop:
  case Opcode::EndScope:
    if (!suppress_)
      deallocate(f, i, pointer_arg(0));
    break;
  case Opcode::Forget:
    break;
  case Opcode::DerefRead: {
    RtValue p = pointer_arg(0);
    RtValue v;
    if (!suppress_)
      v.scalar = read(f, i, p);
    result = v;
    break;
  }
  case Opcode::DerefWrite:
    if (!suppress_)
      write(f, i, pointer_arg(0), arg(1).scalar);
    break;
  case Opcode::Call:
  case Opcode::ICall: {
    const Function *callee = nullptr;
    size_t first = 0;
    if (in.op == Opcode::Call) {
      callee = p_.find(in.aux);
    } else {
      first = 1;
      RtValue fp = arg(0);
      if (fp.kind != ValueKind::Func)
        throw Error(f.name + ":" + std::to_string(i) + ": icall through a non-function value");
      callee = p_.find(fp.func);
    }
    if (!callee)
      throw Error(f.name + ":" + std::to_string(i) + ": call to undefined function");
    std::vector<RtValue> args;
    for (size_t k = first; k < in.operands.size(); ++k)
      args.push_back(arg(k));
    call(*callee, std::move(args));
    return;
  }
  case Opcode::Ret: {
    std::optional<RtValue> ret;
    if (!in.operands.empty())
      ret = arg(0);
    finish_call(ret);
    return;
  }
  case Opcode::Br:
    jump(in.labels.at(0));
    return;
  case Opcode::CondBr:
    jump(in.labels.at(arg(0).scalar != 0 ? 0 : 1));
    return;
  }

  if (in.result) {
    if (!result)
      throw Error(f.name + ":" + std::to_string(i) + ": instruction produced no value");
    fr.vars[*in.result] = *result;
  }
  after(f, i, fr);
  ++fr.pc;
}

ExecutionReport execute_plain(const Program &p, const ExecOptions &opts) {
  return Machine(p, opts, "none").run();
}

} // namespace ownsan
