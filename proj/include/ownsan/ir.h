// SPDX-License-Identifier: Apache-2.0
//
// Ownership-aware mini-IR: programs, functions, instructions and operands.

#ifndef OWNSAN_IR_H
#define OWNSAN_IR_H

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ownsan {

enum class ValueKind { Owner, Raw, Scalar, Func };

const char *kind_name(ValueKind k);
std::optional<ValueKind> parse_kind(const std::string &s);
inline bool is_pointer_kind(ValueKind k) {
  return k == ValueKind::Owner || k == ValueKind::Raw;
}

enum class Opcode {
  HeapAlloc,
  HeapAllocUninit,
  VecNew,
  VecPush,
  VecPop,
  ApiSetLen,
  ApiUnchecked,
  AsRaw,
  RawAlloc,
  BoxFromRaw,
  Gep,
  Copy,
  StoreField,
  LoadField,
  Move,
  Drop,
  Forget,
  EndScope,
  DerefRead,
  DerefWrite,
  Null,
  Call,
  ICall,
  Ret,
  Br,
  CondBr,
};

const char *opcode_name(Opcode op);
std::optional<Opcode> parse_opcode(const std::string &s);

bool is_allocation(Opcode op);   // heap_alloc, heap_alloc_uninit, vec_new, raw_alloc
bool is_deallocation(Opcode op); // drop, forget, end_scope
bool is_dereference(Opcode op);  // deref_read, deref_write
bool is_container_modifier(Opcode op); // vec_push, vec_pop, api_set_len
bool is_terminator(Opcode op);   // ret, br, cbr

struct Operand {
  enum class Tag { Value, Literal, Func };
  Tag tag = Tag::Literal;
  std::string name;    // value name without '%', or function name without '@'
  int64_t literal = 0;
  ValueKind kind = ValueKind::Scalar; // resolved after parsing

  static Operand value(std::string n) {
    Operand o;
    o.tag = Tag::Value;
    o.name = std::move(n);
    return o;
  }
  static Operand lit(int64_t v) {
    Operand o;
    o.tag = Tag::Literal;
    o.literal = v;
    return o;
  }
  static Operand func(std::string n) {
    Operand o;
    o.tag = Tag::Func;
    o.name = std::move(n);
    o.kind = ValueKind::Func;
    return o;
  }
  bool is_value() const { return tag == Tag::Value; }
  bool operator==(const Operand &o) const {
    return tag == o.tag && name == o.name && literal == o.literal && kind == o.kind;
  }
};

struct Signature {
  std::vector<ValueKind> params;
  std::optional<ValueKind> ret;
  bool operator==(const Signature &) const = default;
};

std::string signature_string(const Signature &s);

// Operand layout per opcode:
//   heap_alloc/heap_alloc_uninit/raw_alloc: [count]
//   vec_new: [capacity, len]
//   vec_push/vec_pop/move/drop/forget/end_scope/box_from_raw/deref_read/copy: [v]
//   api_set_len: [owner, n]      api_unchecked: [x, n], aux = op name
//   as_raw: [p] or [p, count]    gep: [p, delta]
//   store_field: [obj, v], aux = field      load_field: [obj], aux = field
//   deref_write: [p, v]          call: args, aux = callee
//   icall: [fptr, args...], sig  ret: [] or [v]
//   br: labels[0]                cbr: [cond], labels = {taken, fallthrough}
struct Instruction {
  std::optional<std::string> result;
  ValueKind result_kind = ValueKind::Scalar;
  Opcode op = Opcode::Ret;
  std::vector<Operand> operands;
  std::string aux;
  std::vector<std::string> labels;
  std::optional<Signature> sig;
  bool is_unsafe = false;
  bool is_rawptr = false;
  int line = 0; // source line, 0 when built programmatically; ignored by ==

  bool operator==(const Instruction &o) const {
    return result == o.result && result_kind == o.result_kind && op == o.op &&
           operands == o.operands && aux == o.aux && labels == o.labels &&
           sig == o.sig && is_unsafe == o.is_unsafe && is_rawptr == o.is_rawptr;
  }

  bool has_view_count() const { return op == Opcode::AsRaw && operands.size() == 2; }
};

struct Param {
  std::string name;
  ValueKind kind = ValueKind::Scalar;
  bool operator==(const Param &) const = default;
};

struct Label {
  std::string name;
  size_t index = 0; // label precedes instrs[index]; == instrs.size() at body end
  bool operator==(const Label &) const = default;
};

struct Function {
  std::string name;
  std::vector<Param> params;
  std::optional<ValueKind> ret_kind;
  bool is_entry = false;
  bool address_taken = false; // derived: name appears as a func-kind value
  std::vector<Instruction> instrs;
  std::vector<Label> labels;
  int line = 0;

  bool operator==(const Function &o) const {
    return name == o.name && params == o.params && ret_kind == o.ret_kind &&
           is_entry == o.is_entry && address_taken == o.address_taken &&
           instrs == o.instrs && labels == o.labels;
  }

  Signature signature() const;
  std::optional<size_t> label_index(const std::string &l) const;
  std::optional<ValueKind> param_kind(const std::string &n) const;
};

struct Program {
  std::vector<Function> functions;

  bool operator==(const Program &o) const { return functions == o.functions; }

  const Function *find(const std::string &name) const;
  // Functions marked `entry`; "main" when none is marked.
  std::vector<std::string> entries() const;
  size_t instruction_count() const;
};

// Parameters are defined at pseudo-sites -1, -2, ... in parameter order.
inline int param_site(size_t i) { return -static_cast<int>(i) - 1; }
inline size_t param_index(int site) { return static_cast<size_t>(-site - 1); }

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(int line, const std::string &msg)
      : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

} // namespace ownsan

#endif // OWNSAN_IR_H
