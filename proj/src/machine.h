// SPDX-License-Identifier: Apache-2.0
//
// Interpreter core shared by every execution mode. Subclasses observe each
// instruction through before()/after() and may replace the memory model.

#ifndef OWNSAN_MACHINE_H
#define OWNSAN_MACHINE_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "ownsan/runtime.h"

namespace ownsan {

struct RtValue {
  ValueKind kind = ValueKind::Scalar;
  uint64_t instance = 0; // 0 for scalars and functions
  int64_t object = -1;   // -1: null
  int64_t offset = 0;
  int64_t scalar = 0;
  std::string func;

  bool is_null() const { return object < 0; }
};

struct RtObject {
  int64_t capacity = 0;
  int64_t len = 0;
  bool freed = false;
  std::map<std::string, RtValue> fields;
  std::vector<int64_t> cells;
};

struct Frame {
  const Function *fn = nullptr;
  size_t pc = 0;
  std::map<std::string, RtValue> vars;
};

// Result of an unchecked arithmetic operation; nullopt when it overflows or
// the shift amount is out of range.
std::optional<int64_t> unchecked_result(const std::string &op, int64_t x, int64_t n);
int64_t wrapping_result(const std::string &op, int64_t x, int64_t n);

class Machine {
 public:
  Machine(const Program &p, const ExecOptions &opts, std::string mode);
  virtual ~Machine() = default;

  ExecutionReport run();

 protected:
  const Program &p_;
  const ExecOptions &opts_;
  ExecutionReport report_;
  std::set<std::tuple<ViolationClass, std::string, size_t>> reported_;
  std::vector<RtObject> objects_;
  bool suppress_ = false; // a check at the current site reported; skip its effect
  bool stop_ = false;

  RtValue value_of(const Frame &fr, const Operand &o) const;
  uint64_t fresh_instance() { return next_instance_++; }
  RtObject *object(const RtValue &v);

  void report(ViolationClass c, const Function &f, size_t i, const std::string &ptr,
              std::string detail);
  void fault(const Function &f, size_t i, std::string detail);

  virtual void before(const Function &, size_t, Frame &) {}
  virtual void after(const Function &, size_t, Frame &) {}
  virtual void after_instruction() {}

  // Memory model. Defaults are the plain object model.
  virtual int64_t allocate(int64_t capacity, int64_t len);
  virtual void deallocate(const Function &f, size_t i, const RtValue &owner);
  virtual int64_t read(const Function &f, size_t i, const RtValue &p);
  virtual void write(const Function &f, size_t i, const RtValue &p, int64_t v);
  virtual void push(const Function &f, size_t i, const RtValue &owner);
  virtual void pop(const Function &f, size_t i, const RtValue &owner);
  // Whether a field of `obj` may be accessed.
  virtual bool field_access(const Function &f, size_t i, const RtValue &obj);

 private:
  uint64_t next_instance_ = 1;
  std::vector<Frame> stack_;

  void call(const Function &callee, std::vector<RtValue> args);
  // Executes stack_.back()'s current instruction.
  void step();
  void finish_call(std::optional<RtValue> ret);
};

} // namespace ownsan

#endif // OWNSAN_MACHINE_H
