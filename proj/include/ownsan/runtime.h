// SPDX-License-Identifier: Apache-2.0
//
// Interpretation of programs under three modes:
//   none       plain execution; invalid memory operations are recorded as faults
//   selective  executes an instrumentation plan against a metadata store
//   asan       every access checked against a shadow map (see asan.h)

#ifndef OWNSAN_RUNTIME_H
#define OWNSAN_RUNTIME_H

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ownsan/instrumentation.h"

namespace ownsan {

enum class ViolationClass { OOB, UBI, UAF, DF, NPD };
const char *violation_class_name(ViolationClass c);
std::optional<ViolationClass> parse_violation_class(const std::string &s);

struct Violation {
  ViolationClass cls = ViolationClass::OOB;
  std::string function;
  size_t index = 0;
  std::string pointer;
  std::string detail;
};

// An operation the plain interpreter cannot perform meaningfully.
struct Fault {
  std::string function;
  size_t index = 0;
  std::string detail;
};

struct ExecutionReport {
  std::string mode;
  std::vector<Violation> violations;
  std::vector<Fault> faults;
  size_t executed_instructions = 0;
  std::array<size_t, 5> hits{}; // plan entries fired, by class
  size_t checks = 0;            // asan: accesses checked
  std::set<std::string> executed_functions;
};

struct SpatialCheckEvent {
  std::string function;
  size_t index = 0;
  int64_t metadata_offset = 0; // offset held by the store
  int64_t pointer_offset = 0;  // offset of the value into its object
  int64_t view_base = 0;       // object offset where the checked bound starts
};

struct ExecOptions {
  bool continue_on_error = true;
  size_t step_budget = 1'000'000;
  bool debug = false; // verify metadata-store consistency after every instruction
  std::function<void(const SpatialCheckEvent &)> on_spatial_check;
};

ExecutionReport execute_plain(const Program &p, const ExecOptions &opts = {});
ExecutionReport execute(const InstrumentedProgram &ip, const ExecOptions &opts = {});

// Thrown in debug mode when the forward and reverse maps disagree.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

// Metadata keyed by runtime pointer instance.
struct ObjectMeta {
  int64_t capacity = 0;
  int64_t init_len = 0;
  int64_t base = 0; // offset into the object where this bound starts
  bool null = false;
};

struct SpatialMeta {
  std::shared_ptr<ObjectMeta> object; // shared by every instance of one bound
  int64_t offset = 0;
};

struct TemporalRecord {
  bool dangling = false;
  std::set<uint64_t> owners;
  std::set<uint64_t> members;
};

class MetadataStore {
 public:
  void set_spatial(uint64_t instance, SpatialMeta m) { spatial_[instance] = std::move(m); }
  SpatialMeta *spatial(uint64_t instance);

  // Creates a record for `instance`, or adds it to `source`'s record.
  uint64_t join(uint64_t instance, std::optional<uint64_t> source);
  TemporalRecord *record_of(uint64_t instance);
  std::optional<uint64_t> record_id(uint64_t instance) const;

  // Empty when the forward and reverse maps agree.
  std::string check_consistency() const;

  size_t spatial_size() const { return spatial_.size(); }
  size_t record_count() const { return forward_.size(); }

 private:
  std::map<uint64_t, SpatialMeta> spatial_;
  std::map<uint64_t, TemporalRecord> forward_;
  std::map<uint64_t, uint64_t> reverse_;
};

} // namespace ownsan

#endif // OWNSAN_RUNTIME_H
