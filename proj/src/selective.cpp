// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "machine.h"

namespace ownsan {

const char *violation_class_name(ViolationClass c) {
  static const char *kNames[] = {"OOB", "UBI", "UAF", "DF", "NPD"};
  return kNames[static_cast<int>(c)];
}

std::optional<ViolationClass> parse_violation_class(const std::string &s) {
  for (int c = 0; c < 5; ++c)
    if (s == violation_class_name(static_cast<ViolationClass>(c)))
      return static_cast<ViolationClass>(c);
  return std::nullopt;
}

SpatialMeta *MetadataStore::spatial(uint64_t instance) {
  auto it = spatial_.find(instance);
  return it == spatial_.end() ? nullptr : &it->second;
}

uint64_t MetadataStore::join(uint64_t instance, std::optional<uint64_t> source) {
  uint64_t id = instance;
  if (source) {
    auto it = reverse_.find(*source);
    if (it != reverse_.end())
      id = it->second;
  }
  if (auto old = reverse_.find(instance); old != reverse_.end() && old->second != id) {
    auto &rec = forward_.at(old->second);
    rec.members.erase(instance);
    rec.owners.erase(instance);
  }
  forward_[id].members.insert(instance);
  reverse_[instance] = id;
  return id;
}

TemporalRecord *MetadataStore::record_of(uint64_t instance) {
  auto it = reverse_.find(instance);
  if (it == reverse_.end())
    return nullptr;
  return &forward_.at(it->second);
}

std::optional<uint64_t> MetadataStore::record_id(uint64_t instance) const {
  auto it = reverse_.find(instance);
  if (it == reverse_.end())
    return std::nullopt;
  return it->second;
}

std::string MetadataStore::check_consistency() const {
  for (const auto &[member, id] : reverse_) {
    auto it = forward_.find(id);
    if (it == forward_.end() || !it->second.members.count(member))
      return "instance " + std::to_string(member) + " maps to record " + std::to_string(id) +
             " which does not list it";
  }
  for (const auto &[id, rec] : forward_) {
    for (uint64_t m : rec.members) {
      auto it = reverse_.find(m);
      if (it == reverse_.end() || it->second != id)
        return "record " + std::to_string(id) + " lists instance " + std::to_string(m) +
               " mapped elsewhere";
    }
    for (uint64_t o : rec.owners)
      if (!rec.members.count(o))
        return "record " + std::to_string(id) + " owner " + std::to_string(o) +
               " is not a member";
  }
  return {};
}

namespace {

class SelectiveMachine : public Machine {
 public:
  SelectiveMachine(const InstrumentedProgram &ip, const ExecOptions &opts)
      : Machine(ip.program, opts, "selective"), plan_(ip.plan) {}

 protected:
  void before(const Function &f, size_t i, Frame &fr) override {
    const Instruction &in = f.instrs[i];
    // The result may overwrite its own source (%p = gep %p, 1).
    source_.reset();
    if (derives_from_operand(in.op))
      source_ = value_of(fr, in.operands[0]);
    for (const auto &e : plan_.at(f.name, i)) {
      if (fires_after(in, e))
        continue;
      if (suppress_ || stop_)
        return;
      ++report_.hits[static_cast<int>(e.cls)];
      switch (e.cls) {
      case InstrClass::I2:
        container_update(f, i, fr, e);
        break;
      case InstrClass::I3:
        deactivate(fr, in, e);
        break;
      case InstrClass::I4:
        if (e.unchecked)
          unchecked_check(f, i, fr);
        else
          deref_check(f, i, fr, e);
        break;
      case InstrClass::I5:
        temporal_check(f, i, fr, e);
        break;
      case InstrClass::I1:
        break;
      }
    }
  }

  void after(const Function &f, size_t i, Frame &fr) override {
    const Instruction &in = f.instrs[i];
    for (const auto &e : plan_.at(f.name, i)) {
      if (!fires_after(in, e))
        continue;
      ++report_.hits[static_cast<int>(e.cls)];
      switch (e.cls) {
      case InstrClass::I1:
        activate(f, i, fr, e);
        break;
      case InstrClass::I2: {
        const RtValue &r = fr.vars.at(*in.result);
        if (SpatialMeta *m = store_.spatial(r.instance))
          m->offset += value_of(fr, in.operands[1]).scalar;
        break;
      }
      case InstrClass::I4: {
        if (suppress_)
          break;
        const RtValue &r = fr.vars.at(*in.result);
        SpatialMeta *m = store_.spatial(r.instance);
        if (m && (m->offset < 0 || m->offset > m->object->capacity))
          report(ViolationClass::OOB, f, i, *in.result,
                 "pointer arithmetic to offset " + std::to_string(m->offset) +
                     " outside capacity " + std::to_string(m->object->capacity));
        break;
      }
      default:
        break;
      }
    }
  }

  void after_instruction() override {
    if (!opts_.debug)
      return;
    std::string err = store_.check_consistency();
    if (!err.empty())
      throw ConsistencyError(err);
  }

 private:
  const InstrumentationPlan &plan_;
  MetadataStore store_;
  std::optional<RtValue> source_; // operand 0 of the current instruction, pre-execution

  static bool derives_from_operand(Opcode op) {
    return op == Opcode::AsRaw || op == Opcode::Gep || op == Opcode::BoxFromRaw ||
           op == Opcode::Move;
  }

  void activate(const Function &f, size_t i, Frame &fr, const PlanEntry &e) {
    const Instruction &in = f.instrs[i];
    const RtValue &r = fr.vars.at(*in.result);
    const std::optional<RtValue> &src = source_;

    if (e.spatial) {
      if (is_allocation(in.op) || in.op == Opcode::Null) {
        auto obj = std::make_shared<ObjectMeta>();
        if (in.op == Opcode::Null) {
          obj->null = true;
        } else {
          obj->capacity = value_of(fr, in.operands[0]).scalar;
          obj->init_len = in.op == Opcode::HeapAlloc ? obj->capacity
                          : in.op == Opcode::VecNew  ? value_of(fr, in.operands[1]).scalar
                                                     : 0;
        }
        store_.set_spatial(r.instance, {obj, 0});
      } else if (in.has_view_count()) {
        auto obj = std::make_shared<ObjectMeta>();
        obj->capacity = obj->init_len = value_of(fr, in.operands[1]).scalar;
        obj->base = src->offset;
        obj->null = src->is_null();
        store_.set_spatial(r.instance, {obj, 0});
      } else if (SpatialMeta *m = store_.spatial(src->instance)) {
        store_.set_spatial(r.instance, *m);
      } else if (src->is_null()) {
        auto obj = std::make_shared<ObjectMeta>();
        obj->null = true;
        store_.set_spatial(r.instance, {obj, src->offset});
      } else {
        throw Error(f.name + ":" + std::to_string(i) + ": '%" + *in.result +
                    "' derives from a pointer with no spatial metadata");
      }
    }

    if (e.temporal) {
      std::optional<uint64_t> from;
      if (src && src->instance)
        from = src->instance;
      store_.join(r.instance, from);
      TemporalRecord *rec = store_.record_of(r.instance);
      if (in.op == Opcode::Move && src)
        rec->owners.erase(src->instance);
      if (r.kind == ValueKind::Owner)
        rec->owners.insert(r.instance);
    }
  }

  void container_update(const Function &f, size_t i, Frame &fr, const PlanEntry &) {
    const Instruction &in = f.instrs[i];
    RtValue v = value_of(fr, in.operands[0]);
    SpatialMeta *m = store_.spatial(v.instance);
    if (!m)
      return;
    ObjectMeta &o = *m->object;
    const std::string &name = in.operands[0].name;
    switch (in.op) {
    case Opcode::VecPush:
      if (o.init_len >= o.capacity)
        report(ViolationClass::OOB, f, i, name,
               "push at capacity " + std::to_string(o.capacity));
      else
        ++o.init_len;
      break;
    case Opcode::VecPop:
      o.init_len = std::max<int64_t>(0, o.init_len - 1);
      break;
    case Opcode::ApiSetLen: {
      int64_t n = value_of(fr, in.operands[1]).scalar;
      if (n < 0 || n > o.capacity) {
        o.init_len = std::clamp<int64_t>(n, 0, o.capacity);
        report(ViolationClass::OOB, f, i, name,
               "set_len " + std::to_string(n) + " exceeds capacity " +
                   std::to_string(o.capacity));
      } else {
        o.init_len = n;
      }
      break;
    }
    default:
      break;
    }
  }

  void deactivate(Frame &fr, const Instruction &in, const PlanEntry &e) {
    RtValue v = value_of(fr, in.operands[0]);
    TemporalRecord *rec = store_.record_of(v.instance);
    if (!rec)
      return;
    if (e.nofree) {
      rec->owners.erase(v.instance);
      if (rec->owners.empty())
        rec->dangling = true;
    } else {
      rec->dangling = true;
    }
  }

  void temporal_check(const Function &f, size_t i, Frame &fr, const PlanEntry &) {
    const Instruction &in = f.instrs[i];
    RtValue v = value_of(fr, in.operands[0]);
    const std::string &name = in.operands[0].name;
    if (v.is_null())
      return report(ViolationClass::NPD, f, i, name, "null pointer");
    TemporalRecord *rec = store_.record_of(v.instance);
    if (!rec || !rec->dangling)
      return;
    if (is_dereference(in.op))
      report(ViolationClass::UAF, f, i, name, "dereference of dangling pointer");
    else
      report(ViolationClass::DF, f, i, name, "deallocation of dangling pointer");
  }

  void deref_check(const Function &f, size_t i, Frame &fr, const PlanEntry &) {
    const Instruction &in = f.instrs[i];
    RtValue v = value_of(fr, in.operands[0]);
    const std::string &name = in.operands[0].name;
    if (v.is_null())
      return report(ViolationClass::NPD, f, i, name, "null pointer");
    SpatialMeta *m = store_.spatial(v.instance);
    if (!m)
      return;
    ObjectMeta &o = *m->object;
    if (opts_.on_spatial_check)
      opts_.on_spatial_check({f.name, i, m->offset, v.offset, o.base});
    if (o.null)
      return report(ViolationClass::NPD, f, i, name, "null pointer");
    if (m->offset < 0 || m->offset >= o.capacity)
      return report(ViolationClass::OOB, f, i, name,
                    "offset " + std::to_string(m->offset) + " outside capacity " +
                        std::to_string(o.capacity));
    if (in.op == Opcode::DerefRead && m->offset >= o.init_len)
      return report(ViolationClass::UBI, f, i, name,
                    "offset " + std::to_string(m->offset) + " at or beyond initialized length " +
                        std::to_string(o.init_len));
    if (in.op == Opcode::DerefWrite && m->offset >= o.init_len)
      o.init_len = m->offset + 1;
  }

  void unchecked_check(const Function &f, size_t i, Frame &fr) {
    const Instruction &in = f.instrs[i];
    int64_t x = value_of(fr, in.operands[0]).scalar;
    int64_t n = value_of(fr, in.operands[1]).scalar;
    if (!unchecked_result(in.aux, x, n))
      report(ViolationClass::OOB, f, i, in.operands[0].is_value() ? in.operands[0].name : "",
             "unchecked_" + in.aux + " overflows");
  }
};

} // namespace

ExecutionReport execute(const InstrumentedProgram &ip, const ExecOptions &opts) {
  return SelectiveMachine(ip, opts).run();
}

} // namespace ownsan
