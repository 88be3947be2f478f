// SPDX-License-Identifier: Apache-2.0

#include "ownsan/asan.h"

#include <deque>

#include "machine.h"

namespace ownsan {

namespace {

enum class Cell : uint8_t { Unmapped, Addressable, RedZone, Freed };

struct Region {
  size_t start = 0; // first left red-zone cell
  size_t size = 0;  // red zones included
  int64_t object = -1;
};

class AsanMachine : public Machine {
 public:
  AsanMachine(const Program &p, const AsanConfig &cfg, const ExecOptions &opts)
      : Machine(p, opts, "asan"), cfg_(cfg) {}

 protected:
  int64_t allocate(int64_t capacity, int64_t len) override {
    int64_t id = Machine::allocate(0, len);
    objects_[static_cast<size_t>(id)].capacity = capacity;
    size_t cap = static_cast<size_t>(std::max<int64_t>(capacity, 0));
    Region r;
    r.size = 2 * cfg_.redzone + cap;
    r.object = id;
    auto it = free_.find(r.size);
    if (it != free_.end() && !it->second.empty()) {
      Region old = it->second.front();
      it->second.pop_front();
      r.start = old.start;
      recycled_[old.object] = true;
    } else {
      r.start = top_;
      top_ += r.size;
      if (top_ > cfg_.max_cells)
        throw Error("simulated address space exhausted");
      shadow_.resize(top_, Cell::Unmapped);
      memory_.resize(top_, 0);
    }
    size_t base = r.start + cfg_.redzone;
    for (size_t a = r.start; a < r.start + r.size; ++a) {
      bool user = a >= base && a < base + cap;
      shadow_[a] = user ? Cell::Addressable : Cell::RedZone;
      memory_[a] = 0;
    }
    regions_.push_back(r);
    recycled_.push_back(false);
    return id;
  }

  void deallocate(const Function &f, size_t i, const RtValue &owner) override {
    ++report_.checks;
    const std::string name = operand_name(f, i);
    if (owner.is_null())
      return report(ViolationClass::NPD, f, i, name, "free of null");
    RtObject *o = object(owner);
    size_t id = static_cast<size_t>(owner.object);
    if (o->freed) {
      if (!recycled_[id])
        report(ViolationClass::DF, f, i, name, "free of quarantined region");
      return;
    }
    o->freed = true;
    const Region &r = regions_[id];
    size_t base = r.start + cfg_.redzone;
    for (size_t a = base; a < base + static_cast<size_t>(std::max<int64_t>(o->capacity, 0)); ++a)
      shadow_[a] = Cell::Freed;
    quarantine_.push_back(r);
    if (quarantine_.size() > cfg_.quarantine) {
      Region out = quarantine_.front();
      quarantine_.pop_front();
      free_[out.size].push_back(out);
    }
  }

  int64_t read(const Function &f, size_t i, const RtValue &p) override {
    auto a = checked_address(f, i, p, "read");
    return a ? memory_[*a] : 0;
  }

  void write(const Function &f, size_t i, const RtValue &p, int64_t v) override {
    if (auto a = checked_address(f, i, p, "write"))
      memory_[*a] = v;
  }

  void push(const Function &f, size_t i, const RtValue &owner) override {
    RtObject *o = object(owner);
    RtValue slot = owner;
    slot.offset = o ? o->len : 0;
    if (checked_address(f, i, slot, "push"))
      ++o->len;
  }

  void pop(const Function &f, size_t i, const RtValue &owner) override {
    RtObject *o = object(owner);
    if (o && o->len == 0 && !owner.is_null())
      return;
    RtValue slot = owner;
    slot.offset = o ? o->len - 1 : 0;
    if (checked_address(f, i, slot, "pop"))
      --o->len;
  }

  bool field_access(const Function &f, size_t i, const RtValue &obj) override {
    ++report_.checks;
    const std::string name = operand_name(f, i);
    if (obj.is_null())
      return report(ViolationClass::NPD, f, i, name, "field access through null"), false;
    RtObject *o = object(obj);
    if (o->freed && !recycled_[static_cast<size_t>(obj.object)])
      return report(ViolationClass::UAF, f, i, name, "field access on freed object"), false;
    return true;
  }

 private:
  const AsanConfig &cfg_;
  std::vector<Cell> shadow_;
  std::vector<int64_t> memory_;
  std::vector<Region> regions_; // by object id
  std::vector<bool> recycled_;  // by object id: its region was handed out again
  std::map<size_t, std::deque<Region>> free_;
  std::deque<Region> quarantine_;
  size_t top_ = 0;

  static std::string operand_name(const Function &f, size_t i) {
    const auto &ops = f.instrs[i].operands;
    return !ops.empty() && ops[0].is_value() ? ops[0].name : "";
  }

  std::optional<size_t> checked_address(const Function &f, size_t i, const RtValue &p,
                                        const char *what) {
    ++report_.checks;
    const std::string name = operand_name(f, i);
    if (p.is_null()) {
      report(ViolationClass::NPD, f, i, name, std::string(what) + " through null");
      return std::nullopt;
    }
    const Region &r = regions_[static_cast<size_t>(p.object)];
    int64_t addr = static_cast<int64_t>(r.start + cfg_.redzone) + p.offset;
    Cell c = addr < 0 || addr >= static_cast<int64_t>(shadow_.size())
                 ? Cell::Unmapped
                 : shadow_[static_cast<size_t>(addr)];
    switch (c) {
    case Cell::Addressable:
      return static_cast<size_t>(addr);
    case Cell::Freed:
      report(ViolationClass::UAF, f, i, name,
             std::string(what) + " of freed cell " + std::to_string(addr));
      break;
    case Cell::RedZone:
    case Cell::Unmapped:
      report(ViolationClass::OOB, f, i, name,
             std::string(what) + " of poisoned cell " + std::to_string(addr));
      break;
    }
    return std::nullopt;
  }
};

} // namespace

ExecutionReport execute_asan(const Program &p, const AsanConfig &config,
                             const ExecOptions &opts) {
  return AsanMachine(p, config, opts).run();
}

} // namespace ownsan
