// SPDX-License-Identifier: Apache-2.0

#include "ownsan/instrumentation.h"

#include <algorithm>

#include "ownsan/text.h"

namespace ownsan {

const char *instr_class_name(InstrClass c) {
  static const char *kNames[] = {"I1", "I2", "I3", "I4", "I5"};
  return kNames[static_cast<int>(c)];
}

const std::vector<PlanEntry> &InstrumentationPlan::at(const std::string &fn, size_t index) const {
  static const std::vector<PlanEntry> kNone;
  auto it = sites.find({fn, index});
  return it == sites.end() ? kNone : it->second;
}

bool fires_after(const Instruction &in, const PlanEntry &e) {
  if (e.cls == InstrClass::I1)
    return true;
  return in.op == Opcode::Gep && (e.cls == InstrClass::I2 || e.cls == InstrClass::I4);
}

namespace {

bool activates(Opcode op) {
  switch (op) {
  case Opcode::HeapAlloc:
  case Opcode::HeapAllocUninit:
  case Opcode::VecNew:
  case Opcode::RawAlloc:
  case Opcode::Null:
  case Opcode::AsRaw:
  case Opcode::Gep:
  case Opcode::BoxFromRaw:
  case Opcode::Move:
    return true;
  default:
    return false;
  }
}

class Planner {
 public:
  Planner(const DerivationGraph &g, const RiskSet &risk,
          const std::map<PointerRef, SpatialTemplate> &spatial,
          const std::map<PointerRef, TemporalTemplate> &temporal,
          const std::set<PointerRef> &carriers)
      : g_(g), risk_(risk), spatial_(spatial), carriers_(carriers) {
    for (const auto &[src, t] : temporal)
      tracked_.insert(t.pointer_set.begin(), t.pointer_set.end());
  }

  InstrumentationPlan run() {
    InstrumentationPlan plan;
    for (const auto &f : g_.program().functions) {
      if (!g_.reachable().count(f.name))
        continue;
      for (size_t i = 0; i < f.instrs.size(); ++i) {
        auto entries = site(f, i);
        if (!entries.empty())
          plan.sites[{f.name, i}] = std::move(entries);
      }
    }
    return plan;
  }

 private:
  const DerivationGraph &g_;
  const RiskSet &risk_;
  const std::map<PointerRef, SpatialTemplate> &spatial_;
  const std::set<PointerRef> &carriers_;
  std::set<PointerRef> tracked_;

  bool in_s(const PointerRef &r) const { return risk_.spatially_risky.count(r) > 0; }
  bool in_t(const PointerRef &r) const { return risk_.temporally_risky.count(r) > 0; }
  bool in_c(const PointerRef &r) const { return carriers_.count(r) > 0; }

  const PointerRef &need_spatial(const PointerRef &r) const {
    if (in_s(r) && !spatial_.count(r))
      throw Error("no spatial template for " + to_string(r));
    return r;
  }
  const PointerRef &need_temporal(const PointerRef &r) const {
    if (!tracked_.count(r))
      throw Error("no temporal template covers " + to_string(r));
    return r;
  }

  std::vector<PointerRef> defs(const Function &f, size_t i, size_t operand) const {
    std::vector<PointerRef> out;
    const auto &in = f.instrs[i];
    if (operand >= in.operands.size() || !in.operands[operand].is_value())
      return out;
    for (int n : g_.operand_nodes(f.name, i, in.operands[operand].name))
      out.push_back(g_.nodes()[n].ref);
    return out;
  }

  template <typename Pred>
  static const PointerRef *first(const std::vector<PointerRef> &v, Pred pred) {
    auto it = std::find_if(v.begin(), v.end(), pred);
    return it == v.end() ? nullptr : &*it;
  }

  std::vector<PlanEntry> site(const Function &f, size_t i) const {
    const Instruction &in = f.instrs[i];
    std::vector<PlanEntry> out;
    auto add = [&](InstrClass c, const PointerRef &r) -> PlanEntry & {
      PlanEntry e;
      e.cls = c;
      e.pointer = r;
      out.push_back(e);
      return out.back();
    };

    if (activates(in.op) && in.result && is_pointer_kind(in.result_kind)) {
      PointerRef r{f.name, static_cast<int>(i), *in.result};
      bool spatial = in_s(r) || in_c(r);
      bool temporal = in_t(r);
      if (spatial || temporal) {
        if (temporal)
          need_temporal(r);
        PlanEntry &e = add(InstrClass::I1, need_spatial(r));
        e.spatial = spatial;
        e.temporal = temporal;
      }
      if (in.op == Opcode::Gep && spatial) {
        add(InstrClass::I2, r);
        if (in_s(r))
          add(InstrClass::I4, r);
      }
      return out;
    }

    switch (in.op) {
    case Opcode::DerefRead:
    case Opcode::DerefWrite: {
      auto d = defs(f, i, 0);
      if (auto *t = first(d, [&](const PointerRef &r) { return in_t(r); }))
        add(InstrClass::I5, need_temporal(*t));
      if (auto *s = first(d, [&](const PointerRef &r) { return in_s(r); }))
        add(InstrClass::I4, need_spatial(*s));
      break;
    }
    case Opcode::VecPush:
    case Opcode::VecPop:
    case Opcode::ApiSetLen: {
      auto d = defs(f, i, 0);
      if (auto *s = first(d, [&](const PointerRef &r) { return in_s(r) || in_c(r); }))
        add(InstrClass::I2, need_spatial(*s));
      break;
    }
    case Opcode::Drop:
    case Opcode::EndScope:
    case Opcode::Forget: {
      auto d = defs(f, i, 0);
      if (auto *t = first(d, [&](const PointerRef &r) { return in_t(r); })) {
        add(InstrClass::I5, need_temporal(*t));
        add(InstrClass::I3, *t).nofree = in.op == Opcode::Forget;
      }
      break;
    }
    case Opcode::ApiUnchecked:
      add(InstrClass::I4, PointerRef{f.name, static_cast<int>(i), ""}).unchecked = true;
      break;
    default:
      break;
    }
    return out;
  }
};

} // namespace

InstrumentationPlan build_plan(const DerivationGraph &g, const RiskSet &risk,
                               const std::map<PointerRef, SpatialTemplate> &spatial,
                               const std::map<PointerRef, TemporalTemplate> &temporal,
                               const std::set<PointerRef> &carriers) {
  return Planner(g, risk, spatial, temporal, carriers).run();
}

InstrumentedProgram apply_plan(const Program &p, const InstrumentationPlan &plan) {
  for (const auto &[key, entries] : plan.sites) {
    const Function *f = p.find(key.first);
    if (!f || key.second >= f->instrs.size())
      throw Error("plan site " + key.first + ":" + std::to_string(key.second) +
                  " is not an instruction");
  }
  return {p, plan};
}

Program strip_instrumentation(const InstrumentedProgram &ip) { return ip.program; }

std::string format_entry(const PlanEntry &e) {
  std::string s = "#i" + std::to_string(static_cast<int>(e.cls) + 1);
  if (e.unchecked)
    return s + " unchecked";
  s += " %" + e.pointer.value + " site " + std::to_string(e.pointer.def_site);
  if (e.spatial)
    s += " spatial";
  if (e.temporal)
    s += " temporal";
  if (e.nofree)
    s += " nofree";
  return s;
}

std::string print_instrumented(const InstrumentedProgram &ip) {
  return print_program_with(ip.program, [&](const std::string &fn, size_t index) {
    std::vector<std::string> lines;
    for (const auto &e : ip.plan.at(fn, index))
      lines.push_back(format_entry(e));
    return lines;
  });
}

InstrumentedProgram parse_instrumented(const std::string &text) {
  std::vector<Annotation> annots;
  InstrumentedProgram ip;
  ip.program = parse_annotated(text, annots);
  for (const auto &a : annots) {
    if (a.tag.size() != 2 || a.tag[0] != 'i' || a.tag[1] < '1' || a.tag[1] > '5')
      throw ParseError(a.line, "unknown instrumentation '#" + a.tag + "'");
    const Function *f = ip.program.find(a.function);
    if (a.index >= f->instrs.size())
      throw ParseError(a.line, "instrumentation line not followed by an instruction");
    PlanEntry e;
    e.cls = static_cast<InstrClass>(a.tag[1] - '1');
    const auto &w = a.words;
    if (w.size() == 1 && w[0] == "unchecked") {
      e.unchecked = true;
      e.pointer = {a.function, static_cast<int>(a.index), ""};
    } else {
      if (w.size() < 3 || w[0].size() < 2 || w[0][0] != '%' || w[1] != "site")
        throw ParseError(a.line, "malformed instrumentation line");
      int site = 0;
      try {
        site = std::stoi(w[2]);
      } catch (const std::exception &) {
        throw ParseError(a.line, "malformed instrumentation site '" + w[2] + "'");
      }
      e.pointer = {a.function, site, w[0].substr(1)};
      for (size_t k = 3; k < w.size(); ++k) {
        if (w[k] == "spatial")
          e.spatial = true;
        else if (w[k] == "temporal")
          e.temporal = true;
        else if (w[k] == "nofree")
          e.nofree = true;
        else
          throw ParseError(a.line, "unknown instrumentation flag '" + w[k] + "'");
      }
    }
    ip.plan.sites[{a.function, a.index}].push_back(e);
  }
  return ip;
}

SiteCounts count_instrumented_sites(const InstrumentationPlan &plan) {
  SiteCounts c;
  for (const auto &[key, entries] : plan.sites) {
    if (!entries.empty())
      ++c.sites;
    for (const auto &e : entries) {
      ++c.by_class[static_cast<int>(e.cls)];
      ++c.total;
    }
  }
  return c;
}

size_t baseline_site_count(const Program &p) {
  size_t n = 0;
  for (const auto &f : p.functions)
    for (const auto &in : f.instrs)
      if (is_allocation(in.op) || is_dereference(in.op) || in.op == Opcode::Drop ||
          in.op == Opcode::EndScope || in.op == Opcode::LoadField ||
          in.op == Opcode::StoreField || in.op == Opcode::VecPush || in.op == Opcode::VecPop)
        ++n;
  return n;
}

} // namespace ownsan
