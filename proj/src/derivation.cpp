// SPDX-License-Identifier: Apache-2.0

#include "ownsan/derivation.h"

#include "ownsan/callgraph.h"

namespace ownsan {

std::string to_string(const PointerRef &r) {
  return r.function + ":%" + r.value + "@" + std::to_string(r.def_site);
}

const char *edge_kind_name(EdgeKind k) {
  switch (k) {
  case EdgeKind::Assign:
    return "assign";
  case EdgeKind::Compute:
    return "compute";
  case EdgeKind::Cast:
    return "cast";
  case EdgeKind::Rebox:
    return "rebox";
  case EdgeKind::Move:
    return "move";
  case EdgeKind::Store:
    return "store";
  case EdgeKind::Load:
    return "load";
  case EdgeKind::Argument:
    return "argument";
  case EdgeKind::Return:
    return "return";
  case EdgeKind::FieldLink:
    return "field";
  }
  return "?";
}

int DerivationGraph::add_node(DNode n) {
  int id = static_cast<int>(nodes_.size());
  if (!n.is_field)
    by_ref_.emplace(n.ref, id);
  nodes_.push_back(std::move(n));
  out_.emplace_back();
  in_.emplace_back();
  return id;
}

int DerivationGraph::slot(int base, const std::string &field) {
  auto key = std::make_pair(base, field);
  auto it = fields_.find(key);
  if (it != fields_.end())
    return it->second;
  DNode n;
  n.ref = nodes_[base].ref;
  n.is_field = true;
  n.base = base;
  n.field = field;
  auto k = field_kinds_.find(field);
  n.kind = k == field_kinds_.end() ? ValueKind::Raw : k->second;
  int id = add_node(std::move(n));
  fields_.emplace(key, id);
  return id;
}

void DerivationGraph::add_edge(int src, int dst, EdgeKind k, const std::string &fn, int site) {
  if (!edge_keys_.insert({src, dst, static_cast<int>(k)}).second)
    return;
  int id = static_cast<int>(edges_.size());
  edges_.push_back({src, dst, k, fn, site});
  out_[src].push_back(id);
  in_[dst].push_back(id);
}

std::optional<int> DerivationGraph::node_of(const PointerRef &r) const {
  auto it = by_ref_.find(r);
  if (it == by_ref_.end())
    return std::nullopt;
  return it->second;
}

std::optional<int> DerivationGraph::field_node(int base, const std::string &field) const {
  auto it = fields_.find({base, field});
  if (it == fields_.end())
    return std::nullopt;
  return it->second;
}

std::vector<int> DerivationGraph::operand_nodes(const std::string &fn, size_t index,
                                                const std::string &var) const {
  std::vector<int> out;
  auto it = rd_.find(fn);
  if (it == rd_.end())
    return out;
  for (int site : it->second.at(index, var))
    if (auto n = node_of({fn, site, var}))
      out.push_back(*n);
  return out;
}

const std::set<std::string> &DerivationGraph::icall_targets(const std::string &fn,
                                                            size_t index) const {
  static const std::set<std::string> kNone;
  auto it = icall_targets_.find({fn, index});
  return it == icall_targets_.end() ? kNone : it->second;
}

DerivationGraph::DerivationGraph(const Program &p, const std::set<std::string> &reachable)
    : p_(&p), reachable_(reachable) {
  CallGraph cg = build_call_graph(p);
  for (const auto &f : p.functions) {
    if (!reachable_.count(f.name))
      continue;
    rd_.emplace(f.name, ReachingDefs(f));
    for (size_t i = 0; i < f.params.size(); ++i)
      if (is_pointer_kind(f.params[i].kind)) {
        DNode n;
        n.ref = {f.name, param_site(i), f.params[i].name};
        n.kind = f.params[i].kind;
        n.is_param = true;
        add_node(std::move(n));
      }
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      if (in.op == Opcode::StoreField && in.operands.size() > 1 &&
          is_pointer_kind(in.operands[1].kind))
        field_kinds_.emplace(in.aux, in.operands[1].kind);
      if (in.op == Opcode::LoadField && is_pointer_kind(in.result_kind))
        field_kinds_.emplace(in.aux, in.result_kind);
      if (!in.result || !is_pointer_kind(in.result_kind))
        continue;
      DNode n;
      n.ref = {f.name, static_cast<int>(i), *in.result};
      n.kind = in.result_kind;
      n.op = in.op;
      n.view = in.has_view_count();
      add_node(std::move(n));
    }
  }

  auto param_node = [&](const Function &callee, size_t k) -> std::optional<int> {
    return node_of({callee.name, param_site(k), callee.params[k].name});
  };

  for (const auto &f : p.functions) {
    if (!reachable_.count(f.name))
      continue;
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      const int site = static_cast<int>(i);
      auto uses = [&](const Operand &o) {
        if (!o.is_value() || !is_pointer_kind(o.kind))
          return std::vector<int>{};
        return operand_nodes(f.name, i, o.name);
      };
      std::optional<int> res;
      if (in.result && is_pointer_kind(in.result_kind))
        res = node_of({f.name, site, *in.result});

      auto derive = [&](EdgeKind k) {
        if (!res || in.operands.empty())
          return;
        for (int s : uses(in.operands[0]))
          add_edge(s, *res, k, f.name, site);
      };

      switch (in.op) {
      case Opcode::Copy:
        derive(EdgeKind::Assign);
        break;
      case Opcode::Gep:
        derive(EdgeKind::Compute);
        break;
      case Opcode::AsRaw:
        derive(EdgeKind::Cast);
        break;
      case Opcode::BoxFromRaw:
        derive(EdgeKind::Rebox);
        break;
      case Opcode::Move:
        derive(EdgeKind::Move);
        break;
      case Opcode::StoreField:
        if (in.operands.size() > 1)
          for (int obj : uses(in.operands[0]))
            for (int v : uses(in.operands[1]))
              add_edge(v, slot(obj, in.aux), EdgeKind::Store, f.name, site);
        break;
      case Opcode::LoadField:
        if (res)
          for (int obj : uses(in.operands[0]))
            add_edge(slot(obj, in.aux), *res, EdgeKind::Load, f.name, site);
        break;
      case Opcode::Call:
      case Opcode::ICall: {
        std::vector<const Function *> callees;
        size_t first = 0;
        if (in.op == Opcode::Call) {
          if (const Function *c = p.find(in.aux))
            callees.push_back(c);
        } else {
          first = 1;
          if (in.sig) {
            auto &targets = icall_targets_[{f.name, i}];
            for (const auto &t : matching_targets(cg, *in.sig))
              if (reachable_.count(t)) {
                targets.insert(t);
                callees.push_back(p.find(t));
              }
          }
        }
        for (const Function *callee : callees) {
          for (size_t a = first; a < in.operands.size(); ++a) {
            size_t k = a - first;
            if (k >= callee->params.size())
              break;
            auto pn = param_node(*callee, k);
            if (!pn)
              continue;
            for (int s : uses(in.operands[a]))
              add_edge(s, *pn, EdgeKind::Argument, f.name, site);
          }
          if (!res)
            continue;
          const ReachingDefs &crd = rd_.at(callee->name);
          for (size_t r = 0; r < callee->instrs.size(); ++r) {
            const auto &ret = callee->instrs[r];
            if (ret.op != Opcode::Ret || ret.operands.empty() || !ret.operands[0].is_value())
              continue;
            for (int d : crd.at(r, ret.operands[0].name))
              if (auto s = node_of({callee->name, d, ret.operands[0].name}))
                add_edge(*s, *res, EdgeKind::Return, f.name, site);
          }
        }
        break;
      }
      default:
        break;
      }
    }
  }

  // Pointers related by a derivation address the same object, so their field
  // slots alias.
  if (!field_kinds_.empty()) {
    const size_t n = edges_.size();
    for (size_t e = 0; e < n; ++e) {
      DEdge ed = edges_[e];
      if (nodes_[ed.src].is_field || nodes_[ed.dst].is_field)
        continue;
      for (const auto &[fld, kind] : field_kinds_) {
        int a = slot(ed.src, fld);
        int b = slot(ed.dst, fld);
        add_edge(a, b, EdgeKind::FieldLink, ed.function, ed.site);
        add_edge(b, a, EdgeKind::FieldLink, ed.function, ed.site);
      }
    }
  }
}

} // namespace ownsan
