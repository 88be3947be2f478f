// SPDX-License-Identifier: Apache-2.0

#include "ownsan/metadata.h"

#include <algorithm>
#include <deque>

namespace ownsan {

SizeExpr SizeExpr::of(const Operand &o) {
  if (o.is_value())
    return {std::nullopt, o.name};
  return lit(o.literal);
}

std::string SizeExpr::str() const {
  return literal ? std::to_string(*literal) : "%" + symbol;
}

const char *root_kind_name(RootKind k) {
  switch (k) {
  case RootKind::Allocation:
    return "allocation";
  case RootKind::View:
    return "view";
  case RootKind::Null:
    return "null";
  case RootKind::Unresolved:
    return "unresolved";
  }
  return "?";
}

namespace {

bool is_spatial_root(const DNode &n) {
  if (n.is_field || n.is_param)
    return false;
  return is_allocation(n.op) || n.op == Opcode::Null || n.view;
}

const Instruction &def_instr(const DerivationGraph &g, const PointerRef &r) {
  return g.program().find(r.function)->instrs[static_cast<size_t>(r.def_site)];
}

} // namespace

Backtrack backtrack_root(const DerivationGraph &g, const PointerRef &ptr) {
  auto start = g.node_of(ptr);
  if (!start)
    throw Error("no pointer definition " + to_string(ptr));
  const auto &nodes = g.nodes();
  const auto &edges = g.edges();
  std::vector<int> via(nodes.size(), -2); // edge taken towards ptr; -1 at start
  std::deque<int> queue{*start};
  via[*start] = -1;
  std::vector<int> roots;
  bool single = true;
  while (!queue.empty()) {
    int n = queue.front();
    queue.pop_front();
    const DNode &node = nodes[n];
    if (is_spatial_root(node)) {
      roots.push_back(n);
      continue;
    }
    const auto &in = g.in_edges(n);
    if (in.empty()) {
      if (!node.is_field)
        roots.push_back(n);
      continue;
    }
    if (in.size() > 1)
      single = false;
    for (int e : in) {
      int src = edges[e].src;
      if (via[src] != -2) {
        single = false;
        continue;
      }
      via[src] = e;
      queue.push_back(src);
    }
  }

  if (roots.empty())
    roots.push_back(*start);
  Backtrack out;
  for (size_t n = 0; n < nodes.size(); ++n)
    if (via[n] != -2 && !nodes[n].is_field)
      out.members.insert(nodes[n].ref);
  for (int r : roots)
    out.roots.push_back(nodes[r].ref);
  out.single_path = single && roots.size() == 1;
  for (int n = roots.front(); n != -1;) {
    if (!nodes[n].is_field)
      out.chain.push_back(nodes[n].ref);
    int e = via[n];
    n = e < 0 ? -1 : edges[e].dst;
  }
  return out;
}

std::map<PointerRef, SpatialTemplate> infer_spatial(const DerivationGraph &g,
                                                    const RiskSet &risk) {
  std::map<PointerRef, SpatialTemplate> out;
  for (const auto &ptr : risk.spatially_risky) {
    Backtrack b = backtrack_root(g, ptr);
    SpatialTemplate t;
    t.pointer = ptr;
    t.roots = b.roots;
    t.root = b.roots.front();
    t.chain = b.chain;
    t.members = b.members;

    const DNode &root = g.nodes()[*g.node_of(t.root)];
    if (root.is_param || !is_spatial_root(root)) {
      t.root_kind = RootKind::Unresolved;
      t.capacity = t.init_len = SizeExpr::lit(0);
    } else {
      const Instruction &in = def_instr(g, t.root);
      switch (in.op) {
      case Opcode::HeapAlloc:
        t.capacity = t.init_len = SizeExpr::of(in.operands[0]);
        break;
      case Opcode::HeapAllocUninit:
      case Opcode::RawAlloc:
        t.capacity = SizeExpr::of(in.operands[0]);
        t.init_len = SizeExpr::lit(0);
        break;
      case Opcode::VecNew:
        t.capacity = SizeExpr::of(in.operands[0]);
        t.init_len = SizeExpr::of(in.operands[1]);
        break;
      case Opcode::AsRaw:
        t.root_kind = RootKind::View;
        t.capacity = t.init_len = SizeExpr::of(in.operands[1]);
        break;
      default:
        t.root_kind = RootKind::Null;
        t.capacity = t.init_len = SizeExpr::lit(0);
        break;
      }
    }

    if (b.single_path) {
      int64_t offset = 0;
      bool literal = true;
      for (size_t k = 1; k < t.chain.size(); ++k) {
        if (t.chain[k].def_site < 0)
          continue;
        const Instruction &in = def_instr(g, t.chain[k]);
        if (in.op != Opcode::Gep)
          continue;
        if (in.operands[1].is_value())
          literal = false;
        else
          offset += in.operands[1].literal;
      }
      if (literal)
        t.static_offset = offset;
    }
    out.emplace(ptr, std::move(t));
  }
  return out;
}

std::set<PointerRef> mark_metadata_carriers(const std::map<PointerRef, SpatialTemplate> &templates,
                                            const RiskSet &risk) {
  std::set<PointerRef> out;
  for (const auto &[ptr, t] : templates)
    for (const auto &m : t.members)
      if (!risk.spatially_risky.count(m))
        out.insert(m);
  return out;
}

std::map<PointerRef, TemporalTemplate> infer_owners(const DerivationGraph &g,
                                                    const TaintedSets &tainted) {
  std::map<PointerRef, TemporalTemplate> out;
  for (const auto &[src, members] : tainted.sets) {
    TemporalTemplate t{src, members, {}};
    for (const auto &m : members) {
      auto n = g.node_of(m);
      if (n && g.nodes()[*n].kind == ValueKind::Owner)
        t.owner_set.insert(m);
    }
    out.emplace(src, std::move(t));
  }
  return out;
}

} // namespace ownsan
