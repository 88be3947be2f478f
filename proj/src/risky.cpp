// SPDX-License-Identifier: Apache-2.0

#include "ownsan/risky.h"

#include "ownsan/callgraph.h"

namespace ownsan {

namespace {

bool is_raw_root(const DNode &n) {
  return !n.is_field && !n.is_param &&
         (n.op == Opcode::AsRaw || n.op == Opcode::RawAlloc || n.op == Opcode::Null);
}

// Collects the raw roots feeding `start`; `start` itself when none is found.
void trace_roots(const DerivationGraph &g, int start, std::set<PointerRef> &out) {
  std::vector<char> seen(g.nodes().size(), 0);
  std::vector<int> stack{start};
  bool found = false;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (seen[n])
      continue;
    seen[n] = 1;
    const DNode &node = g.nodes()[n];
    if (is_raw_root(node)) {
      out.insert(node.ref);
      found = true;
      continue;
    }
    bool any = false;
    for (int e : g.in_edges(n)) {
      int src = g.edges()[e].src;
      if (g.nodes()[src].kind != ValueKind::Raw)
        continue;
      any = true;
      stack.push_back(src);
    }
    if (!any && !node.is_field) {
      out.insert(node.ref);
      found = true;
    }
  }
  if (!found)
    out.insert(g.nodes()[start].ref);
}

} // namespace

const char *source_type_name(SourceType t) { return t == SourceType::T1 ? "T1" : "T2"; }

std::set<PointerRef> find_exposed_raw_pointers(const DerivationGraph &g) {
  std::set<PointerRef> out;
  for (const auto &f : g.program().functions) {
    if (!g.reachable().count(f.name))
      continue;
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      if (!in.is_unsafe)
        continue;
      std::vector<int> starts;
      for (const auto &o : in.operands)
        if (o.is_value() && o.kind == ValueKind::Raw)
          for (int n : g.operand_nodes(f.name, i, o.name))
            starts.push_back(n);
      if (in.result && in.result_kind == ValueKind::Raw)
        if (auto n = g.node_of({f.name, static_cast<int>(i), *in.result}))
          starts.push_back(*n);
      for (int s : starts)
        trace_roots(g, s, out);
    }
  }
  return out;
}

SourceClass classify_sources(const DerivationGraph &g, const std::set<PointerRef> &exposed) {
  SourceClass out;
  for (const auto &r : exposed) {
    auto n = g.node_of(r);
    if (!n)
      throw Error("exposed pointer " + to_string(r) + " is not a pointer definition");
    const DNode &node = g.nodes()[*n];
    if (!is_raw_root(node))
      throw Error("exposed pointer " + to_string(r) + " has no resolvable root");
    out.emplace(r, node.op == Opcode::AsRaw ? SourceType::T1 : SourceType::T2);
  }
  return out;
}

std::set<std::string> resolve_indirect_callees(const Program &p, const std::string &fn,
                                               size_t index) {
  const Function *f = p.find(fn);
  if (!f || index >= f->instrs.size() || f->instrs[index].op != Opcode::ICall ||
      !f->instrs[index].sig)
    throw Error(fn + ":" + std::to_string(index) + " is not an indirect call");
  return matching_targets(build_call_graph(p), *f->instrs[index].sig);
}

std::vector<UnsafeApiSite> find_unsafe_api_sites(const DerivationGraph &g) {
  std::vector<UnsafeApiSite> out;
  for (const auto &f : g.program().functions) {
    if (!g.reachable().count(f.name))
      continue;
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      if (in.op == Opcode::ApiSetLen) {
        UnsafeApiSite s{f.name, i, "set_len", {}};
        if (!in.operands.empty() && in.operands[0].is_value())
          for (int n : g.operand_nodes(f.name, i, in.operands[0].name))
            s.pointers.push_back(g.nodes()[n].ref);
        out.push_back(std::move(s));
      } else if (in.op == Opcode::ApiUnchecked) {
        out.push_back({f.name, i, "unchecked_" + in.aux, {}});
      }
    }
  }
  return out;
}

std::set<PointerRef> spatial_closure(const DerivationGraph &g,
                                     const std::set<PointerRef> &exposed) {
  std::vector<char> seen(g.nodes().size(), 0);
  std::vector<int> stack;
  for (const auto &r : exposed)
    if (auto n = g.node_of(r))
      stack.push_back(*n);
  std::set<PointerRef> out;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (seen[n])
      continue;
    seen[n] = 1;
    if (!g.nodes()[n].is_field)
      out.insert(g.nodes()[n].ref);
    for (int e : g.out_edges(n)) {
      int dst = g.edges()[e].dst;
      if (g.nodes()[dst].kind == ValueKind::Raw)
        stack.push_back(dst);
    }
  }
  return out;
}

} // namespace ownsan
