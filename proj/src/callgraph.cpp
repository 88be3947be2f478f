// SPDX-License-Identifier: Apache-2.0

#include "ownsan/callgraph.h"

#include <deque>

namespace ownsan {

CallGraph build_call_graph(const Program &p) {
  CallGraph g;
  for (const auto &f : p.functions) {
    g.direct_edges[f.name];
    g.signatures[f.name] = f.signature();
  }
  for (const auto &f : p.functions) {
    for (size_t i = 0; i < f.instrs.size(); ++i) {
      const auto &in = f.instrs[i];
      for (const auto &o : in.operands)
        if (o.tag == Operand::Tag::Func) {
          if (!p.find(o.name))
            throw Error(f.name + ":" + std::to_string(i) + ": function value '@" + o.name +
                        "' names no function");
          g.address_taken.insert(o.name);
        }
      if (in.op == Opcode::Call) {
        if (!p.find(in.aux))
          throw Error(f.name + ":" + std::to_string(i) + ": unresolved callee '" + in.aux + "'");
        g.direct_edges[f.name].insert(in.aux);
      } else if (in.op == Opcode::ICall && in.sig) {
        g.icall_sites.push_back({f.name, i, *in.sig});
      }
    }
  }
  return g;
}

std::set<std::string> matching_targets(const CallGraph &g, const Signature &sig) {
  std::set<std::string> out;
  for (const auto &name : g.address_taken) {
    auto it = g.signatures.find(name);
    if (it != g.signatures.end() && it->second == sig)
      out.insert(name);
  }
  return out;
}

std::set<std::string> compute_reachable(const CallGraph &g,
                                        const std::vector<std::string> &entries) {
  std::map<std::string, std::vector<Signature>> sigs_in;
  for (const auto &s : g.icall_sites)
    sigs_in[s.function].push_back(s.sig);

  std::set<std::string> reach;
  std::deque<std::string> work;
  auto admit = [&](const std::string &f) {
    if (g.direct_edges.count(f) && reach.insert(f).second)
      work.push_back(f);
  };
  for (const auto &e : entries)
    admit(e);
  while (!work.empty()) {
    std::string f = work.front();
    work.pop_front();
    for (const auto &c : g.direct_edges.at(f))
      admit(c);
    auto it = sigs_in.find(f);
    if (it == sigs_in.end())
      continue;
    for (const auto &sig : it->second)
      for (const auto &t : matching_targets(g, sig))
        admit(t);
  }
  return reach;
}

std::set<std::string> compute_reachable(const CallGraph &g, const std::string &entry) {
  return compute_reachable(g, std::vector<std::string>{entry});
}

std::set<std::string> reachable_functions(const Program &p) {
  return compute_reachable(build_call_graph(p), p.entries());
}

} // namespace ownsan
