// SPDX-License-Identifier: Apache-2.0

#include "oracles.h"

#include <deque>
#include <random>

namespace ownsan::testing {

namespace {

struct OracleSource {
  PointerRef ref;
  SourceType type;
  int node;
};

bool kills(Opcode op) {
  return op == Opcode::Drop || op == Opcode::EndScope || op == Opcode::Forget ||
         op == Opcode::Move;
}

// An owner defined before `src` in the same function and released or moved
// on the straight-line stretch that ends at `src`.
bool owner_dead_at(const DerivationGraph &g, int a, const PointerRef &src) {
  const DNode &n = g.nodes()[a];
  if (n.is_field || n.kind != ValueKind::Owner || n.ref.function != src.function)
    return false;
  const Function &f = *g.program().find(src.function);
  for (int i = n.ref.def_site + 1; i < src.def_site; ++i) {
    const Instruction &in = f.instrs[static_cast<size_t>(i)];
    if (!kills(in.op) || in.operands.empty() || !in.operands[0].is_value() ||
        in.operands[0].name != n.ref.value)
      continue;
    if (!oracle_reaching(f, static_cast<size_t>(i), n.ref.value).count(n.ref.def_site))
      continue;
    bool label_between = false;
    for (const auto &l : f.labels)
      if (static_cast<int>(l.index) > i && static_cast<int>(l.index) <= src.def_site)
        label_between = true;
    if (!label_between)
      return true;
  }
  return false;
}

} // namespace

std::set<int> oracle_reaching(const Function &f, size_t index, const std::string &var) {
  using Def = std::pair<std::string, int>;
  const size_t n = f.instrs.size();
  std::vector<std::set<Def>> in(n + 1);
  std::vector<bool> reached(n + 1, false);
  for (size_t k = 0; k < f.params.size(); ++k)
    in[0].insert({f.params[k].name, param_site(k)});
  reached[0] = true;

  auto successors = [&](size_t i) {
    std::vector<size_t> out;
    const Instruction &ins = f.instrs[i];
    if (ins.op == Opcode::Ret)
      return out;
    if (ins.op == Opcode::Br || ins.op == Opcode::CondBr) {
      for (const auto &l : ins.labels)
        out.push_back(*f.label_index(l));
      return out;
    }
    out.push_back(i + 1);
    return out;
  };

  std::deque<size_t> work{0};
  while (!work.empty()) {
    size_t i = work.front();
    work.pop_front();
    if (i >= n)
      continue;
    std::set<Def> out;
    for (const auto &d : in[i])
      if (!f.instrs[i].result || d.first != *f.instrs[i].result)
        out.insert(d);
    if (f.instrs[i].result)
      out.insert({*f.instrs[i].result, static_cast<int>(i)});
    for (size_t s : successors(i)) {
      size_t before = in[s].size();
      in[s].insert(out.begin(), out.end());
      if (!reached[s] || in[s].size() != before) {
        reached[s] = true;
        work.push_back(s);
      }
    }
  }

  std::set<int> sites;
  if (index > n || !reached[index])
    return sites;
  for (const auto &[v, site] : in[index])
    if (v == var)
      sites.insert(site);
  return sites;
}

TaintedSets oracle_taint_closure(const DerivationGraph &g, const SourceClass &sources,
                                 uint64_t budget) {
  std::vector<OracleSource> src;
  for (const auto &[ref, type] : sources) {
    auto node = g.node_of(ref);
    if (!node)
      throw Error("oracle: unknown source " + to_string(ref));
    src.push_back({ref, type, *node});
  }

  uint64_t visits = 0;
  std::vector<std::set<int>> closure(src.size());
  for (size_t s = 0; s < src.size(); ++s) {
    std::set<int> &set = closure[s];
    set.insert(src[s].node);
    for (bool changed = true; changed;) {
      changed = false;
      for (const DEdge &e : g.edges()) {
        if (++visits > budget)
          throw Error("oracle: budget exhausted");
        if (set.count(e.src) && !set.count(e.dst)) {
          set.insert(e.dst);
          changed = true;
        }
        if (src[s].type == SourceType::T1 && set.count(e.dst) && !set.count(e.src) &&
            e.kind != EdgeKind::Move && !owner_dead_at(g, e.src, src[s].ref)) {
          set.insert(e.src);
          changed = true;
        }
      }
    }
  }

  // Sources are connected when either closure holds the other's definition.
  std::vector<int> component(src.size(), -1);
  int next = 0;
  for (size_t s = 0; s < src.size(); ++s) {
    if (component[s] >= 0)
      continue;
    std::deque<size_t> queue{s};
    component[s] = next;
    while (!queue.empty()) {
      size_t a = queue.front();
      queue.pop_front();
      for (size_t b = 0; b < src.size(); ++b) {
        if (component[b] >= 0)
          continue;
        if (closure[a].count(src[b].node) || closure[b].count(src[a].node)) {
          component[b] = next;
          queue.push_back(b);
        }
      }
    }
    ++next;
  }

  TaintedSets out;
  for (size_t s = 0; s < src.size(); ++s) {
    std::set<PointerRef> members, owners;
    for (size_t t = 0; t < src.size(); ++t) {
      if (component[t] != component[s])
        continue;
      for (int n : closure[t]) {
        const DNode &node = g.nodes()[n];
        if (node.is_field)
          continue;
        members.insert(node.ref);
        if (node.kind == ValueKind::Owner)
          owners.insert(node.ref);
      }
    }
    out.sets[src[s].ref] = members;
    out.owners[src[s].ref] = owners;
  }
  return out;
}

namespace {

struct SigSpec {
  std::vector<const char *> params;
  const char *ret; // nullptr: no value
};

const SigSpec kSigTable[] = {
    {{}, "scalar"},
    {{"scalar"}, "scalar"},
    {{"raw"}, "scalar"},
    {{"owner"}, nullptr},
};

std::string sig_text(const SigSpec &s) {
  std::string t = "sig(";
  for (size_t k = 0; k < s.params.size(); ++k)
    t += std::string(k ? "," : "") + s.params[k];
  if (s.ret)
    t += std::string("->") + s.ret;
  return t + ")";
}

} // namespace

RandomCallGraph random_call_graph(uint64_t seed, size_t nfunctions) {
  std::mt19937_64 rng(seed);
  auto below = [&](size_t n) { return std::uniform_int_distribution<size_t>(0, n - 1)(rng); };
  RandomCallGraph g;
  for (size_t k = 0; k < nfunctions; ++k) {
    RandomCallGraph::Fn fn;
    fn.name = k == 0 ? "main" : "f" + std::to_string(k);
    fn.sig = k == 0 ? 0 : static_cast<int>(below(std::size(kSigTable)));
    g.fns.push_back(fn);
  }
  for (auto &fn : g.fns) {
    for (size_t c = below(3); c > 0; --c)
      fn.direct.push_back(static_cast<int>(below(nfunctions)));
    for (size_t c = below(3) == 0 ? 1 : 0; c > 0; --c)
      fn.icall_sigs.push_back(static_cast<int>(below(std::size(kSigTable))));
    for (size_t c = below(4) == 0 ? 1 : 0; c > 0; --c)
      fn.takes_address.push_back(static_cast<int>(below(nfunctions)));
  }

  std::string &t = g.text;
  for (size_t k = 0; k < g.fns.size(); ++k) {
    auto &fn = g.fns[k];
    const SigSpec &own = kSigTable[fn.sig];
    t += "fn " + fn.name + "(";
    for (size_t a = 0; a < own.params.size(); ++a)
      t += std::string(a ? ", " : "") + "%p" + std::to_string(a) + ": " + own.params[a];
    t += ")";
    if (own.ret)
      t += std::string(" -> ") + own.ret;
    t += k == 0 ? " entry {\n" : " {\n";

    int v = 0;
    auto arg_list = [&](const SigSpec &s) {
      std::string args;
      for (size_t a = 0; a < s.params.size(); ++a) {
        std::string name = "%a" + std::to_string(v++);
        std::string kind = s.params[a];
        if (kind == "scalar")
          t += "  " + name + " = copy 1\n";
        else if (kind == "raw")
          t += "  " + name + " = null\n";
        else
          t += "  " + name + " = heap_alloc 1\n";
        args += (a ? ", " : "") + name;
      }
      return args;
    };
    for (int a : fn.takes_address)
      t += "  %t" + std::to_string(v++) + " = copy @" + g.fns[a].name + "\n";
    for (int c : fn.direct) {
      const SigSpec &s = kSigTable[g.fns[c].sig];
      std::string args = arg_list(s);
      t += "  " + (s.ret ? "%c" + std::to_string(v++) + " = " : std::string()) + "call " +
           g.fns[c].name + "(" + args + ")\n";
    }
    for (int sig : fn.icall_sigs) {
      // The pointer itself is some function's address; the structure records it.
      int target = static_cast<int>(below(nfunctions));
      fn.takes_address.push_back(target);
      std::string fp = "%fp" + std::to_string(v++);
      t += "  " + fp + " = copy @" + g.fns[target].name + "\n";
      const SigSpec &s = kSigTable[sig];
      std::string args = arg_list(s);
      t += "  " + (s.ret ? "%i" + std::to_string(v++) + " = " : std::string()) + "icall " +
           fp + "(" + args + ") " + sig_text(s) + "\n";
    }
    t += own.ret ? "  ret 0\n}\n\n" : "  ret\n}\n\n";
  }
  return g;
}

std::set<std::string> oracle_reachable(const RandomCallGraph &g) {
  std::set<int> taken;
  for (const auto &fn : g.fns)
    taken.insert(fn.takes_address.begin(), fn.takes_address.end());

  std::vector<bool> seen(g.fns.size(), false);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    int f = queue.front();
    queue.pop_front();
    std::vector<int> next = g.fns[f].direct;
    for (int sig : g.fns[f].icall_sigs)
      for (int t : taken)
        if (g.fns[t].sig == sig)
          next.push_back(t);
    for (int n : next)
      if (!seen[n]) {
        seen[n] = true;
        queue.push_back(n);
      }
  }
  std::set<std::string> out;
  for (size_t k = 0; k < g.fns.size(); ++k)
    if (seen[k])
      out.insert(g.fns[k].name);
  return out;
}

} // namespace ownsan::testing
