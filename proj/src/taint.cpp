// SPDX-License-Identifier: Apache-2.0

#include "ownsan/taint.h"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <numeric>
#include <thread>

namespace ownsan {

std::set<PointerRef> TaintedSets::all_tainted() const {
  std::set<PointerRef> out;
  for (const auto &[src, members] : sets)
    out.insert(members.begin(), members.end());
  return out;
}

namespace {

struct Source {
  PointerRef ref;
  int node = -1;
  SourceType type = SourceType::T1;
};

class Engine {
 public:
  Engine(const DerivationGraph &g, const SourceClass &sources) : g_(g) {
    for (const auto &[ref, type] : sources) {
      auto n = g.node_of(ref);
      if (!n)
        throw Error("taint source " + to_string(ref) + " is not a pointer definition");
      sources_.push_back({ref, *n, type});
    }
    classify();
    index_invalidations();
  }

  TaintedSets run(unsigned threads) {
    std::vector<std::vector<char>> sets(sources_.size(),
                                        std::vector<char>(g_.nodes().size(), 0));
    for (size_t s = 0; s < sources_.size(); ++s)
      sets[s][sources_[s].node] = 1;

    intra_pass(sets, threads);

    // Single pass over the cached cross-function derivations.
    for (size_t s = 0; s < sources_.size(); ++s)
      for (int e : worklist_) {
        const DEdge &d = g_.edges()[e];
        if (sets[s][d.src])
          sets[s][d.dst] = 1;
        else if (sets[s][d.dst] && backward_ok(s, d))
          sets[s][d.src] = 1;
      }

    // Depth-first closure of every set.
    for (size_t s = 0; s < sources_.size(); ++s) {
      std::vector<char> visited(g_.nodes().size(), 0);
      std::vector<int> stack;
      for (size_t n = 0; n < sets[s].size(); ++n)
        if (sets[s][n])
          stack.push_back(static_cast<int>(n));
      while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        if (visited[p])
          continue;
        visited[p] = 1;
        sets[s][p] = 1;
        auto forward = [&](int e) {
          int dst = g_.edges()[e].dst;
          if (!visited[dst])
            stack.push_back(dst);
        };
        auto backward = [&](int e) {
          const DEdge &d = g_.edges()[e];
          if (!visited[d.src] && backward_ok(s, d))
            stack.push_back(d.src);
        };
        for (int e : wl_out_[p])
          forward(e);
        for (int e : wl_in_[p])
          backward(e);
        for (int e : local_out_[p])
          forward(e);
        for (int e : local_in_[p])
          backward(e);
      }
    }
    return merge(sets);
  }

 private:
  const DerivationGraph &g_;
  std::vector<Source> sources_;
  std::vector<int> worklist_; // unresolved derivations
  std::vector<std::vector<int>> wl_out_, wl_in_;
  std::vector<std::vector<int>> local_out_, local_in_; // resolved derivations
  // function -> var -> sites of drop/end_scope/forget/move of that var
  std::map<std::string, std::map<std::string, std::vector<size_t>>> kills_;

  const std::string &fn_of(int n) const { return g_.nodes()[n].ref.function; }

  // Parameters, call results, loads and field slots take their value from
  // outside the function; so does anything derived from them locally.
  void classify() {
    const auto &nodes = g_.nodes();
    const auto &edges = g_.edges();
    std::vector<char> unresolved(nodes.size(), 0);
    std::vector<int> stack;
    for (size_t n = 0; n < nodes.size(); ++n) {
      const DNode &d = nodes[n];
      if (d.is_field || d.is_param || d.op == Opcode::Call || d.op == Opcode::ICall ||
          d.op == Opcode::LoadField) {
        unresolved[n] = 1;
        stack.push_back(static_cast<int>(n));
      }
    }
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (int e : g_.out_edges(n)) {
        int dst = edges[e].dst;
        if (!unresolved[dst] && fn_of(dst) == fn_of(n) && !edges[e].interprocedural()) {
          unresolved[dst] = 1;
          stack.push_back(dst);
        }
      }
    }
    wl_out_.assign(nodes.size(), {});
    wl_in_.assign(nodes.size(), {});
    local_out_.assign(nodes.size(), {});
    local_in_.assign(nodes.size(), {});
    for (size_t e = 0; e < edges.size(); ++e) {
      const DEdge &d = edges[e];
      int id = static_cast<int>(e);
      bool crosses = d.interprocedural() || fn_of(d.src) != fn_of(d.dst);
      if (crosses || unresolved[d.src] || unresolved[d.dst]) {
        worklist_.push_back(id);
        wl_out_[d.src].push_back(id);
        wl_in_[d.dst].push_back(id);
      } else {
        local_out_[d.src].push_back(id);
        local_in_[d.dst].push_back(id);
      }
    }
  }

  void index_invalidations() {
    for (const auto &f : g_.program().functions) {
      if (!g_.reachable().count(f.name))
        continue;
      auto &kills = kills_[f.name];
      for (size_t i = 0; i < f.instrs.size(); ++i) {
        const auto &in = f.instrs[i];
        if ((in.op == Opcode::Drop || in.op == Opcode::EndScope || in.op == Opcode::Forget ||
             in.op == Opcode::Move) &&
            !in.operands.empty() && in.operands[0].is_value())
          kills[in.operands[0].name].push_back(i);
      }
    }
  }

  bool invalidated_before(int a, const PointerRef &src) const {
    const DNode &n = g_.nodes()[a];
    if (n.is_field || n.kind != ValueKind::Owner || n.ref.function != src.function)
      return false;
    auto fk = kills_.find(src.function);
    if (fk == kills_.end())
      return false;
    auto vk = fk->second.find(n.ref.value);
    if (vk == fk->second.end())
      return false;
    const Function *f = g_.program().find(src.function);
    const ReachingDefs &rd = g_.reaching(src.function);
    for (size_t i : vk->second) {
      int site = static_cast<int>(i);
      if (site <= n.ref.def_site || site >= src.def_site)
        continue;
      auto defs = rd.at(i, n.ref.value);
      if (!std::binary_search(defs.begin(), defs.end(), n.ref.def_site))
        continue;
      bool joined = std::any_of(f->labels.begin(), f->labels.end(), [&](const Label &l) {
        return static_cast<int>(l.index) > site && static_cast<int>(l.index) <= src.def_site;
      });
      if (!joined)
        return true;
    }
    return false;
  }

  bool backward_ok(size_t s, const DEdge &d) const {
    return sources_[s].type == SourceType::T1 && !d.transfer() &&
           !invalidated_before(d.src, sources_[s].ref);
  }

  // Closes every source over the resolved derivations of its own function.
  void intra_pass(std::vector<std::vector<char>> &sets, unsigned threads) {
    std::vector<std::string> fns;
    std::map<std::string, std::vector<size_t>> by_fn;
    for (size_t s = 0; s < sources_.size(); ++s)
      by_fn[sources_[s].ref.function].push_back(s);
    for (const auto &[fn, ss] : by_fn)
      fns.push_back(fn);

    std::mutex mu;
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (size_t k; (k = next.fetch_add(1)) < fns.size();) {
        const std::string &fn = fns[k];
        for (size_t s : by_fn.at(fn)) {
          std::vector<char> local(g_.nodes().size(), 0);
          std::vector<int> stack{sources_[s].node};
          while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            if (local[p])
              continue;
            local[p] = 1;
            for (int e : local_out_[p])
              stack.push_back(g_.edges()[e].dst);
            for (int e : local_in_[p])
              if (backward_ok(s, g_.edges()[e]))
                stack.push_back(g_.edges()[e].src);
          }
          std::lock_guard<std::mutex> lock(mu);
          for (size_t n = 0; n < local.size(); ++n)
            if (local[n])
              sets[s][n] = 1;
        }
      }
    };
    unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(fns.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t)
      pool.emplace_back(worker);
    worker();
    for (auto &t : pool)
      t.join();
  }

  TaintedSets merge(const std::vector<std::vector<char>> &sets) const {
    std::vector<size_t> parent(sources_.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](size_t x) {
      while (parent[x] != x)
        x = parent[x] = parent[parent[x]];
      return x;
    };
    for (size_t a = 0; a < sources_.size(); ++a)
      for (size_t b = 0; b < sources_.size(); ++b)
        if (a != b && sets[a][sources_[b].node])
          parent[find(a)] = find(b);

    std::map<size_t, std::set<PointerRef>> groups;
    for (size_t s = 0; s < sources_.size(); ++s) {
      auto &group = groups[find(s)];
      for (size_t n = 0; n < sets[s].size(); ++n)
        if (sets[s][n] && !g_.nodes()[n].is_field)
          group.insert(g_.nodes()[n].ref);
    }
    TaintedSets out;
    for (size_t s = 0; s < sources_.size(); ++s) {
      const auto &group = groups[find(s)];
      out.sets[sources_[s].ref] = group;
      auto &owners = out.owners[sources_[s].ref];
      for (const auto &r : group)
        if (g_.nodes()[*g_.node_of(r)].kind == ValueKind::Owner)
          owners.insert(r);
    }
    return out;
  }
};

} // namespace

TaintedSets propagate_taint(const DerivationGraph &g, const SourceClass &sources,
                            const TaintOptions &opts) {
  return Engine(g, sources).run(opts.threads);
}

} // namespace ownsan
