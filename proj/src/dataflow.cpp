// SPDX-License-Identifier: Apache-2.0

#include "ownsan/dataflow.h"

#include <algorithm>
#include <deque>

namespace ownsan {

std::vector<std::vector<size_t>> successors(const Function &f) {
  const size_t n = f.instrs.size();
  std::vector<std::vector<size_t>> succ(n);
  for (size_t i = 0; i < n; ++i) {
    const auto &in = f.instrs[i];
    switch (in.op) {
    case Opcode::Ret:
      succ[i].push_back(n);
      break;
    case Opcode::Br:
    case Opcode::CondBr:
      for (const auto &l : in.labels)
        if (auto t = f.label_index(l))
          succ[i].push_back(*t);
      break;
    default:
      succ[i].push_back(i + 1);
    }
  }
  return succ;
}

ReachingDefs::ReachingDefs(const Function &f) {
  const size_t n = f.instrs.size();
  for (size_t i = 0; i < f.params.size(); ++i)
    defs_.push_back({param_site(i), f.params[i].name});
  for (size_t i = 0; i < n; ++i)
    if (f.instrs[i].result)
      defs_.push_back({static_cast<int>(i), *f.instrs[i].result});
  for (size_t d = 0; d < defs_.size(); ++d) {
    by_var_[defs_[d].var].push_back(static_cast<int>(d));
    sites_by_var_[defs_[d].var].push_back(defs_[d].site);
    var_ids_.emplace(defs_[d].var, var_ids_.size());
  }
  for (auto &[v, sites] : sites_by_var_)
    std::sort(sites.begin(), sites.end());

  const size_t nd = defs_.size();
  const size_t nv = var_ids_.size();
  auto succ = successors(f);
  std::vector<std::vector<size_t>> pred(n + 1);
  for (size_t i = 0; i < n; ++i)
    for (size_t s : succ[i])
      pred[s].push_back(i);

  // Entry state: parameters defined.
  std::vector<char> entry_may(nd, 0), entry_must(nv, 0);
  for (size_t d = 0; d < f.params.size(); ++d) {
    entry_may[d] = 1;
    entry_must[var_ids_.at(defs_[d].var)] = 1;
  }

  may_in_.assign(n + 1, std::vector<char>(nd, 0));
  must_in_.assign(n + 1, std::vector<char>(nv, 1));
  std::vector<char> seen(n + 1, 0);

  auto transfer_may = [&](size_t i, std::vector<char> s) {
    const auto &in = f.instrs[i];
    if (in.result) {
      for (int d : by_var_.at(*in.result))
        s[d] = 0;
      for (int d : by_var_.at(*in.result))
        if (defs_[d].site == static_cast<int>(i))
          s[d] = 1;
    }
    return s;
  };
  auto transfer_must = [&](size_t i, std::vector<char> s) {
    if (f.instrs[i].result)
      s[var_ids_.at(*f.instrs[i].result)] = 1;
    return s;
  };

  std::deque<size_t> work;
  for (size_t i = 0; i <= n; ++i)
    work.push_back(i);
  std::vector<char> queued(n + 1, 1);
  while (!work.empty()) {
    size_t i = work.front();
    work.pop_front();
    queued[i] = 0;
    std::vector<char> may(nd, 0), must(nv, 1);
    bool any_pred = false;
    if (i == 0) {
      may = entry_may;
      must = entry_must;
      any_pred = true;
    }
    for (size_t p : pred[i]) {
      if (!seen[p])
        continue;
      auto pm = transfer_may(p, may_in_[p]);
      auto pu = transfer_must(p, must_in_[p]);
      if (!any_pred) {
        may = pm;
        must = pu;
        any_pred = true;
        continue;
      }
      for (size_t d = 0; d < nd; ++d)
        may[d] = may[d] || pm[d];
      for (size_t v = 0; v < nv; ++v)
        must[v] = must[v] && pu[v];
    }
    if (!any_pred)
      continue; // unreachable so far
    if (seen[i] && may == may_in_[i] && must == must_in_[i])
      continue;
    seen[i] = 1;
    may_in_[i] = std::move(may);
    must_in_[i] = std::move(must);
    if (i < n)
      for (size_t s : succ[i])
        if (!queued[s]) {
          queued[s] = 1;
          work.push_back(s);
        }
  }
  // Unreachable instructions define nothing on entry.
  for (size_t i = 0; i <= n; ++i)
    if (!seen[i])
      std::fill(must_in_[i].begin(), must_in_[i].end(), 0);
  seen_ = std::move(seen);
}

std::vector<int> ReachingDefs::at(size_t index, const std::string &var) const {
  std::vector<int> out;
  auto it = by_var_.find(var);
  if (it == by_var_.end() || index >= may_in_.size())
    return out;
  for (int d : it->second)
    if (may_in_[index][d])
      out.push_back(defs_[d].site);
  std::sort(out.begin(), out.end());
  return out;
}

bool ReachingDefs::must_be_defined(size_t index, const std::string &var) const {
  auto it = var_ids_.find(var);
  if (it == var_ids_.end() || index >= must_in_.size())
    return false;
  return must_in_[index][it->second] != 0;
}

const std::vector<int> &ReachingDefs::defs_of(const std::string &var) const {
  static const std::vector<int> kEmpty;
  auto it = sites_by_var_.find(var);
  return it == sites_by_var_.end() ? kEmpty : it->second;
}

} // namespace ownsan
