// SPDX-License-Identifier: Apache-2.0
//
// Instruction-level control flow and reaching definitions for one function.

#ifndef OWNSAN_DATAFLOW_H
#define OWNSAN_DATAFLOW_H

#include <map>
#include <string>
#include <vector>

#include "ownsan/ir.h"

namespace ownsan {

// Successors of every instruction; index == instrs.size() is the exit.
// Branches to unknown labels are dropped (the validator reports them).
std::vector<std::vector<size_t>> successors(const Function &f);

class ReachingDefs {
 public:
  explicit ReachingDefs(const Function &f);

  // Definition sites of `var` that may reach instruction `index` (params are
  // negative sites). Sorted ascending.
  std::vector<int> at(size_t index, const std::string &var) const;

  // True iff every path from entry to `index` defines `var`.
  bool must_be_defined(size_t index, const std::string &var) const;

  // False for instructions no path from entry reaches.
  bool reachable(size_t index) const { return index < seen_.size() && seen_[index]; }

  // Every definition site of `var` in the function.
  const std::vector<int> &defs_of(const std::string &var) const;

 private:
  struct Def {
    int site;
    std::string var;
  };
  std::vector<Def> defs_;
  std::map<std::string, std::vector<int>> by_var_;       // var -> def ids
  std::map<std::string, std::vector<int>> sites_by_var_; // var -> def sites
  std::vector<std::vector<char>> may_in_;  // per instruction, per def id
  std::vector<std::vector<char>> must_in_; // per instruction, per var id
  std::map<std::string, size_t> var_ids_;
  std::vector<char> seen_;
};

} // namespace ownsan

#endif // OWNSAN_DATAFLOW_H
