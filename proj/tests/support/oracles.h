// SPDX-License-Identifier: Apache-2.0
//
// Reference implementations used only by tests. They favor obviousness over
// speed and share no code with the library beyond the IR and graph types.

#ifndef OWNSAN_TESTS_ORACLES_H
#define OWNSAN_TESTS_ORACLES_H

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ownsan/taint.h"

namespace ownsan::testing {

// Naive fixpoint over every edge of `g`, one source at a time, then a
// component merge of sources that reach each other. Throws Error when the
// fixpoint needs more than `budget` edge visits.
TaintedSets oracle_taint_closure(const DerivationGraph &g, const SourceClass &sources,
                                 uint64_t budget = 50'000'000);

// Definition sites of `var` that may reach instruction `index` of `f`,
// computed by a plain iterative dataflow over (var, site) pairs.
std::set<int> oracle_reaching(const Function &f, size_t index, const std::string &var);

// A random call structure and its rendering as a program.
struct RandomCallGraph {
  struct Fn {
    std::string name;
    int sig = 0;                     // index into a fixed signature table
    std::vector<int> direct;         // callees
    std::vector<int> icall_sigs;     // signatures of icall sites in the body
    std::vector<int> takes_address;  // functions whose address the body takes
  };
  std::vector<Fn> fns; // fns[0] is the entry
  std::string text;
};

RandomCallGraph random_call_graph(uint64_t seed, size_t nfunctions);

// Breadth-first search over the structure, not over the parsed program: an
// icall of signature s reaches every function whose address is taken
// anywhere and whose signature is s.
std::set<std::string> oracle_reachable(const RandomCallGraph &g);

} // namespace ownsan::testing

#endif // OWNSAN_TESTS_ORACLES_H
