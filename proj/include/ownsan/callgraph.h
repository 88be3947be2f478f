// SPDX-License-Identifier: Apache-2.0
//
// Call graph and the set of functions reachable from the entry points.

#ifndef OWNSAN_CALLGRAPH_H
#define OWNSAN_CALLGRAPH_H

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ownsan/ir.h"

namespace ownsan {

struct IcallSite {
  std::string function;
  size_t index = 0;
  Signature sig;
};

struct CallGraph {
  std::map<std::string, std::set<std::string>> direct_edges; // every function has a key
  std::set<std::string> address_taken;
  std::vector<IcallSite> icall_sites;
  std::map<std::string, Signature> signatures;
};

// Throws Error naming the site when a direct callee is undefined.
CallGraph build_call_graph(const Program &p);

// Address-taken functions whose signature equals `sig`.
std::set<std::string> matching_targets(const CallGraph &g, const Signature &sig);

// Least fixed point: entries, their direct callees, and address-taken functions
// matching an indirect-call signature found in the set.
std::set<std::string> compute_reachable(const CallGraph &g, const std::vector<std::string> &entries);
std::set<std::string> compute_reachable(const CallGraph &g, const std::string &entry);

// compute_reachable from the program's own entry points.
std::set<std::string> reachable_functions(const Program &p);

} // namespace ownsan

#endif // OWNSAN_CALLGRAPH_H
