// SPDX-License-Identifier: Apache-2.0
//
// Lifetime-aware inter-procedural taint propagation.
//
// Each source's set is the least set containing the source and closed under
//   forward:  a in S, edge a -> b            => b in S
//   backward: b in S, edge a -> b, T1 source,
//             edge is not a move, and a is not invalidated before the source
//                                            => a in S
// An owner is invalidated before source s when, in s's function, a drop,
// end_scope, forget or move of it lies strictly between its definition and s
// with no label in between. Sets whose closure contains another source are
// merged afterwards.

#ifndef OWNSAN_TAINT_H
#define OWNSAN_TAINT_H

#include <map>
#include <set>

#include "ownsan/risky.h"

namespace ownsan {

struct TaintedSets {
  std::map<PointerRef, std::set<PointerRef>> sets;   // pointer nodes only
  std::map<PointerRef, std::set<PointerRef>> owners; // owner-kind members

  std::set<PointerRef> all_tainted() const;
  bool operator==(const TaintedSets &) const = default;
};

struct TaintOptions {
  unsigned threads = 1; // workers for the per-function pass
};

TaintedSets propagate_taint(const DerivationGraph &g, const SourceClass &sources,
                            const TaintOptions &opts = {});

} // namespace ownsan

#endif // OWNSAN_TAINT_H
