// SPDX-License-Identifier: Apache-2.0
//
// Exposed raw pointers, taint-source classes, unsafe-API sites and the
// spatially/temporally risky pointer sets.

#ifndef OWNSAN_RISKY_H
#define OWNSAN_RISKY_H

#include <map>
#include <set>
#include <string>
#include <vector>

#include "ownsan/derivation.h"

namespace ownsan {

enum class SourceType { T1, T2 };
const char *source_type_name(SourceType t);

using SourceClass = std::map<PointerRef, SourceType>;

struct UnsafeApiSite {
  std::string function;
  size_t index = 0;
  std::string api; // "set_len" or "unchecked_<op>"
  std::vector<PointerRef> pointers;
};

struct RiskSet {
  std::set<PointerRef> spatially_risky;
  std::set<PointerRef> temporally_risky;
  std::set<PointerRef> exposed_raw;
  std::vector<UnsafeApiSite> unsafe_api_sites;
};

// Root raw definitions (as_raw, raw_alloc, null) of every raw value defined or
// used by an !unsafe instruction. A backward trace that ends anywhere else
// (an uncalled parameter, a never-stored field) contributes that end instead,
// which classify_sources then rejects.
std::set<PointerRef> find_exposed_raw_pointers(const DerivationGraph &g);

// as_raw roots are T1; raw_alloc and null roots are T2. Throws Error naming any
// pointer whose definition is not such a root.
SourceClass classify_sources(const DerivationGraph &g, const std::set<PointerRef> &exposed);

// Address-taken functions of `p` whose signature equals the icall's. Throws
// Error if (fn, index) is not an icall.
std::set<std::string> resolve_indirect_callees(const Program &p, const std::string &fn,
                                               size_t index);

// Every api_set_len and api_unchecked site in reachable functions. set_len
// lists the definitions of its owner operand.
std::vector<UnsafeApiSite> find_unsafe_api_sites(const DerivationGraph &g);

// Raw pointers derived from an exposed root through raw values only.
std::set<PointerRef> spatial_closure(const DerivationGraph &g, const std::set<PointerRef> &exposed);

} // namespace ownsan

#endif // OWNSAN_RISKY_H
