// SPDX-License-Identifier: Apache-2.0
//
// Static spatial templates (capacity, initialized length, offset along a
// derivation chain), metadata carriers, and temporal owner sets.

#ifndef OWNSAN_METADATA_H
#define OWNSAN_METADATA_H

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ownsan/risky.h"
#include "ownsan/taint.h"

namespace ownsan {

// A literal, or a value name resolved when the root executes.
struct SizeExpr {
  std::optional<int64_t> literal;
  std::string symbol;

  static SizeExpr lit(int64_t v) { return {v, {}}; }
  static SizeExpr of(const Operand &o);
  std::string str() const;
  bool operator==(const SizeExpr &) const = default;
};

enum class RootKind { Allocation, View, Null, Unresolved };
const char *root_kind_name(RootKind k);

struct Backtrack {
  std::vector<PointerRef> roots;   // first is the nearest
  std::vector<PointerRef> chain;   // roots[0] -> ... -> pointer, pointers only
  std::set<PointerRef> members;    // pointers on any root -> pointer path
  bool single_path = true;         // the only path is `chain`
};

// Walks derivations backwards from `ptr` until allocations, null, views
// (as_raw with a count) or definitions with no producer.
Backtrack backtrack_root(const DerivationGraph &g, const PointerRef &ptr);

struct SpatialTemplate {
  PointerRef pointer;
  PointerRef root;
  std::vector<PointerRef> roots;
  std::vector<PointerRef> chain;
  std::set<PointerRef> members;
  RootKind root_kind = RootKind::Allocation;
  SizeExpr capacity;
  SizeExpr init_len;
  std::optional<int64_t> static_offset; // empty: dynamic
};

struct TemporalTemplate {
  PointerRef source;
  std::set<PointerRef> pointer_set;
  std::set<PointerRef> owner_set;
};

std::map<PointerRef, SpatialTemplate> infer_spatial(const DerivationGraph &g, const RiskSet &risk);

// Template members that are not themselves spatially risky.
std::set<PointerRef> mark_metadata_carriers(const std::map<PointerRef, SpatialTemplate> &templates,
                                            const RiskSet &risk);

std::map<PointerRef, TemporalTemplate> infer_owners(const DerivationGraph &g,
                                                    const TaintedSets &tainted);

} // namespace ownsan

#endif // OWNSAN_METADATA_H
