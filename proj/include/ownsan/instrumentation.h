// SPDX-License-Identifier: Apache-2.0
//
// Selective instrumentation plan: check classes attached to instruction sites.
//
//   I1 activate       at definitions that mint a runtime pointer instance
//   I2 spatial update at pointer arithmetic and container modifiers
//   I3 deactivate     at drop / end_scope / forget
//   I4 spatial check  at pointer arithmetic and dereferences
//   I5 temporal check at dereferences and deallocations
//
// Within a site, entries are kept in firing order: I1 I2 I4 at arithmetic,
// I5 I4 at dereferences, I5 I3 at deallocations.

#ifndef OWNSAN_INSTRUMENTATION_H
#define OWNSAN_INSTRUMENTATION_H

#include <array>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ownsan/metadata.h"

namespace ownsan {

enum class InstrClass { I1, I2, I3, I4, I5 };
const char *instr_class_name(InstrClass c); // "I1".."I5"

struct PlanEntry {
  InstrClass cls = InstrClass::I1;
  PointerRef pointer;      // empty value for unchecked-arithmetic checks
  bool spatial = false;    // I1: registers spatial metadata
  bool temporal = false;   // I1: registers temporal metadata
  bool nofree = false;     // I3 at forget
  bool unchecked = false;  // I4 at api_unchecked
  bool operator==(const PlanEntry &) const = default;
};

using SiteKey = std::pair<std::string, size_t>;

struct InstrumentationPlan {
  std::map<SiteKey, std::vector<PlanEntry>> sites;

  const std::vector<PlanEntry> &at(const std::string &fn, size_t index) const;
  bool operator==(const InstrumentationPlan &) const = default;
};

// Whether the entry fires after the instruction executes (I1, and the I2/I4
// of pointer arithmetic) rather than before it.
bool fires_after(const Instruction &in, const PlanEntry &e);

InstrumentationPlan build_plan(const DerivationGraph &g, const RiskSet &risk,
                               const std::map<PointerRef, SpatialTemplate> &spatial,
                               const std::map<PointerRef, TemporalTemplate> &temporal,
                               const std::set<PointerRef> &carriers);

struct InstrumentedProgram {
  Program program;
  InstrumentationPlan plan;
  bool operator==(const InstrumentedProgram &) const = default;
};

InstrumentedProgram apply_plan(const Program &p, const InstrumentationPlan &plan);
Program strip_instrumentation(const InstrumentedProgram &ip);

// `#iN` lines precede the instruction they belong to, in firing order.
std::string format_entry(const PlanEntry &e);
std::string print_instrumented(const InstrumentedProgram &ip);
InstrumentedProgram parse_instrumented(const std::string &text);

struct SiteCounts {
  std::array<size_t, 5> by_class{};
  size_t total = 0;
  size_t sites = 0; // instructions with at least one entry
};

SiteCounts count_instrumented_sites(const InstrumentationPlan &plan);

// Checks an every-access sanitizer places: allocations, dereferences,
// deallocations, field accesses and container pushes/pops in all functions.
size_t baseline_site_count(const Program &p);

} // namespace ownsan

#endif // OWNSAN_INSTRUMENTATION_H
