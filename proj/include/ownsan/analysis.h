// SPDX-License-Identifier: Apache-2.0
//
// The full static pipeline: reachability, derivations, risky pointers, taint,
// metadata templates and the instrumentation plan.

#ifndef OWNSAN_ANALYSIS_H
#define OWNSAN_ANALYSIS_H

#include <map>
#include <memory>
#include <set>
#include <string>

#include "ownsan/instrumentation.h"

namespace ownsan {

struct AnalysisOptions {
  unsigned threads = 1;
};

// Holds a reference to the analyzed Program, which must outlive it.
struct Analysis {
  const Program *program = nullptr;
  std::set<std::string> reachable;
  std::unique_ptr<DerivationGraph> graph;
  RiskSet risk;
  SourceClass sources;
  TaintedSets tainted;
  std::map<PointerRef, SpatialTemplate> spatial;
  std::map<PointerRef, TemporalTemplate> temporal;
  std::set<PointerRef> carriers;
  InstrumentationPlan plan;
};

Analysis analyze(const Program &p, const AnalysisOptions &opts = {});

} // namespace ownsan

#endif // OWNSAN_ANALYSIS_H
