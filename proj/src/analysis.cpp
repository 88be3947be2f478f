// SPDX-License-Identifier: Apache-2.0

#include "ownsan/analysis.h"

#include "ownsan/callgraph.h"

namespace ownsan {

Analysis analyze(const Program &p, const AnalysisOptions &opts) {
  Analysis a;
  a.program = &p;
  a.reachable = reachable_functions(p);
  a.graph = std::make_unique<DerivationGraph>(p, a.reachable);
  const DerivationGraph &g = *a.graph;

  a.risk.exposed_raw = find_exposed_raw_pointers(g);
  a.sources = classify_sources(g, a.risk.exposed_raw);
  a.risk.unsafe_api_sites = find_unsafe_api_sites(g);
  a.risk.spatially_risky = spatial_closure(g, a.risk.exposed_raw);
  for (const auto &site : a.risk.unsafe_api_sites)
    if (site.api == "set_len")
      a.risk.spatially_risky.insert(site.pointers.begin(), site.pointers.end());

  a.tainted = propagate_taint(g, a.sources, TaintOptions{opts.threads});
  a.risk.temporally_risky = a.tainted.all_tainted();

  a.spatial = infer_spatial(g, a.risk);
  a.carriers = mark_metadata_carriers(a.spatial, a.risk);
  a.temporal = infer_owners(g, a.tainted);
  a.plan = build_plan(g, a.risk, a.spatial, a.temporal, a.carriers);
  return a;
}

} // namespace ownsan
