// SPDX-License-Identifier: Apache-2.0

#include "ownsan/report.h"

namespace ownsan {

using nlohmann::json;

json to_json(const PointerRef &r) { return to_string(r); }

namespace {

json refs(const std::set<PointerRef> &s) {
  json out = json::array();
  for (const auto &r : s)
    out.push_back(to_json(r));
  return out;
}

json refs(const std::vector<PointerRef> &v) {
  json out = json::array();
  for (const auto &r : v)
    out.push_back(to_json(r));
  return out;
}

json class_counts(const std::array<size_t, 5> &c) {
  json out = json::object();
  for (int k = 0; k < 5; ++k)
    out[instr_class_name(static_cast<InstrClass>(k))] = c[k];
  return out;
}

} // namespace

json plan_json(const InstrumentationPlan &plan) {
  json sites = json::array();
  for (const auto &[key, entries] : plan.sites) {
    json e = json::array();
    for (const auto &entry : entries)
      e.push_back(format_entry(entry));
    sites.push_back({{"function", key.first}, {"index", key.second}, {"entries", e}});
  }
  SiteCounts c = count_instrumented_sites(plan);
  json counts = class_counts(c.by_class);
  counts["total"] = c.total;
  counts["sites"] = c.sites;
  return {{"sites", sites}, {"counts", counts}};
}

json analysis_json(const Analysis &a) {
  json j;
  j["schema"] = kSchemaVersion;
  j["reachable"] = a.reachable;

  json exposed = json::array();
  for (const auto &r : a.risk.exposed_raw)
    exposed.push_back({{"pointer", to_json(r)},
                       {"class", source_type_name(a.sources.at(r))}});
  json apis = json::array();
  for (const auto &s : a.risk.unsafe_api_sites)
    apis.push_back({{"function", s.function},
                    {"index", s.index},
                    {"api", s.api},
                    {"pointers", refs(s.pointers)}});
  j["risk"] = {{"counts",
                {{"spatially_risky", a.risk.spatially_risky.size()},
                 {"temporally_risky", a.risk.temporally_risky.size()},
                 {"exposed_raw", a.risk.exposed_raw.size()},
                 {"unsafe_api_sites", a.risk.unsafe_api_sites.size()}}},
               {"spatially_risky", refs(a.risk.spatially_risky)},
               {"temporally_risky", refs(a.risk.temporally_risky)},
               {"exposed_raw", exposed},
               {"unsafe_api_sites", apis}};

  json sets = json::array();
  for (const auto &[src, t] : a.temporal)
    sets.push_back({{"source", to_json(src)},
                    {"class", source_type_name(a.sources.at(src))},
                    {"pointers", refs(t.pointer_set)},
                    {"owners", refs(t.owner_set)}});
  j["tainted_sets"] = sets;

  json templates = json::array();
  for (const auto &[ptr, t] : a.spatial) {
    json offset = t.static_offset ? json(*t.static_offset) : json("dynamic");
    templates.push_back({{"pointer", to_json(ptr)},
                         {"root", to_json(t.root)},
                         {"root_kind", root_kind_name(t.root_kind)},
                         {"roots", refs(t.roots)},
                         {"chain", refs(t.chain)},
                         {"capacity", t.capacity.str()},
                         {"init_len", t.init_len.str()},
                         {"offset", offset}});
  }
  j["spatial_templates"] = templates;
  j["carriers"] = refs(a.carriers);
  j["plan"] = plan_json(a.plan);
  j["baseline_sites"] = baseline_site_count(*a.program);
  return j;
}

json report_json(const ExecutionReport &r) {
  json v = json::array();
  for (const auto &x : r.violations)
    v.push_back({{"class", violation_class_name(x.cls)},
                 {"function", x.function},
                 {"index", x.index},
                 {"pointer", x.pointer},
                 {"detail", x.detail}});
  json f = json::array();
  for (const auto &x : r.faults)
    f.push_back({{"function", x.function}, {"index", x.index}, {"detail", x.detail}});
  json counts = class_counts(r.hits);
  counts["executed_instructions"] = r.executed_instructions;
  counts["checks"] = r.checks;
  return {{"schema", kSchemaVersion},
          {"mode", r.mode},
          {"violations", v},
          {"faults", f},
          {"counts", counts}};
}

} // namespace ownsan
