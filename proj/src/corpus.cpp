// SPDX-License-Identifier: Apache-2.0

#include "ownsan/corpus.h"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "ownsan/analysis.h"
#include "ownsan/report.h"
#include "ownsan/text.h"
#include "ownsan/validate.h"

namespace ownsan {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

size_t pointer_count(const Program &p) {
  size_t n = 0;
  for (const auto &f : p.functions) {
    for (const auto &prm : f.params)
      n += is_pointer_kind(prm.kind);
    for (const auto &in : f.instrs)
      n += in.result && is_pointer_kind(in.result_kind);
  }
  return n;
}

CorpusEntry load_entry(const std::string &lrs_path) {
  fs::path path(lrs_path);
  fs::path sidecar = path;
  sidecar.replace_extension(".json");
  json j;
  try {
    j = json::parse(read_file(sidecar.string()));
  } catch (const json::exception &e) {
    throw Error(sidecar.string() + ": " + e.what());
  }
  if (j.value("schema", 0) != 1)
    throw Error(sidecar.string() + ": unsupported schema");
  CorpusEntry e;
  e.name = path.stem().string();
  e.path = path.string();
  e.group = j.at("group").get<std::string>();
  e.tags = j.value("tags", std::vector<std::string>{});
  e.note = j.value("note", "");
  for (const char *mode : {"selective", "asan"}) {
    auto &list = e.expected[mode];
    for (const auto &x : j.at("expected").at(mode)) {
      auto cls = parse_violation_class(x.at("class").get<std::string>());
      if (!cls)
        throw Error(sidecar.string() + ": unknown violation class");
      list.push_back({*cls, x.at("function").get<std::string>(), x.at("index").get<size_t>()});
    }
  }
  return e;
}

std::vector<CorpusEntry> load_corpus(const std::string &dir) {
  if (!fs::is_directory(dir))
    throw Error(dir + ": not a corpus directory");
  std::vector<std::string> paths;
  for (const auto &de : fs::directory_iterator(dir))
    if (de.is_regular_file() && de.path().extension() == ".lrs")
      paths.push_back(de.path().string());
  std::sort(paths.begin(), paths.end());
  std::vector<CorpusEntry> out;
  for (const auto &p : paths)
    out.push_back(load_entry(p));
  return out;
}

std::vector<Expectation> observed(const ExecutionReport &r) {
  std::vector<Expectation> out;
  for (const auto &v : r.violations)
    out.push_back({v.cls, v.function, v.index});
  return out;
}

namespace {

std::string describe(const std::vector<Expectation> &v) {
  if (v.empty())
    return "none";
  std::string s;
  for (const auto &x : v)
    s += (s.empty() ? "" : ", ") + std::string(violation_class_name(x.cls)) + "@" + x.function +
         ":" + std::to_string(x.index);
  return s;
}

} // namespace

EntryResult compare_entry(const CorpusEntry &e, const CompareOptions &opts) {
  EntryResult r;
  r.name = e.name;
  r.group = e.group;
  Program p = parse_program(read_file(e.path));
  auto diags = validate_program(p);
  if (!diags.empty())
    throw Error(e.path + ": " + format_diagnostic(diags.front()));
  Analysis a = analyze(p);
  r.pointers = pointer_count(p);
  r.selective_sites = count_instrumented_sites(a.plan).total;
  r.baseline_sites = baseline_site_count(p);
  r.selective = execute(apply_plan(p, a.plan), opts.exec);
  r.asan = execute_asan(p, opts.asan, opts.exec);
  for (const auto &[mode, report] :
       {std::pair<std::string, const ExecutionReport *>{"selective", &r.selective},
        {"asan", &r.asan}}) {
    auto got = observed(*report);
    const auto &want = e.expected.at(mode);
    if (got != want)
      r.mismatches.push_back(mode + ": expected " + describe(want) + ", got " + describe(got));
  }
  return r;
}

bool ComparisonReport::ok() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const EntryResult &e) { return e.mismatches.empty(); });
}

ComparisonReport compare_corpus(const std::vector<CorpusEntry> &entries,
                                const CompareOptions &opts) {
  ComparisonReport out;
  out.entries.resize(entries.size());
  std::vector<std::string> errors(entries.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t k; (k = next.fetch_add(1)) < entries.size();) {
      try {
        out.entries[k] = compare_entry(entries[k], opts);
      } catch (const std::exception &ex) {
        errors[k] = ex.what();
      }
    }
  };
  unsigned n = std::max(1u, std::min<unsigned>(opts.threads, static_cast<unsigned>(entries.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t)
    pool.emplace_back(worker);
  worker();
  for (auto &t : pool)
    t.join();
  for (size_t k = 0; k < errors.size(); ++k)
    if (!errors[k].empty())
      throw Error(entries[k].name + ": " + errors[k]);
  return out;
}

json comparison_json(const ComparisonReport &r) {
  json entries = json::array();
  size_t selective_total = 0, baseline_total = 0;
  for (const auto &e : r.entries) {
    selective_total += e.selective_sites;
    baseline_total += e.baseline_sites;
    entries.push_back({{"name", e.name},
                       {"group", e.group},
                       {"pointers", e.pointers},
                       {"sites", {{"selective", e.selective_sites}, {"asan", e.baseline_sites}}},
                       {"selective", report_json(e.selective)["violations"]},
                       {"asan", report_json(e.asan)["violations"]},
                       {"mismatches", e.mismatches}});
  }
  return {{"schema", kSchemaVersion},
          {"ok", r.ok()},
          {"entries", entries},
          {"totals", {{"selective_sites", selective_total}, {"asan_sites", baseline_total}}}};
}

} // namespace ownsan
