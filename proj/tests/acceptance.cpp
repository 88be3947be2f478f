// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "helpers.h"
#include "matrix.h"
#include "oracles.h"
#include "ownsan/callgraph.h"
#include "ownsan/generator.h"

using namespace ownsan;
using namespace ownsan::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Returns an empty string on success, else the first failure.
using Criterion = std::function<std::string()>;

std::string detection() {
  auto t0 = Clock::now();
  size_t safe = 0;
  for (const auto &e : load_corpus(corpus_dir())) {
    Program p = parse_program(read_file(e.path));
    auto got = observed(run_selective(p));
    if (got != e.expected.at("selective"))
      return e.name + ": selective report differs from its sidecar";
    if (e.group == "safe") {
      ++safe;
      if (!got.empty() || !run_asan(p).violations.empty())
        return e.name + ": safe entry reported a violation";
    } else if (got.empty()) {
      return e.name + ": no expected violation";
    }
  }
  if (safe == 0)
    return "no safe entries";
  double s = seconds_since(t0);
  if (s >= 5.0)
    return "took " + std::to_string(s) + " s";
  return {};
}

std::string gap() {
  size_t oob = 0, ubi = 0, uaf = 0, gaps = 0;
  bool quarantine = false, redzone = false;
  for (const auto &e : load_corpus(corpus_dir())) {
    Program p = parse_program(read_file(e.path));
    auto sel = observed(run_selective(p));
    auto asan = observed(run_asan(p));
    if (sel != e.expected.at("selective") || asan != e.expected.at("asan"))
      return e.name + ": report differs from its sidecar";
    bool missed = asan.empty() && !sel.empty();
    if (e.group == "gap") {
      if (!missed || sel.size() != 1)
        return e.name + ": not a single-violation gap";
      ++gaps;
      oob += sel[0].cls == ViolationClass::OOB;
      ubi += sel[0].cls == ViolationClass::UBI;
      uaf += sel[0].cls == ViolationClass::UAF;
    } else if (missed && e.group != "mechanism") {
      return e.name + ": shadow memory misses a violation outside the gap group";
    }
    if (e.name == "quarantine_uaf")
      quarantine = missed && sel[0].cls == ViolationClass::UAF;
    if (e.name == "redzone_bypass")
      redzone = missed && sel[0].cls == ViolationClass::OOB;
  }
  if (gaps != 4 || oob != 2 || ubi != 1 || uaf != 1)
    return "gap entries: " + std::to_string(gaps) + " (OOB " + std::to_string(oob) + ", UBI " +
           std::to_string(ubi) + ", UAF " + std::to_string(uaf) + ")";
  if (!quarantine)
    return "quarantine_uaf is not missed by shadow memory";
  if (!redzone)
    return "redzone_bypass is not missed by shadow memory";
  return {};
}

std::string taint_oracle() {
  auto t0 = Clock::now();
  size_t loops = 0, icalls = 0, tainted = 0;
  for (uint64_t seed = 0; seed < 500; ++seed) {
    size_t size = 10 + seed % 31;
    std::string text = generate_program(seed, size);
    loops += text.find("cbr") != std::string::npos;
    icalls += text.find("icall") != std::string::npos;
    Program p = parse_program(text);
    Analysis a = analyze(p);
    tainted += !a.tainted.sets.empty();
    if (a.tainted != oracle_taint_closure(*a.graph, a.sources))
      return "seed " + std::to_string(seed) + " size " + std::to_string(size) + " differs";
  }
  if (loops == 0 || icalls == 0)
    return "generated programs lack loops or indirect calls";
  // Agreement on empty sets proves nothing.
  if (tainted < 250)
    return "only " + std::to_string(tainted) + " programs have tainted pointers";
  double s = seconds_since(t0);
  if (s >= 60.0)
    return "took " + std::to_string(s) + " s";
  return {};
}

std::string session_token() {
  Program p = load_corpus_program("uaf_cache");
  Analysis a = analyze(p);
  if (a.tainted.sets.size() != 1)
    return "expected one pointer set";
  const auto &[source, set] = *a.tainted.sets.begin();
  if (names(set) != std::set<std::string>{"self_ptr", "local_token", "stale_token"})
    return "pointer set differs";
  if (names(a.tainted.owners.at(source)) != std::set<std::string>{"local_token", "stale_token"})
    return "owner set differs";
  // main:2 reads through the original token.
  for (const auto &e : a.plan.at("main", 2))
    if (e.cls == InstrClass::I4 || e.cls == InstrClass::I5)
      return "token dereference is checked";
  auto got = summary(run_selective(p));
  if (got != std::vector<std::string>{"UAF main:8"})
    return "expected a single UAF at the stale dereference";
  return {};
}

std::string selectivity() {
  size_t checked = 0;
  for (const auto &e : load_corpus(corpus_dir())) {
    Program p = parse_program(read_file(e.path));
    if (pointer_count(p) == 0)
      continue;
    ++checked;
    size_t sel = count_instrumented_sites(analyze(p).plan).total;
    size_t base = baseline_site_count(p);
    if (sel >= base)
      return e.name + ": " + std::to_string(sel) + " selective vs " + std::to_string(base) +
             " baseline";
  }
  return checked ? "" : "no entries with pointers";
}

std::string matrix() {
  for (const auto &cell : matrix_cells()) {
    std::string why = check_cell(cell);
    if (!why.empty())
      return cell.category + "/" + cell.instruction + ": " + why;
  }
  return {};
}

std::string structure() {
  ExecOptions debug;
  debug.debug = true;
  for (const auto &e : load_corpus(corpus_dir())) {
    std::string text = read_file(e.path);
    Program p = parse_program(text);
    if (parse_program(print_program(p)) != p)
      return e.name + ": round trip differs";
    InstrumentedProgram ip = apply_plan(p, analyze(p).plan);
    if (strip_instrumentation(ip) != p)
      return e.name + ": strip(apply) differs";
    try {
      execute(ip, debug);
    } catch (const ConsistencyError &err) {
      return e.name + ": " + err.what();
    }
  }
  for (uint64_t seed = 0; seed < 200; ++seed) {
    Program p = parse_program(generate_program(seed, 10 + seed % 31));
    InstrumentedProgram ip = apply_plan(p, analyze(p).plan);
    if (strip_instrumentation(ip) != p)
      return "generated seed " + std::to_string(seed) + ": strip(apply) differs";
    try {
      execute(ip, debug);
    } catch (const ConsistencyError &err) {
      return "generated seed " + std::to_string(seed) + ": " + err.what();
    }
  }
  for (uint64_t seed = 1; seed <= 200; ++seed) {
    RandomCallGraph g = random_call_graph(seed, 2 + seed % 12);
    if (reachable_functions(parse_program(g.text)) != oracle_reachable(g))
      return "call graph seed " + std::to_string(seed) + " differs from BFS";
  }
  return {};
}

} // namespace

int main() {
  const std::vector<std::pair<const char *, Criterion>> criteria = {
      {"detection completeness", detection},
      {"shadow-memory gaps", gap},
      {"taint matches the fixpoint oracle", taint_oracle},
      {"cached session token", session_token},
      {"selective sites below per-access sites", selectivity},
      {"instrumentation matrix", matrix},
      {"structural properties", structure},
  };
  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    std::string why;
    try {
      why = criteria[i].second();
    } catch (const std::exception &e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::printf("PASS criterion %zu: %s\n", i + 1, criteria[i].first);
    } else {
      std::printf("FAIL criterion %zu: %s: %s\n", i + 1, criteria[i].first, why.c_str());
      ++failed;
    }
  }
  return failed ? 1 : 0;
}
