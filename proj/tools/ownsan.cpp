// SPDX-License-Identifier: Apache-2.0
//
// Command-line driver. Exit status: 0 clean, 1 violations or corpus
// mismatches, 2 usage, parse or validation errors.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ownsan/analysis.h"
#include "ownsan/asan.h"
#include "ownsan/corpus.h"
#include "ownsan/generator.h"
#include "ownsan/report.h"
#include "ownsan/text.h"
#include "ownsan/validate.h"

using namespace ownsan;
using nlohmann::json;

namespace {

constexpr int kClean = 0;
constexpr int kFindings = 1;
constexpr int kError = 2;

Program load_valid(const std::string &path) {
  Program p = parse_program(read_file(path));
  auto diags = validate_program(p);
  if (!diags.empty()) {
    std::string msg = path + ": invalid program";
    for (const auto &d : diags)
      msg += "\n  " + format_diagnostic(d);
    throw Error(msg);
  }
  return p;
}

void print_pointer_set(const char *title, const std::set<PointerRef> &s) {
  std::cout << title << " (" << s.size() << ")\n";
  for (const auto &r : s)
    std::cout << "  " << to_string(r) << "\n";
}

void print_violations(const ExecutionReport &r) {
  for (const auto &v : r.violations)
    std::cout << violation_class_name(v.cls) << " " << v.function << ":" << v.index
              << (v.pointer.empty() ? "" : " %" + v.pointer) << "  " << v.detail << "\n";
  for (const auto &f : r.faults)
    std::cout << "fault " << f.function << ":" << f.index << "  " << f.detail << "\n";
}

struct AnalyzeArgs {
  std::string file;
  bool json = false;
  bool instrumented = false;
  unsigned threads = 1;
};

int cmd_analyze(const AnalyzeArgs &a) {
  Program p = load_valid(a.file);
  Analysis an = analyze(p, {a.threads});
  if (a.instrumented) {
    std::cout << print_instrumented(apply_plan(p, an.plan));
    return kClean;
  }
  if (a.json) {
    std::cout << analysis_json(an).dump(2) << "\n";
    return kClean;
  }
  std::cout << "reachable functions:";
  for (const auto &f : an.reachable)
    std::cout << " " << f;
  std::cout << "\n";
  print_pointer_set("spatially risky", an.risk.spatially_risky);
  print_pointer_set("temporally risky", an.risk.temporally_risky);
  print_pointer_set("metadata carriers", an.carriers);
  for (const auto &[source, members] : an.tainted.sets) {
    // Owners are marked with '*'.
    const auto &owners = an.tainted.owners.at(source);
    std::cout << "pointer set of " << to_string(source) << " (" << members.size() << ")\n";
    for (const auto &r : members)
      std::cout << "  " << to_string(r) << (owners.count(r) ? " *" : "") << "\n";
  }
  SiteCounts c = count_instrumented_sites(an.plan);
  std::cout << "instrumentation sites: " << c.total << " entries at " << c.sites
            << " instructions (baseline " << baseline_site_count(p) << ")\n";
  return kClean;
}

struct RunArgs {
  std::string file;
  std::string mode = "selective";
  size_t redzone = AsanConfig{}.redzone;
  size_t quarantine = AsanConfig{}.quarantine;
  size_t budget = ExecOptions{}.step_budget;
  bool json = false;
  bool strict = false;
  bool debug = false;
};

int cmd_run(const RunArgs &a) {
  Program p = load_valid(a.file);
  ExecOptions opts;
  opts.continue_on_error = !a.strict;
  opts.step_budget = a.budget;
  opts.debug = a.debug;
  ExecutionReport r;
  if (a.mode == "none") {
    r = execute_plain(p, opts);
  } else if (a.mode == "asan") {
    AsanConfig cfg;
    cfg.redzone = a.redzone;
    cfg.quarantine = a.quarantine;
    r = execute_asan(p, cfg, opts);
  } else {
    Analysis an = analyze(p);
    r = execute(apply_plan(p, an.plan), opts);
  }
  if (a.json)
    std::cout << report_json(r).dump(2) << "\n";
  else
    print_violations(r);
  return r.violations.empty() ? kClean : kFindings;
}

struct CompareArgs {
  std::string dir;
  bool json = false;
  unsigned threads = 1;
};

int cmd_compare(const CompareArgs &a) {
  std::string dir = a.dir;
  if (dir.empty()) {
    const char *env = std::getenv("OWNSAN_CORPUS");
    dir = env ? env : "corpus";
  }
  CompareOptions opts;
  opts.threads = a.threads;
  ComparisonReport rep = compare_corpus(load_corpus(dir), opts);
  if (a.json) {
    std::cout << comparison_json(rep).dump(2) << "\n";
  } else {
    for (const auto &e : rep.entries) {
      std::cout << (e.mismatches.empty() ? "ok   " : "FAIL ") << e.name << " [" << e.group
                << "] selective=" << e.selective.violations.size()
                << " asan=" << e.asan.violations.size() << " sites=" << e.selective_sites << "/"
                << e.baseline_sites << "\n";
      for (const auto &m : e.mismatches)
        std::cout << "       " << m << "\n";
    }
  }
  return rep.ok() ? kClean : kFindings;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Selective memory-safety instrumentation for an ownership IR"};
  app.require_subcommand(1);

  AnalyzeArgs aa;
  auto *analyze_cmd = app.add_subcommand("analyze", "Report risky pointers and the plan");
  analyze_cmd->add_option("file", aa.file, "Program (.lrs)")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_flag("--json", aa.json, "Emit the analysis as JSON");
  analyze_cmd->add_flag("--instrumented", aa.instrumented, "Print the annotated program");
  analyze_cmd->add_option("--threads", aa.threads, "Taint worker threads")
      ->check(CLI::Range(1u, 256u));

  RunArgs ra;
  auto *run_cmd = app.add_subcommand("run", "Execute a program under a sanitizer");
  run_cmd->add_option("file", ra.file, "Program (.lrs)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--mode", ra.mode, "selective, asan or none")
      ->check(CLI::IsMember({"selective", "asan", "none"}))
      ->capture_default_str();
  run_cmd->add_option("--redzone", ra.redzone, "asan red-zone cells")->capture_default_str();
  run_cmd->add_option("--quarantine", ra.quarantine, "asan quarantine slots")
      ->capture_default_str();
  run_cmd->add_option("--budget", ra.budget, "Instruction budget")->capture_default_str();
  run_cmd->add_flag("--json", ra.json, "Emit the report as JSON");
  run_cmd->add_flag("--strict", ra.strict, "Stop at the first violation");
  run_cmd->add_flag("--debug", ra.debug, "Check metadata consistency after each step");

  CompareArgs ca;
  auto *compare_cmd = app.add_subcommand("compare", "Run the corpus in both modes");
  compare_cmd->add_option("dir", ca.dir, "Corpus directory (default $OWNSAN_CORPUS or ./corpus)");
  compare_cmd->add_flag("--json", ca.json, "Emit the comparison as JSON");
  compare_cmd->add_option("--threads", ca.threads, "Entries run concurrently")
      ->check(CLI::Range(1u, 256u));

  uint64_t seed = 0;
  size_t size = 20;
  auto *gen_cmd = app.add_subcommand("gen", "Print a random well-formed program");
  gen_cmd->add_option("--seed", seed, "Generator seed")->capture_default_str();
  gen_cmd->add_option("--size", size, "Approximate entry-function length")
      ->check(CLI::Range(size_t{0}, kMaxGeneratedSize))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    int rc = app.exit(e);
    return rc == 0 ? kClean : kError;
  }

  try {
    if (*analyze_cmd)
      return cmd_analyze(aa);
    if (*run_cmd)
      return cmd_run(ra);
    if (*compare_cmd)
      return cmd_compare(ca);
    std::cout << generate_program(seed, size);
    return kClean;
  } catch (const std::exception &e) {
    std::cerr << "ownsan: " << e.what() << "\n";
    return kError;
  }
}
