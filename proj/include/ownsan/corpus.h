// SPDX-License-Identifier: Apache-2.0
//
// Bug-pattern corpus: .lrs programs with JSON sidecars stating the exact
// violations each mode must report, and the cross-mode comparison.
//
// Sidecar (NAME.json next to NAME.lrs):
//   {"schema": 1, "group": "safe" | "both" | "gap" | "mechanism",
//    "tags": [...], "note": "...",
//    "expected": {"selective": [{"class": "UAF", "function": "main", "index": 8}],
//                 "asan": []}}

#ifndef OWNSAN_CORPUS_H
#define OWNSAN_CORPUS_H

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "ownsan/asan.h"
#include "ownsan/runtime.h"

namespace ownsan {

struct Expectation {
  ViolationClass cls = ViolationClass::OOB;
  std::string function;
  size_t index = 0;
  auto operator<=>(const Expectation &) const = default;
};

struct CorpusEntry {
  std::string name;
  std::string path;
  std::string group;
  std::vector<std::string> tags;
  std::string note;
  std::map<std::string, std::vector<Expectation>> expected; // "selective", "asan"
};

CorpusEntry load_entry(const std::string &lrs_path);
// Every *.lrs in `dir`, sorted by name. Throws Error on a missing sidecar.
std::vector<CorpusEntry> load_corpus(const std::string &dir);

std::vector<Expectation> observed(const ExecutionReport &r);

struct EntryResult {
  std::string name;
  std::string group;
  size_t pointers = 0;          // pointer definitions in the program
  size_t selective_sites = 0;   // plan entries
  size_t baseline_sites = 0;    // every-access checks
  ExecutionReport selective;
  ExecutionReport asan;
  std::vector<std::string> mismatches;
};

struct ComparisonReport {
  std::vector<EntryResult> entries;
  bool ok() const;
};

struct CompareOptions {
  AsanConfig asan;
  ExecOptions exec;
  unsigned threads = 1;
};

EntryResult compare_entry(const CorpusEntry &e, const CompareOptions &opts);
ComparisonReport compare_corpus(const std::vector<CorpusEntry> &entries,
                                const CompareOptions &opts);
nlohmann::json comparison_json(const ComparisonReport &r);

std::string read_file(const std::string &path);
size_t pointer_count(const Program &p);

} // namespace ownsan

#endif // OWNSAN_CORPUS_H
