// SPDX-License-Identifier: Apache-2.0

#ifndef OWNSAN_TESTS_HELPERS_H
#define OWNSAN_TESTS_HELPERS_H

#include <set>
#include <string>

#include "ownsan/analysis.h"
#include "ownsan/asan.h"
#include "ownsan/corpus.h"
#include "ownsan/runtime.h"
#include "ownsan/text.h"
#include "ownsan/validate.h"

namespace ownsan::testing {

inline std::string corpus_dir() { return OWNSAN_TEST_CORPUS; }
inline std::string corpus_file(const std::string &name) {
  return corpus_dir() + "/" + name + ".lrs";
}
inline Program load_corpus_program(const std::string &name) {
  return parse_program(read_file(corpus_file(name)));
}

inline std::set<std::string> names(const std::set<PointerRef> &s) {
  std::set<std::string> out;
  for (const auto &r : s)
    out.insert(r.value);
  return out;
}

inline std::set<std::string> refs(const std::set<PointerRef> &s) {
  std::set<std::string> out;
  for (const auto &r : s)
    out.insert(to_string(r));
  return out;
}

inline ExecutionReport run_selective(const Program &p, ExecOptions opts = {}) {
  Analysis a = analyze(p);
  return execute(apply_plan(p, a.plan), opts);
}

inline ExecutionReport run_asan(const Program &p, AsanConfig cfg = {}) {
  return execute_asan(p, cfg);
}

// "CLASS fn:index" per violation, in report order.
inline std::vector<std::string> summary(const ExecutionReport &r) {
  std::vector<std::string> out;
  for (const auto &v : r.violations)
    out.push_back(std::string(violation_class_name(v.cls)) + " " + v.function + ":" +
                  std::to_string(v.index));
  return out;
}

} // namespace ownsan::testing

#endif // OWNSAN_TESTS_HELPERS_H
