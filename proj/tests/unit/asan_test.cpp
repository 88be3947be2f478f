// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.h"

using namespace ownsan;
using namespace ownsan::testing;

using V = std::vector<std::string>;

TEST_CASE("red zones catch small overflows") {
  Program p = parse_program(R"(
fn main() {
  %a = heap_alloc 4
  %p = as_raw %a
  %q = gep %p, 4
  %x = deref_read %q !unsafe
  %r = gep %p, -1
  deref_write %r, 0 !unsafe
  ret
}
)");
  CHECK(summary(run_asan(p)) == V{"OOB main:3", "OOB main:5"});
}

TEST_CASE("a jump past the red zone is missed unless the zone is wider") {
  Program p = load_corpus_program("redzone_bypass");
  CHECK(run_asan(p).violations.empty());
  AsanConfig wide;
  wide.redzone = 64;
  CHECK(summary(run_asan(p, wide)) == V{"OOB main:8"});
}

TEST_CASE("quarantine delays reuse") {
  Program p = load_corpus_program("quarantine_uaf");
  CHECK(run_asan(p).violations.empty());
  AsanConfig deep;
  deep.quarantine = 8;
  CHECK(summary(run_asan(p, deep)) == V{"UAF main:12"});
}

TEST_CASE("freed cells are poisoned") {
  CHECK(summary(run_asan(load_corpus_program("uaf_cache"))) == V{"UAF main:8"});
  CHECK(summary(run_asan(load_corpus_program("double_free"))) == V{"DF main:10"});
  CHECK(summary(run_asan(load_corpus_program("null_deref"))) == V{"NPD main:4"});
}

TEST_CASE("logical bounds and lifetimes are invisible to shadow memory") {
  for (const char *name : {"vm_slice_oob", "set_len_oob", "ubi_read", "forget_uaf"}) {
    CAPTURE(name);
    CHECK(run_asan(load_corpus_program(name)).violations.empty());
  }
}

TEST_CASE("field access on a freed object") {
  Program p = parse_program(R"(
fn main() {
  %o = heap_alloc 1
  %r = null
  store_field %o.next, %r
  drop %o
  %n = load_field %o.next as raw
  ret
}
)");
  CHECK(summary(run_asan(p)) == V{"UAF main:4"});
}

TEST_CASE("container operations are checked against shadow") {
  CHECK(summary(run_asan(load_corpus_program("push_overflow"))) == V{"OOB main:5"});
  Program p = parse_program(R"(
fn main() {
  %v = vec_new 2, 0
  vec_pop %v
  vec_push %v
  vec_pop %v
  ret
}
)");
  CHECK(run_asan(p).violations.empty());
}

TEST_CASE("asan counts every access it checks") {
  ExecutionReport r = run_asan(load_corpus_program("safe_vec"));
  // two pushes, write, two reads, pop, end_scope.
  CHECK(r.checks == 7);
}
