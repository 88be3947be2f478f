// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.h"
#include "ownsan/callgraph.h"

using namespace ownsan;
using namespace ownsan::testing;

namespace {

PointerRef ref(const std::string &fn, int site, const std::string &v) { return {fn, site, v}; }

std::vector<std::string> chain_names(const std::vector<PointerRef> &chain) {
  std::vector<std::string> out;
  for (const auto &r : chain)
    out.push_back(r.value);
  return out;
}

} // namespace

TEST_CASE("an allocation is its own root") {
  Program p = parse_program("fn main() {\n  %r = raw_alloc 8\n  ret\n}\n");
  DerivationGraph g(p, reachable_functions(p));
  Backtrack b = backtrack_root(g, ref("main", 0, "r"));
  CHECK(b.roots == std::vector<PointerRef>{ref("main", 0, "r")});
  CHECK(chain_names(b.chain) == std::vector<std::string>{"r"});
  CHECK(b.single_path);
}

TEST_CASE("container root gives capacity, length and offset") {
  Program p = parse_program(R"(
fn main() {
  %v = vec_new 10, 4
  %q = as_raw %v
  %s = gep %q, 2
  %x = deref_read %s !unsafe
  ret
}
)");
  Analysis a = analyze(p);
  const SpatialTemplate &t = a.spatial.at(ref("main", 2, "s"));
  CHECK(t.root == ref("main", 0, "v"));
  CHECK(chain_names(t.chain) == std::vector<std::string>{"v", "q", "s"});
  CHECK(t.root_kind == RootKind::Allocation);
  CHECK(t.capacity == SizeExpr::lit(10));
  CHECK(t.init_len == SizeExpr::lit(4));
  CHECK(t.static_offset == 2);
  CHECK(names(a.carriers) == std::set<std::string>{"v"});
}

TEST_CASE("offsets add up along a chain and become dynamic on symbolic steps") {
  Program p = parse_program(R"(
fn main() {
  %r = raw_alloc 16
  %a = gep %r, 2
  %b = gep %a, 3
  %x = deref_read %b !unsafe
  %k = copy 1
  %c = gep %b, %k
  %y = deref_read %c !unsafe
  ret
}
)");
  Analysis a = analyze(p);
  CHECK(a.spatial.at(ref("main", 2, "b")).static_offset == 5);
  CHECK(!a.spatial.at(ref("main", 5, "c")).static_offset.has_value());
  CHECK(a.spatial.at(ref("main", 2, "b")).init_len == SizeExpr::lit(0));
}

TEST_CASE("a view's bound is its declared count") {
  Program p = load_corpus_program("vm_slice_oob");
  Analysis a = analyze(p);
  const SpatialTemplate &t = a.spatial.at(ref("main", 11, "last"));
  CHECK(t.root == ref("main", 10, "window"));
  CHECK(t.root_kind == RootKind::View);
  CHECK(t.capacity == SizeExpr::lit(4));
  CHECK(t.static_offset == 4);
}

TEST_CASE("branch joins keep every root and make the offset dynamic") {
  Program p = parse_program(R"(
fn main() {
  %c = copy 1
  %p = raw_alloc 4
  cbr %c, a, b
a:
  %p = raw_alloc 8
  br j
b:
  br j
j:
  %x = deref_read %p !unsafe
  ret
}
)");
  Analysis a = analyze(p);
  CHECK(a.spatial.at(ref("main", 1, "p")).static_offset == 0);
  CHECK(a.spatial.at(ref("main", 3, "p")).roots.size() == 1);
  Program q = parse_program(R"(
fn main() {
  %c = copy 1
  %r = raw_alloc 4
  %s = raw_alloc 8
  %p = copy %r
  cbr %c, a, b
a:
  %p = copy %s
  br j
b:
  br j
j:
  %q = gep %p, 1
  %x = deref_read %q !unsafe
  ret
}
)");
  Analysis b = analyze(q);
  const SpatialTemplate &t = b.spatial.at(ref("main", 8, "q"));
  CHECK(t.roots.size() == 2);
  CHECK(!t.static_offset.has_value());
}

TEST_CASE("symbolic sizes are kept by name") {
  Program p = parse_program(R"(
fn main() {
  %n = copy 6
  %r = raw_alloc %n
  %x = deref_read %r !unsafe
  ret
}
)");
  Analysis a = analyze(p);
  CHECK(a.spatial.at(ref("main", 1, "r")).capacity.str() == "%n");
}

TEST_CASE("null roots have no capacity") {
  Program p = load_corpus_program("null_deref");
  Analysis a = analyze(p);
  const SpatialTemplate &t = a.spatial.at(ref("main", 3, "p"));
  CHECK(t.root_kind == RootKind::Null);
  CHECK(t.capacity == SizeExpr::lit(0));
}

TEST_CASE("cached session token: root, chain and carriers") {
  Program p = load_corpus_program("uaf_cache");
  Analysis a = analyze(p);
  const SpatialTemplate &t = a.spatial.at(ref("main", 4, "self_ptr"));
  CHECK(t.root == ref("main", 1, "token"));
  CHECK(chain_names(t.chain) == std::vector<std::string>{"token", "local_token", "self_ptr"});
  CHECK(t.capacity == SizeExpr::lit(13));
  CHECK(names(a.carriers) == std::set<std::string>{"token", "local_token"});
  const TemporalTemplate &o = a.temporal.at(ref("main", 4, "self_ptr"));
  CHECK(names(o.owner_set) == std::set<std::string>{"local_token", "stale_token"});
  for (const auto &[src, tt] : a.temporal)
    for (const auto &owner : tt.owner_set)
      CHECK(tt.pointer_set.count(owner));
}

TEST_CASE("raw-only taint sets own nothing") {
  Program p = parse_program("fn main() {\n  %r = raw_alloc 2\n  %x = deref_read %r !unsafe\n  ret\n}\n");
  Analysis a = analyze(p);
  CHECK(a.temporal.at(ref("main", 0, "r")).owner_set.empty());
}

TEST_CASE("every risky pointer gets exactly one template") {
  for (const auto &e : load_corpus(corpus_dir())) {
    CAPTURE(e.name);
    Program p = parse_program(read_file(e.path));
    Analysis a = analyze(p);
    CHECK(a.spatial.size() == a.risk.spatially_risky.size());
    for (const auto &r : a.risk.spatially_risky)
      CHECK(a.spatial.count(r));
    CHECK(a.temporal.size() == a.tainted.sets.size());
    for (const auto &c : a.carriers)
      CHECK(!a.risk.spatially_risky.count(c));
  }
}
