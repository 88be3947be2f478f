// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.h"
#include "oracles.h"
#include "ownsan/callgraph.h"
#include "ownsan/generator.h"

using namespace ownsan;
using namespace ownsan::testing;

namespace {

struct Graph {
  Program program;
  DerivationGraph graph;
  explicit Graph(const std::string &text)
      : program(parse_program(text)), graph(program, reachable_functions(program)) {}
};

PointerRef ref(const std::string &fn, int site, const std::string &v) { return {fn, site, v}; }

} // namespace

TEST_CASE("an unsafe use traces back through derivations to its root") {
  Graph g(R"(
fn main() {
  %r = raw_alloc 8
  %a = copy %r
  %b = gep %a, 1
  %c = copy %b
  %x = deref_read %c !unsafe
  ret
}
)");
  CHECK(find_exposed_raw_pointers(g.graph) == std::set<PointerRef>{ref("main", 0, "r")});
  SourceClass sc = classify_sources(g.graph, find_exposed_raw_pointers(g.graph));
  CHECK(sc.at(ref("main", 0, "r")) == SourceType::T2);
  CHECK(names(spatial_closure(g.graph, {ref("main", 0, "r")})) ==
        std::set<std::string>{"r", "a", "b", "c"});
}

TEST_CASE("raw pointers only used in safe code are not exposed") {
  Graph g("fn main() {\n  %o = heap_alloc 2\n  %r = as_raw %o\n  %s = copy %r\n  ret\n}\n");
  CHECK(find_exposed_raw_pointers(g.graph).empty());
}

TEST_CASE("source types follow the root opcode") {
  Graph g(R"(
fn main() {
  %o = heap_alloc 2
  %a = as_raw %o
  %n = null
  %x = deref_read %a !unsafe
  %y = deref_read %n !unsafe
  ret
}
)");
  SourceClass sc = classify_sources(g.graph, find_exposed_raw_pointers(g.graph));
  CHECK(sc.size() == 2);
  CHECK(sc.at(ref("main", 1, "a")) == SourceType::T1);
  CHECK(sc.at(ref("main", 2, "n")) == SourceType::T2);
}

TEST_CASE("an uncalled raw parameter cannot be classified") {
  Graph g(R"(
fn main() entry {
  %f = copy @peek
  ret
}
fn peek(%q: raw) -> scalar {
  %v = deref_read %q !unsafe
  ret %v
}
)");
  // peek is address-taken but never called, so it is not analyzed at all.
  CHECK(find_exposed_raw_pointers(g.graph).empty());
  Program p = parse_program("fn main(%q: raw) entry {\n  %v = deref_read %q !unsafe\n  ret\n}\n");
  DerivationGraph dg(p, reachable_functions(p));
  auto exposed = find_exposed_raw_pointers(dg);
  CHECK(exposed == std::set<PointerRef>{ref("main", param_site(0), "q")});
  CHECK_THROWS_AS(classify_sources(dg, exposed), Error);
}

TEST_CASE("unsafe API sites") {
  Graph g(R"(
fn main() {
  %v = vec_new 4, 1
  %w = move %v
  api_set_len %w, 3 !unsafe
  %k = api_unchecked 4, shl, 70 !unsafe
  ret
}
)");
  auto sites = find_unsafe_api_sites(g.graph);
  REQUIRE(sites.size() == 2);
  CHECK(sites[0].api == "set_len");
  CHECK(sites[0].index == 2);
  CHECK(sites[0].pointers == std::vector<PointerRef>{ref("main", 1, "w")});
  CHECK(sites[1].api == "unchecked_shl");
  CHECK(sites[1].pointers.empty());
}

TEST_CASE("cached session token: tainted and owner sets") {
  Program p = load_corpus_program("uaf_cache");
  Analysis a = analyze(p);
  REQUIRE(a.tainted.sets.size() == 1);
  const auto &[source, set] = *a.tainted.sets.begin();
  CHECK(source == ref("main", 4, "self_ptr"));
  CHECK(names(set) == std::set<std::string>{"self_ptr", "local_token", "stale_token"});
  CHECK(!names(set).count("token"));
  CHECK(names(a.tainted.owners.at(source)) ==
        std::set<std::string>{"local_token", "stale_token"});
}

TEST_CASE("T2 sources do not propagate backwards") {
  Graph g(R"(
fn main() {
  %r = raw_alloc 4
  %o = box_from_raw %r !unsafe
  %x = deref_read %r !unsafe
  ret
}
)");
  auto sources = classify_sources(g.graph, find_exposed_raw_pointers(g.graph));
  auto t = propagate_taint(g.graph, sources);
  CHECK(names(t.sets.at(ref("main", 0, "r"))) == std::set<std::string>{"r", "o"});
}

TEST_CASE("backward propagation stops at owners released before the source") {
  Graph g(R"(
fn main() {
  %a = heap_alloc 4
  %c = copy %a
  drop %a
  %r = as_raw %c
  %x = deref_read %r !unsafe
  ret
}
)");
  auto sources = classify_sources(g.graph, find_exposed_raw_pointers(g.graph));
  auto t = propagate_taint(g.graph, sources);
  CHECK(names(t.sets.at(ref("main", 3, "r"))) == std::set<std::string>{"c", "r"});

  // Moved only after the source, so the original owner stays in the set.
  Graph h(R"(
fn main() {
  %a = heap_alloc 4
  %r = as_raw %a
  %b = move %a
  %x = deref_read %r !unsafe
  ret
}
)");
  auto t2 = propagate_taint(h.graph, classify_sources(h.graph, find_exposed_raw_pointers(h.graph)));
  CHECK(names(t2.sets.at(ref("main", 1, "r"))) == std::set<std::string>{"a", "b", "r"});
}

TEST_CASE("an owner moved away before the source is excluded") {
  Graph g(R"(
fn main() {
  %token = heap_alloc 4
  %local = move %token
  %p = as_raw %local
  %x = deref_read %p !unsafe
  ret
}
)");
  auto t = propagate_taint(g.graph, classify_sources(g.graph, find_exposed_raw_pointers(g.graph)));
  CHECK(names(t.sets.at(ref("main", 2, "p"))) == std::set<std::string>{"local", "p"});
}

TEST_CASE("a label between release and source keeps the owner") {
  Graph g(R"(
fn main() {
  %a = heap_alloc 4
  %c = copy 1
  cbr %c, rel, keep
rel:
  drop %a
  br join
keep:
  br join
join:
  %r = as_raw %a
  %x = deref_read %r !unsafe
  ret
}
)");
  auto t = propagate_taint(g.graph, classify_sources(g.graph, find_exposed_raw_pointers(g.graph)));
  CHECK(names(t.sets.at(ref("main", 6, "r"))) == std::set<std::string>{"a", "r"});
}

TEST_CASE("sets that reach another source are merged") {
  Graph g(R"(
fn main() {
  %o = heap_alloc 4
  %a = as_raw %o
  %b = as_raw %o
  %x = deref_read %a !unsafe
  %y = deref_read %b !unsafe
  %n = null
  %z = deref_read %n !unsafe
  ret
}
)");
  auto t = propagate_taint(g.graph, classify_sources(g.graph, find_exposed_raw_pointers(g.graph)));
  CHECK(t.sets.size() == 3);
  CHECK(t.sets.at(ref("main", 1, "a")) == t.sets.at(ref("main", 2, "b")));
  CHECK(names(t.sets.at(ref("main", 1, "a"))) == std::set<std::string>{"o", "a", "b"});
  CHECK(names(t.sets.at(ref("main", 5, "n"))) == std::set<std::string>{"n"});
}

TEST_CASE("taint crosses indirect calls to matching targets only") {
  Program p = load_corpus_program("icall_taint");
  Analysis a = analyze(p);
  auto all = refs(a.tainted.all_tainted());
  CHECK(all.count("release:%q@-1"));
  CHECK(all.count("release:%o@0"));
  CHECK(all.count("inspect:%q@-1"));
  CHECK(!all.count("resize:%o@-1"));
}

TEST_CASE("taint matches the fixpoint oracle on the corpus") {
  for (const auto &e : load_corpus(corpus_dir())) {
    CAPTURE(e.name);
    Program p = parse_program(read_file(e.path));
    Analysis a = analyze(p);
    CHECK(a.tainted == oracle_taint_closure(*a.graph, a.sources));
  }
}

TEST_CASE("taint result does not depend on the worker count") {
  for (uint64_t seed = 0; seed < 40; ++seed) {
    Program p = parse_program(generate_program(seed, 40));
    Analysis one = analyze(p, {1});
    Analysis many = analyze(p, {6});
    CAPTURE(seed);
    CHECK(one.tainted == many.tainted);
    CHECK(one.plan == many.plan);
  }
}
