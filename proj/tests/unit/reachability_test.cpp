// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.h"
#include "oracles.h"
#include "ownsan/callgraph.h"

using namespace ownsan;
using namespace ownsan::testing;

TEST_CASE("uncalled functions are not reachable") {
  Program p = parse_program(R"(
fn main() entry {
  call a()
  ret
}
fn a() {
  call b()
  ret
}
fn b() {
  ret
}
fn dead() {
  call b()
  ret
}
)");
  CHECK(reachable_functions(p) == std::set<std::string>{"main", "a", "b"});
}

TEST_CASE("indirect calls reach address-taken functions of the same signature") {
  Program p = load_corpus_program("icall_taint");
  CallGraph g = build_call_graph(p);
  CHECK(g.address_taken == std::set<std::string>{"inspect", "release", "resize"});
  CHECK(resolve_indirect_callees(p, "main", 8) == std::set<std::string>{"inspect", "release"});
  CHECK(reachable_functions(p) == std::set<std::string>{"main", "inspect", "release"});
}

TEST_CASE("an icall in an unreachable function contributes nothing") {
  Program p = parse_program(R"(
fn main() entry {
  %f = copy @t
  ret
}
fn dead() {
  %g = copy @t
  %k = icall %g() sig(-> scalar)
  ret
}
fn t() -> scalar {
  ret 0
}
)");
  CHECK(reachable_functions(p) == std::set<std::string>{"main"});
}

TEST_CASE("undefined direct callee is an error") {
  Program p;
  p.functions.push_back(parse_program("fn main() {\n  ret\n}\n").functions[0]);
  Instruction call;
  call.op = Opcode::Call;
  call.aux = "ghost";
  p.functions[0].instrs.insert(p.functions[0].instrs.begin(), call);
  CHECK_THROWS_AS(build_call_graph(p), Error);
}

TEST_CASE("reachability agrees with breadth-first search on random call graphs") {
  for (uint64_t seed = 1; seed <= 50; ++seed) {
    RandomCallGraph g = random_call_graph(seed, 2 + seed % 9);
    CAPTURE(seed);
    CAPTURE(g.text);
    Program p = parse_program(g.text);
    REQUIRE(validate_program(p).empty());
    CHECK(reachable_functions(p) == oracle_reachable(g));
  }
}
