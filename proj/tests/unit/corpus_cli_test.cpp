// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "helpers.h"
#include "ownsan/generator.h"

using namespace ownsan;
using namespace ownsan::testing;

TEST_CASE("corpus loads with sidecars") {
  auto entries = load_corpus(corpus_dir());
  REQUIRE(entries.size() == 15);
  CHECK(std::is_sorted(entries.begin(), entries.end(),
                       [](const auto &a, const auto &b) { return a.name < b.name; }));
  for (const auto &e : entries) {
    CAPTURE(e.name);
    CHECK(e.expected.count("selective"));
    CHECK(e.expected.count("asan"));
    if (e.group == "safe") {
      CHECK(e.expected.at("selective").empty());
      CHECK(e.expected.at("asan").empty());
    }
  }
  CHECK_THROWS_AS(load_corpus(corpus_dir() + "/missing"), Error);
}

TEST_CASE("corpus expectations match both modes") {
  ComparisonReport r = compare_corpus(load_corpus(corpus_dir()), {});
  for (const auto &e : r.entries) {
    CAPTURE(e.name);
    CHECK(e.mismatches.empty());
  }
  CHECK(r.ok());
}

TEST_CASE("comparison is independent of the worker count") {
  auto entries = load_corpus(corpus_dir());
  CompareOptions one, many;
  many.threads = 4;
  CHECK(comparison_json(compare_corpus(entries, one)) ==
        comparison_json(compare_corpus(entries, many)));
}

TEST_CASE("comparison json") {
  auto j = comparison_json(compare_corpus(load_corpus(corpus_dir()), {}));
  CHECK(j.at("schema") == 1);
  CHECK(j.at("ok") == true);
  REQUIRE(j.at("entries").size() == 15);
  const auto &first = j.at("entries")[0];
  CHECK(first.contains("name"));
  CHECK(first.at("sites").contains("selective"));
  CHECK(first.at("sites").contains("asan"));
  CHECK(j.at("totals").at("selective_sites") < j.at("totals").at("asan_sites"));
}

TEST_CASE("a wrong expectation is reported as a mismatch") {
  CorpusEntry e = load_entry(corpus_file("uaf_cache"));
  e.expected["selective"] = {{ViolationClass::UAF, "main", 9}};
  EntryResult r = compare_entry(e, {});
  CHECK(!r.mismatches.empty());
}

TEST_CASE("observed violations keep report order") {
  ExecutionReport r;
  r.violations.push_back({ViolationClass::UAF, "main", 8, "p", ""});
  r.violations.push_back({ViolationClass::OOB, "f", 2, "q", ""});
  auto o = observed(r);
  REQUIRE(o.size() == 2);
  CHECK(o[0] == Expectation{ViolationClass::UAF, "main", 8});
  CHECK(o[1].function == "f");
}

TEST_CASE("generator is deterministic and bounded") {
  CHECK(generate_program(7, 30) == generate_program(7, 30));
  CHECK(generate_program(7, 30) != generate_program(8, 30));
  Program empty = parse_program(generate_program(0, 0));
  REQUIRE(empty.find("main") != nullptr);
  CHECK(empty.functions.size() == 1);
  CHECK_THROWS_AS(generate_program(1, kMaxGeneratedSize + 1), Error);
  CHECK_NOTHROW(generate_program(1, kMaxGeneratedSize));
}

TEST_CASE("generated programs are valid and terminate") {
  size_t with_helpers = 0, with_icall = 0;
  for (uint64_t seed = 0; seed < 500; ++seed) {
    std::string text = generate_program(seed, 10 + seed % 31);
    CAPTURE(seed);
    Program p = parse_program(text);
    REQUIRE(validate_program(p).empty());
    CHECK_NOTHROW(execute_plain(p));
    with_helpers += p.functions.size() > 1;
    with_icall += text.find("icall") != std::string::npos;
  }
  CHECK(with_helpers > 100);
  CHECK(with_icall > 50);
}
