#include <doctest.h>

#include "lot/util.hpp"

using namespace lot;

TEST_CASE("rng is deterministic and bounded draws stay in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    CHECK(r.below(10) < 10);
    double u = r.unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  std::vector<int> v = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> w = v;
  Rng r1(5), r2(5);
  r1.shuffle(v);
  r2.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}

TEST_CASE("string helpers") {
  CHECK(lower_copy("AbC") == "abc");
  CHECK(trim("  x \n") == "x");
  CHECK(collapse_ws("  a \t b\n\nc ") == "a b c");
  CHECK(contains("hello world", "lo w"));
  CHECK_FALSE(contains("hello", "world"));
}

TEST_CASE("sentence splitting on terminators") {
  auto s = split_sentences("One. Two! Three? Four\nFive");
  REQUIRE(s.size() == 5);
  CHECK(s[0] == "One");
  CHECK(s[4] == "Five");
  CHECK(split_sentences("...").empty());
}

TEST_CASE("paragraph splitting on blank lines") {
  auto p = split_paragraphs("first line\nstill first\n\nsecond\n\n\nthird");
  REQUIRE(p.size() == 3);
  CHECK(p[0] == "first line\nstill first");
  CHECK(p[1] == "second");
  CHECK(p[2] == "third");
}

TEST_CASE("fenced block extraction") {
  CHECK_FALSE(fenced_block("no fence here").has_value());
  CHECK_FALSE(fenced_block("```\nunclosed").has_value());
  auto block = fenced_block("preamble\n```\na\nb\n```\ntrailer");
  REQUIRE(block.has_value());
  CHECK(*block == "a\nb\n");
}

TEST_CASE("marker token scanning") {
  auto tokens = find_marker_tokens("x MARKER_1 y MARKER_1 z MARKER_B2 MARKER_", "MARKER_");
  REQUIRE(tokens.size() == 2);
  CHECK(tokens[0] == "MARKER_1");
  CHECK(tokens[1] == "MARKER_B2");
}

TEST_CASE("fnv1a is stable") {
  CHECK(fnv1a("") == 14695981039346656037ULL);
  CHECK(fnv1a("a") != fnv1a("b"));
  CHECK(hex64(fnv1a("abc")).size() == 16);
}
