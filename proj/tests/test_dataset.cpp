#include <doctest.h>

#include <filesystem>

#include "helpers.hpp"
#include "lot/dataset.hpp"
#include "lot/util.hpp"

using namespace lot;
using lot::testing::make_trace;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name, const std::string& content) {
  fs::path p = fs::temp_directory_path() / ("lot_dataset_" + name);
  write_file(p, content);
  return p;
}

}  // namespace

TEST_CASE("load_traces accepts valid records and computes char_count") {
  auto p = temp_file("ok.jsonl",
                     R"({"id":"t1","question_id":"q1","dataset":"D","model":"m1","text":"hello"})"
                     "\n"
                     R"({"id":"t2","question_id":"q1","dataset":"D","model":"m2","text":"world!","correct":true})"
                     "\n");
  Corpus c = load_traces(p);
  REQUIRE(c.size() == 2);
  CHECK(c[0].char_count == 5);
  CHECK(c[1].is_correct == true);
  CHECK_FALSE(c[0].is_correct.has_value());
}

TEST_CASE("load_traces on an empty file yields an empty corpus") {
  CHECK(load_traces(temp_file("empty.jsonl", "")).empty());
}

TEST_CASE("load_traces reports the field and line of a malformed record") {
  auto p = temp_file("missing.jsonl",
                     R"({"id":"t1","question_id":"q1","dataset":"D","model":"m1","text":"x"})"
                     "\n"
                     R"({"id":"t2","question_id":"q2","dataset":"D","model":"m1"})"
                     "\n");
  try {
    load_traces(p);
    FAIL("expected an error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(contains(msg, ":2"));
    CHECK(contains(msg, "text"));
  }
}

TEST_CASE("load_traces rejects duplicate ids") {
  auto p = temp_file("dup.jsonl",
                     R"({"id":"t1","question_id":"q1","dataset":"D","model":"m1","text":"x"})"
                     "\n"
                     R"({"id":"t1","question_id":"q2","dataset":"D","model":"m1","text":"y"})"
                     "\n");
  CHECK_THROWS_WITH_AS(load_traces(p), doctest::Contains("duplicate"), Error);
}

TEST_CASE("trace save/load round-trips field for field") {
  Corpus corpus;
  corpus.push_back(make_trace("a:q0", "q0", "model-a", "Omelet", "some text", true));
  corpus.push_back(make_trace("b:q0", "q0", "model-b", "", "other \"text\"\nwith newline"));
  corpus[1].final_answer = "42";
  auto p = fs::temp_directory_path() / "lot_dataset_roundtrip.jsonl";
  save_traces(p, corpus);
  Corpus back = load_traces(p);
  CHECK(back == corpus);
}

TEST_CASE("pair_traces pairs shared questions and skips unmatched ones") {
  Corpus c;
  for (int q = 0; q < 3; ++q) {
    c.push_back(make_trace("a" + std::to_string(q), "q" + std::to_string(q), "ma", "", "ta"));
    c.push_back(make_trace("b" + std::to_string(q), "q" + std::to_string(q), "mb", "", "tb"));
  }
  c.push_back(make_trace("a3", "q3", "ma", "", "only one side"));
  PairingResult r = pair_traces(c, "ma", "mb");
  CHECK(r.pairs.size() == 3);
  CHECK(r.skipped_questions == 1);
  for (const auto& p : r.pairs) {
    CHECK(p.trace_a.question_id == p.question_id);
    CHECK(p.trace_b.question_id == p.question_id);
    CHECK(p.trace_a.model_id != p.trace_b.model_id);
  }
}

TEST_CASE("pair_traces errors when a model is absent") {
  Corpus c = {make_trace("a0", "q0", "ma", "", "x")};
  CHECK_THROWS_AS(pair_traces(c, "ma", "mb"), Error);
}

TEST_CASE("pair_traces skips questions with two traces from one model") {
  Corpus c = {make_trace("a0", "q0", "ma", "", "x"), make_trace("a1", "q0", "ma", "", "y"),
              make_trace("b0", "q0", "mb", "", "z"), make_trace("a2", "q1", "ma", "", "x"),
              make_trace("b1", "q1", "mb", "", "z")};
  PairingResult r = pair_traces(c, "ma", "mb");
  CHECK(r.pairs.size() == 1);
  CHECK(r.pairs[0].question_id == "q1");
  CHECK(r.skipped_questions == 1);
}

namespace {
std::vector<TracePair> n_pairs(size_t n) {
  std::vector<TracePair> pairs;
  for (size_t i = 0; i < n; ++i)
    pairs.push_back(lot::testing::make_pair("q" + std::to_string(i), "ta", "tb"));
  return pairs;
}
}  // namespace

TEST_CASE("split_pairs produces the documented sizes") {
  PairSplit s = split_pairs(n_pairs(100), 0.8, 7);
  CHECK(s.train.size() == 80);
  CHECK(s.test.size() == 20);
  PairSplit aime = split_pairs(n_pairs(60), 0.75, 7);
  CHECK(aime.train.size() == 45);
  CHECK(aime.test.size() == 15);
}

TEST_CASE("split_pairs is deterministic and a partition") {
  auto pairs = n_pairs(31);
  PairSplit s1 = split_pairs(pairs, 0.6, 99);
  PairSplit s2 = split_pairs(pairs, 0.6, 99);
  CHECK(s1.train == s2.train);
  CHECK(s1.test == s2.test);

  std::set<std::string> seen;
  for (const auto& p : s1.train) seen.insert(p.question_id);
  for (const auto& p : s1.test) CHECK(seen.insert(p.question_id).second);
  CHECK(seen.size() == pairs.size());
}

TEST_CASE("split_pairs needs at least two pairs") {
  CHECK_THROWS_AS(split_pairs(n_pairs(1), 0.8, 0), Error);
  CHECK_THROWS_AS(split_pairs(n_pairs(10), 1.0, 0), Error);
}

TEST_CASE("anonymize sets codenames and round-trips through the codebook") {
  Codebook cb = Codebook::from_map({{"Phi-4-Reasoning-Plus", "Omelet"}, {"other-model", "Waffle"}});
  Corpus c = {make_trace("t1", "q1", "Phi-4-Reasoning-Plus", "", "x"),
              make_trace("t2", "q1", "other-model", "", "y")};
  Corpus anon = anonymize(c, cb);
  CHECK(anon[0].codename == "Omelet");
  CHECK(anon[1].codename == "Waffle");
  for (const auto& t : anon) CHECK(cb.model_for(*t.codename) == t.model_id);
}

TEST_CASE("anonymize rejects uncovered models") {
  Codebook cb = Codebook::from_map({{"known", "Omelet"}});
  Corpus c = {make_trace("t1", "q1", "unknown", "", "x")};
  CHECK_THROWS_AS(anonymize(c, cb), Error);
}

TEST_CASE("codebook rejects duplicate codenames") {
  CHECK_THROWS_AS(Codebook::from_map({{"m1", "Omelet"}, {"m2", "Omelet"}}), Error);
  CHECK_THROWS_AS(Codebook::from_map({{"m1", "m2"}, {"m2", "Waffle"}}), Error);
}

TEST_CASE("pairs file round-trips") {
  std::vector<TracePair> pairs = n_pairs(4);
  auto p = fs::temp_directory_path() / "lot_dataset_pairs.jsonl";
  save_pairs(p, pairs);
  CHECK(load_pairs(p) == pairs);
}

TEST_CASE("questions file round-trips and rejects duplicates") {
  auto p = fs::temp_directory_path() / "lot_dataset_questions.jsonl";
  save_questions(p, {{"q1", "What is 1+1? [gold=2]", "2"}, {"q2", "text", ""}});
  auto qs = load_questions(p);
  REQUIRE(qs.size() == 2);
  CHECK(qs[0].answer == "2");
  write_file(p, R"({"question_id":"q1","question":"a"})"
                "\n"
                R"({"question_id":"q1","question":"b"})"
                "\n");
  CHECK_THROWS_AS(load_questions(p), Error);
}
