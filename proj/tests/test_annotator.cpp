#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "helpers.hpp"
#include "lot/annotator.hpp"
#include "lot/prompts.hpp"
#include "lot/trainlog.hpp"
#include "lot/util.hpp"

using namespace lot;
using lot::testing::make_pair;
using lot::testing::make_trace;

TEST_CASE("templates render placeholders and directory overrides win") {
  TemplateSet set = TemplateSet::builtin();
  std::string p = set.render("annotate_por", {{"taxonomy", "TAX"}, {"trace", "BODY"}});
  CHECK(contains(p, "TAX"));
  CHECK(contains(p, "BODY"));
  CHECK_FALSE(contains(p, "{taxonomy}"));
  CHECK_THROWS_AS(set.raw("nope"), Error);

  auto dir = std::filesystem::temp_directory_path() / "lot_templates_override";
  std::filesystem::create_directories(dir);
  write_file(dir / "annotate_por.txt", "custom {trace}");
  TemplateSet overridden = TemplateSet::from_dir(dir);
  CHECK(overridden.render("annotate_por", {{"trace", "X"}}) == "custom X");
  CHECK(overridden.raw("annotate_bor") == set.raw("annotate_bor"));
}

TEST_CASE("shipped template files match the builtins") {
  // the files under templates/ are the editable copies of the compiled-in set
  auto dir = std::filesystem::path(LOT_SOURCE_DIR) / "templates";
  REQUIRE(std::filesystem::is_directory(dir));
  TemplateSet set = TemplateSet::builtin();
  for (const auto& name : set.names()) {
    CAPTURE(name);
    CHECK(read_file(dir / (name + ".txt")) == set.raw(name));
  }
}

TEST_CASE("parse_features reads the fenced FEATURE lines strictly") {
  auto features = parse_features("noise\n```\nFEATURE: a :: does a\nFEATURE: b :: does b\n```\n");
  REQUIRE(features.size() == 2);
  CHECK(features[0].name == "a");
  CHECK(features[1].definition == "does b");

  CHECK(parse_features("```\n```\n").empty());
  CHECK_THROWS_AS(parse_features("FEATURE: a :: b"), ParseError);          // no fence
  CHECK_THROWS_AS(parse_features("```\nFEATURE: a - b\n```"), ParseError);  // missing ::
  CHECK_THROWS_AS(parse_features("```\nnot a feature\n```"), ParseError);
  CHECK_THROWS_AS(parse_features("```\nFEATURE:  :: d\n```"), ParseError);
}

namespace {
Taxonomy marker_taxonomy() {
  Feature f1, f2;
  f1.name = "uses MARKER_1";
  f1.definition = "The reasoning mentions the token MARKER_1 at least once.";
  f2.name = "uses MARKER_2";
  f2.definition = "The reasoning mentions the token MARKER_2 at least once.";
  return Taxonomy::with_features({f1, f2});
}
}  // namespace

TEST_CASE("parse_annotation aligns values with the taxonomy") {
  Taxonomy tax = marker_taxonomy();
  auto v = parse_annotation("```\nuses MARKER_1 = 1\nuses MARKER_2 = 0\n```", tax,
                            EncodingKind::por);
  CHECK(v == std::vector<int>{1, 0});

  SUBCASE("unknown names are ignored with a warning, known ones still required") {
    auto ok = parse_annotation("```\nuses MARKER_1 = 1\nmystery = 9\nuses MARKER_2 = 2\n```",
                               tax, EncodingKind::bor);
    CHECK(ok == std::vector<int>{1, 2});
  }
  SUBCASE("missing feature is a parse error") {
    CHECK_THROWS_AS(parse_annotation("```\nuses MARKER_1 = 1\n```", tax, EncodingKind::por),
                    ParseError);
  }
  SUBCASE("duplicate feature is a parse error") {
    CHECK_THROWS_AS(parse_annotation("```\nuses MARKER_1 = 1\nuses MARKER_1 = 0\n```", tax,
                                     EncodingKind::por),
                    ParseError);
  }
  SUBCASE("PoR values beyond 1 are rejected") {
    CHECK_THROWS_AS(parse_annotation("```\nuses MARKER_1 = 2\nuses MARKER_2 = 0\n```", tax,
                                     EncodingKind::por),
                    ParseError);
  }
  SUBCASE("negative or non-integer values are rejected") {
    CHECK_THROWS_AS(parse_annotation("```\nuses MARKER_1 = -1\nuses MARKER_2 = 0\n```", tax,
                                     EncodingKind::bor),
                    ParseError);
    CHECK_THROWS_AS(parse_annotation("```\nuses MARKER_1 = maybe\nuses MARKER_2 = 0\n```", tax,
                                     EncodingKind::bor),
                    ParseError);
  }
}

TEST_CASE("mock oracle proposes one feature per differing marker") {
  MockOracleAnnotator oracle;
  TracePair pair = make_pair("q1", "Some text with MARKER_1 inside.", "Nothing special here.");
  auto features = oracle.propose_initial(pair);
  REQUIRE(features.size() == 1);
  CHECK(features[0].name == "uses MARKER_1");
  CHECK(contains(features[0].definition, "MARKER_1"));
}

TEST_CASE("mock oracle on identical texts reports an empty feature list") {
  MockOracleAnnotator oracle;
  TracePair pair = make_pair("q1", "Same words.", "Same words.");
  CHECK_THROWS_WITH_AS(oracle.propose_initial(pair), doctest::Contains("empty feature list"),
                       Error);
}

TEST_CASE("mock oracle requires anonymized pairs") {
  MockOracleAnnotator oracle;
  TracePair pair = make_pair("q1", "MARKER_1", "plain");
  pair.trace_a.codename.reset();
  CHECK_THROWS_AS(oracle.propose_initial(pair), Error);
}

TEST_CASE("mock oracle proposes only uncovered markers on failed pairs") {
  MockOracleAnnotator oracle;
  Taxonomy tax = marker_taxonomy();
  TracePair fresh = make_pair("q2", "Contains MARKER_3 today.", "Only mundane words.");
  auto features = oracle.propose_additional(tax, fresh);
  REQUIRE(features.size() == 1);
  CHECK(contains(features[0].name, "MARKER_3"));

  TracePair covered = make_pair("q3", "Contains MARKER_1 again.", "Only mundane words.");
  CHECK(oracle.propose_additional(tax, covered).empty());
}

TEST_CASE("mock oracle PoR marks marker presence") {
  MockOracleAnnotator oracle;
  Taxonomy tax = marker_taxonomy();
  auto one = oracle.annotate_por(tax, make_trace("t", "q", "m", "C", "has MARKER_1 only"));
  REQUIRE(one.has_value());
  CHECK(*one == std::vector<int>{1, 0});
  auto both = oracle.annotate_por(tax, make_trace("t", "q", "m", "C", "MARKER_1 and MARKER_2"));
  CHECK(*both == std::vector<int>{1, 1});
}

TEST_CASE("annotating against an empty taxonomy is a precondition error") {
  MockOracleAnnotator oracle;
  Taxonomy empty;
  CHECK_THROWS_AS(oracle.annotate_por(empty, make_trace("t", "q", "m", "C", "x")), Error);
}

TEST_CASE("mock oracle BoR counts sentences containing the marker") {
  MockOracleAnnotator oracle;
  Taxonomy tax = marker_taxonomy();
  std::string text = "MARKER_1 here. Again MARKER_1 there. MARKER_1 closes. Nothing else.";
  auto counts = oracle.annotate_bor(tax, make_trace("t", "q", "m", "C", text));
  REQUIRE(counts.has_value());
  CHECK(*counts == std::vector<int>{3, 0});
  auto zero = oracle.annotate_bor(tax, make_trace("t", "q", "m", "C", "No tokens at all."));
  CHECK(*zero == std::vector<int>{0, 0});
}

TEST_CASE("mock oracle logs prompts that never leak true model names") {
  TrainLog log;
  MockOracleAnnotator oracle(MockOracleAnnotator::Options{}, &log);
  TracePair pair = make_pair("q1", "MARKER_1 text.", "other text.");
  oracle.propose_initial(pair);
  Taxonomy tax = Taxonomy::with_features(oracle.propose_initial(pair));
  oracle.annotate_bor(tax, pair.trace_a);
  oracle.propose_additional(tax, pair);

  auto events = log.events_of_type("annotator_call");
  REQUIRE(events.size() >= 3);
  for (const auto& e : events) {
    auto j = nlohmann::json::parse(e.payload_json);
    std::string prompt = j.at("prompt").get<std::string>();
    CHECK_FALSE(contains(prompt, "model-a"));  // true model ids stay out of prompts
    CHECK_FALSE(contains(prompt, "model-b"));
    CHECK(j.contains("prompt_hash"));
    CHECK(j.contains("response_hash"));
  }
}

TEST_CASE("llm annotator parses well-formed responses and retries on format errors") {
  AnnotatorConfig cfg;
  cfg.max_retries = 2;
  cfg.backoff_ms = 1;
  int calls = 0;
  ScriptedCompleter completer([&](const std::string& prompt) -> std::string {
    ++calls;
    // first reply is malformed; the reminder-carrying retry succeeds
    if (calls == 1) return "I think the features are interesting.";
    CHECK(contains(prompt, "FORMAT REMINDER"));
    return "```\nFEATURE: uses MARKER_9 :: mentions MARKER_9\n```";
  });
  LlmAnnotator annotator(cfg, completer, TemplateSet::builtin());
  auto features = annotator.propose_initial(make_pair("q1", "MARKER_9", "none"));
  CHECK(calls == 2);
  REQUIRE(features.size() == 1);
  CHECK(features[0].name == "uses MARKER_9");
}

TEST_CASE("llm annotator raises after exhausting format retries on proposals") {
  AnnotatorConfig cfg;
  cfg.max_retries = 1;
  ScriptedCompleter completer([](const std::string&) { return std::string("garbage"); });
  LlmAnnotator annotator(cfg, completer, TemplateSet::builtin());
  CHECK_THROWS_AS(annotator.propose_initial(make_pair("q1", "a", "b")), ParseError);
  CHECK(completer.calls() == 2);  // initial + one reminder
}

TEST_CASE("llm annotator marks annotations missing after exhausting retries") {
  AnnotatorConfig cfg;
  cfg.max_retries = 1;
  ScriptedCompleter completer([](const std::string&) { return std::string("garbage"); });
  LlmAnnotator annotator(cfg, completer, TemplateSet::builtin());
  auto result = annotator.annotate_por(marker_taxonomy(), make_trace("t", "q", "m", "C", "x"));
  CHECK_FALSE(result.has_value());
}

TEST_CASE("llm annotator truncates over-long traces head and tail") {
  AnnotatorConfig cfg;
  cfg.max_trace_chars = 100;
  std::string captured;
  ScriptedCompleter completer([&](const std::string& prompt) {
    captured = prompt;
    return std::string("```\nuses MARKER_1 = 0\nuses MARKER_2 = 0\n```");
  });
  LlmAnnotator annotator(cfg, completer, TemplateSet::builtin());
  std::string head(80, 'H'), tail(80, 'T');
  annotator.annotate_por(marker_taxonomy(), make_trace("t", "q", "m", "C", head + tail));
  CHECK(contains(captured, "elided"));
  CHECK(contains(captured, "HHHH"));
  CHECK(contains(captured, "TTTT"));
  CHECK_FALSE(contains(captured, head + tail));
}

TEST_CASE("truncate_middle keeps a 60/40 head-tail split") {
  std::string text(1000, 'x');
  for (size_t i = 0; i < 500; ++i) text[i] = 'h';
  std::string cut = truncate_middle(text, 200);
  CHECK(cut.size() <= 200);
  CHECK(cut.substr(0, 5) == "hhhhh");
  CHECK(cut.back() == 'x');
  CHECK(truncate_middle("short", 200) == "short");
}

TEST_CASE("mock oracle is deterministic: same inputs, same outputs") {
  MockOracleAnnotator o1, o2;
  Taxonomy tax = marker_taxonomy();
  auto t = make_trace("t", "q", "m", "C", "MARKER_1. MARKER_1 and MARKER_2.");
  CHECK(*o1.annotate_bor(tax, t) == *o2.annotate_bor(tax, t));
  CHECK(*o1.annotate_bor(tax, t) == *o1.annotate_bor(tax, t));
}

TEST_CASE("sampling profiles cover the known model families") {
  auto qwen = profile_for_model("Qwen3-0.6B");
  REQUIRE(qwen.has_value());
  CHECK(qwen->temperature == 0.6);
  CHECK(qwen->top_p == 0.95);
  CHECK(qwen->top_k == 20);

  auto phi = profile_for_model("Phi-4-reasoning-plus");
  REQUIRE(phi.has_value());
  CHECK(phi->temperature == 0.8);

  auto qwq = profile_for_model("QwQ-32B");
  REQUIRE(qwq.has_value());
  CHECK(qwq->top_k == 20);

  CHECK_FALSE(profile_for_model("totally-new-model").has_value());
  for (const auto& p : default_sampling_profiles()) CHECK_FALSE(p.source.empty());
}
