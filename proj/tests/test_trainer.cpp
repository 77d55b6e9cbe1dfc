#include <doctest.h>

#include <json.hpp>

#include "helpers.hpp"
#include "lot/annotator.hpp"
#include "lot/dataset.hpp"
#include "lot/synthetic.hpp"
#include "lot/trainer.hpp"

using namespace lot;
using nlohmann::json;

namespace {

/// proposes a brand-new feature on every proposal call and annotates
/// everything as all-zeros, so classification keeps failing
class AdversarialAnnotator : public Annotator {
 public:
  std::vector<Feature> propose_initial(const TracePair&) override {
    Feature f;
    f.name = "seed feature";
    f.definition = "always proposed first";
    return {f};
  }
  std::vector<Feature> propose_additional(const Taxonomy&, const TracePair&) override {
    Feature f;
    f.name = "novel feature " + std::to_string(++counter_);
    f.definition = "never seen before";
    return {f};
  }
  std::optional<std::vector<int>> annotate_por(const Taxonomy& t, const ReasoningTrace&) override {
    return std::vector<int>(t.size(), 0);
  }
  std::optional<std::vector<int>> annotate_bor(const Taxonomy& t, const ReasoningTrace&) override {
    return std::vector<int>(t.size(), 0);
  }

 private:
  int counter_ = 0;
};

/// proposes once at initialization and never again
class SilentAnnotator : public Annotator {
 public:
  std::vector<Feature> propose_initial(const TracePair&) override {
    Feature f;
    f.name = "only feature";
    f.definition = "proposed at initialization";
    return {f};
  }
  std::vector<Feature> propose_additional(const Taxonomy&, const TracePair&) override {
    return {};
  }
  std::optional<std::vector<int>> annotate_por(const Taxonomy& t, const ReasoningTrace&) override {
    return std::vector<int>(t.size(), 0);
  }
  std::optional<std::vector<int>> annotate_bor(const Taxonomy& t, const ReasoningTrace&) override {
    return std::vector<int>(t.size(), 0);
  }
};

/// mock oracle that loses every annotation of traces containing POISON
class FlakyOracle : public MockOracleAnnotator {
 public:
  using MockOracleAnnotator::MockOracleAnnotator;
  std::optional<std::vector<int>> annotate_bor(const Taxonomy& t,
                                               const ReasoningTrace& trace) override {
    if (contains(trace.text, "POISON")) return std::nullopt;
    return MockOracleAnnotator::annotate_bor(t, trace);
  }
};

std::vector<TracePair> synthetic_pairs(size_t n, uint64_t seed, bool frequency_mode = false) {
  SyntheticCorpusSpec spec = frequency_mode ? frequency_spec(n, seed) : separable_spec(n, seed);
  Corpus corpus = anonymize(make_marker_corpus(spec), synthetic_codebook(spec));
  return pair_traces(corpus, spec.model_a, spec.model_b).pairs;
}

// a-side always carries MARKER_SEED so the lexical oracle can initialize
// from any pair
std::vector<TracePair> plain_pairs(size_t n) {
  std::vector<TracePair> pairs;
  for (size_t i = 0; i < n; ++i)
    pairs.push_back(lot::testing::make_pair("q" + std::to_string(i),
                                            "text alpha " + std::to_string(i) + " MARKER_SEED",
                                            "text beta " + std::to_string(i)));
  return pairs;
}

}  // namespace

TEST_CASE("check_convergence thresholds") {
  CHECK(check_convergence(20, 0, 20, 100));
  CHECK_FALSE(check_convergence(19, 50, 20, 100));
  CHECK(check_convergence(0, 100, 20, 100));
  CHECK_THROWS_AS(check_convergence(-1, 0, 20, 100), Error);
}

TEST_CASE("train_lot rejects an empty training set") {
  RunConfig cfg;
  MockOracleAnnotator oracle;
  TrainLog log;
  CHECK_THROWS_AS(train_lot({}, cfg, oracle, log), Error);
}

TEST_CASE("a silent-after-init annotator halts after exactly the convergence window") {
  RunConfig cfg;
  cfg.batch_size = 4;
  cfg.converge_window = 20;
  cfg.max_samples = 500;
  SilentAnnotator annotator;
  TrainLog log;
  TrainResult result = train_lot(plain_pairs(30), cfg, annotator, log);
  CHECK(result.stats.unchanged_at_stop == 20);
  CHECK(result.stats.samples_seen == 20);
  CHECK(result.stats.stop_reason == "stable");
  CHECK(result.taxonomy.size() == 1);
}

TEST_CASE("an adversarial annotator halts at exactly the sample budget") {
  RunConfig cfg;
  cfg.batch_size = 2;
  cfg.converge_window = 20;
  cfg.max_samples = 0;  // 2 * |train|
  AdversarialAnnotator annotator;
  TrainLog log;
  auto pairs = plain_pairs(8);
  TrainResult result = train_lot(pairs, cfg, annotator, log);
  CHECK(result.stats.samples_seen == 16);
  CHECK(result.stats.stop_reason == "sample_budget");
  // one novel feature per sampled pair plus the seed feature
  CHECK(result.taxonomy.size() == 17);
}

TEST_CASE("skipped pairs advance the sample counter but not the unchanged counter") {
  RunConfig cfg;
  cfg.batch_size = 2;
  cfg.converge_window = 10;  // larger than the pair count: every pair gets drawn
  cfg.max_samples = 100;
  auto pairs = plain_pairs(6);
  pairs.push_back(lot::testing::make_pair("qpoison", "POISON alpha MARKER_X", "POISON beta"));
  FlakyOracle oracle;
  TrainLog log;
  TrainResult result = train_lot(pairs, cfg, oracle, log);
  CHECK(result.stats.stop_reason == "stable");
  CHECK(result.stats.unchanged_at_stop == 10);
  CHECK(result.stats.skipped_pairs >= 1);
  // at least one skipped draw sits among the samples
  CHECK(result.stats.samples_seen >= 11);
  CHECK(result.stats.samples_seen == result.stats.iterations);
}

TEST_CASE("mock training run separates the planted-marker corpus") {
  auto pairs = synthetic_pairs(36, 9);
  PairSplit split = split_pairs(pairs, 0.8, 9);
  RunConfig cfg;
  cfg.encoding = EncodingKind::bor;
  cfg.batch_size = 10;
  cfg.seed = 9;
  MockOracleAnnotator oracle;
  TrainLog log;
  TrainResult result = train_lot(split.train, cfg, oracle, log);
  CHECK(result.stats.final_train_accuracy >= 0.9);
  CHECK(result.taxonomy.size() >= 2);

  TestReport report = evaluate_on_test(result.taxonomy, result.model, split.test, oracle);
  CHECK(report.trace_accuracy >= 0.9);
  CHECK(report.traces_excluded == 0);

  SUBCASE("the train log replays to the final taxonomy") {
    Taxonomy replayed = log.replay_taxonomy();
    CHECK(replayed == result.taxonomy);
  }
  SUBCASE("version sequence in the log is strictly increasing") {
    int last = 0;
    for (const auto& e : log.events_of_type("taxonomy_update")) {
      int v = json::parse(e.payload_json).at("version").get<int>();
      CHECK(v > last);
      last = v;
    }
  }
  SUBCASE("evaluation refuses a taxonomy grown past the model") {
    Feature extra;
    extra.name = "late feature";
    extra.definition = "added after training";
    Taxonomy grown = result.taxonomy;
    grown.merge({extra});
    CHECK_THROWS_AS(evaluate_on_test(grown, result.model, split.test, oracle), Error);
  }
  SUBCASE("empty test set is rejected") {
    CHECK_THROWS_AS(evaluate_on_test(result.taxonomy, result.model, {}, oracle), Error);
  }
}

TEST_CASE("identical seeds reproduce taxonomy and weights exactly") {
  auto pairs = synthetic_pairs(24, 4);
  RunConfig cfg;
  cfg.encoding = EncodingKind::bor;
  cfg.batch_size = 6;
  cfg.seed = 1234;

  MockOracleAnnotator oracle1, oracle2;
  TrainLog log1, log2;
  TrainResult r1 = train_lot(pairs, cfg, oracle1, log1);
  TrainResult r2 = train_lot(pairs, cfg, oracle2, log2);

  CHECK(r1.taxonomy == r2.taxonomy);
  CHECK(r1.model.weights == r2.model.weights);
  CHECK(r1.model.bias == r2.model.bias);
  CHECK(r1.stats.samples_seen == r2.stats.samples_seen);
  CHECK(r1.stats.taxonomy_updates == r2.stats.taxonomy_updates);
}

TEST_CASE("parallel batch annotation leaves results deterministic") {
  auto pairs = synthetic_pairs(20, 77);
  RunConfig serial_cfg;
  serial_cfg.batch_size = 8;
  serial_cfg.seed = 5;
  serial_cfg.parallelism = 1;
  RunConfig parallel_cfg = serial_cfg;
  parallel_cfg.parallelism = 4;

  MockOracleAnnotator o1, o2;
  TrainLog l1, l2;
  TrainResult serial = train_lot(pairs, serial_cfg, o1, l1);
  TrainResult parallel = train_lot(pairs, parallel_cfg, o2, l2);
  CHECK(serial.taxonomy == parallel.taxonomy);
  CHECK(serial.model.weights == parallel.model.weights);
}

TEST_CASE("run config round-trips and validates") {
  RunConfig cfg;
  cfg.encoding = EncodingKind::por;
  cfg.batch_size = 13;
  cfg.converge_window = 7;
  cfg.knn_k = 3;
  cfg.seed = 99;
  auto p = std::filesystem::temp_directory_path() / "lot_runconfig.json";
  cfg.save(p);
  RunConfig back = RunConfig::load(p);
  CHECK(back.encoding == EncodingKind::por);
  CHECK(back.batch_size == 13);
  CHECK(back.converge_window == 7);
  CHECK(back.knn_k == 3);
  CHECK(back.seed == 99);

  RunConfig bad;
  bad.batch_size = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
}
