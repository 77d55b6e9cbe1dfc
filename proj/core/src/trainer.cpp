#include "lot/trainer.hpp"

#include <atomic>
#include <set>
#include <thread>

#include <json.hpp>

#include "lot/util.hpp"

namespace lot {

using nlohmann::json;

void RunConfig::validate() const {
  if (batch_size < 1) throw Error("run config: batch_size must be >= 1");
  if (converge_window < 1) throw Error("run config: converge_window must be >= 1");
  if (max_samples < 0) throw Error("run config: max_samples must be >= 0");
  if (knn_k < 1) throw Error("run config: knn_k must be >= 1");
  if (parallelism < 1) throw Error("run config: parallelism must be >= 1");
}

void RunConfig::save(const std::filesystem::path& path) const {
  json j;
  j["encoding"] = to_string(encoding);
  j["batch_size"] = batch_size;
  j["converge_window"] = converge_window;
  j["max_samples"] = max_samples;
  j["knn_k"] = knn_k;
  j["classifier"] = {{"l2_strength", classifier.l2_strength},
                     {"max_iterations", classifier.max_iterations},
                     {"tolerance", classifier.tolerance}};
  j["seed"] = seed;
  j["parallelism"] = parallelism;
  write_file(path, j.dump(2) + "\n");
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed run config " + path.string() + ": " + e.what());
  }
  RunConfig c;
  if (j.contains("run")) j = j.at("run");  // accept a combined config file
  if (j.contains("encoding")) c.encoding = encoding_kind_from_string(j.at("encoding").get<std::string>());
  c.batch_size = j.value("batch_size", c.batch_size);
  c.converge_window = j.value("converge_window", c.converge_window);
  c.max_samples = j.value("max_samples", c.max_samples);
  c.knn_k = j.value("knn_k", c.knn_k);
  if (j.contains("classifier")) {
    const auto& jc = j.at("classifier");
    c.classifier.l2_strength = jc.value("l2_strength", c.classifier.l2_strength);
    c.classifier.max_iterations = jc.value("max_iterations", c.classifier.max_iterations);
    c.classifier.tolerance = jc.value("tolerance", c.classifier.tolerance);
  }
  c.seed = j.value("seed", c.seed);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.validate();
  return c;
}

bool check_convergence(int unchanged_count, int samples_seen, int converge_window,
                       int max_samples) {
  if (unchanged_count < 0 || samples_seen < 0)
    throw Error("check_convergence: counters must be non-negative");
  return unchanged_count >= converge_window || samples_seen >= max_samples;
}

namespace {

void parallel_for(size_t count, int parallelism, const std::function<void(size_t)>& fn) {
  if (parallelism <= 1 || count <= 1) {
    for (size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  size_t n_threads = std::min<size_t>(static_cast<size_t>(parallelism), count);
  std::vector<std::thread> threads;
  for (size_t t = 0; t < n_threads; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// deterministic cycle over pair indices; each epoch is a fresh seeded shuffle
class PairCycle {
 public:
  PairCycle(size_t n, Rng rng) : n_(n), rng_(std::move(rng)) {}

  // first epoch can be pinned externally (used to defer the init pair)
  void seed_epoch(std::vector<size_t> order) { queue_ = std::move(order); }

  size_t next() {
    if (queue_.empty()) {
      std::vector<size_t> order(n_);
      for (size_t i = 0; i < n_; ++i) order[i] = i;
      rng_.shuffle(order);
      queue_ = std::move(order);
    }
    size_t idx = queue_.front();
    queue_.erase(queue_.begin());
    return idx;
  }

 private:
  size_t n_;
  Rng rng_;
  std::vector<size_t> queue_;
};

Encoding make_row(const ReasoningTrace& trace, const Taxonomy& taxonomy, EncodingKind kind,
                  std::vector<int> values) {
  Encoding e;
  e.trace_id = trace.id;
  e.taxonomy_version = taxonomy.version();
  e.kind = kind;
  e.values = std::move(values);
  e.label = trace.label();
  return e;
}

json feature_json(const Feature& f) {
  json jf{{"id", f.feature_id},
          {"name", f.name},
          {"definition", f.definition},
          {"origin_iteration", f.origin_iteration}};
  if (f.origin_pair) jf["origin_pair"] = *f.origin_pair;
  return jf;
}

void log_taxonomy_update(TrainLog& log, const Taxonomy& taxonomy, size_t added_count,
                         size_t proposed_count) {
  json added = json::array();
  const auto& feats = taxonomy.features();
  for (size_t i = feats.size() - added_count; i < feats.size(); ++i)
    added.push_back(feature_json(feats[i]));
  json data{{"version", taxonomy.version()},
            {"width", taxonomy.size()},
            {"accepted", added_count},
            {"proposed", proposed_count},
            {"added", std::move(added)}};
  log.append(TrainEvent{"taxonomy_update", data.dump()});
}

DenseMatrix impute_for_training(const EncodingMatrix& matrix, const RunConfig& config) {
  return matrix.kind() == EncodingKind::por ? matrix.impute_zero()
                                            : matrix.impute_knn(config.knn_k);
}

std::vector<double> as_doubles(const std::vector<int>& values) {
  return std::vector<double>(values.begin(), values.end());
}

}  // namespace

TrainResult train_lot(const std::vector<TracePair>& train_pairs, const RunConfig& config,
                      Annotator& annotator, TrainLog& log) {
  config.validate();
  if (train_pairs.empty()) throw Error("train_lot: need at least one training pair");
  std::set<std::string> labels;
  for (const auto& p : train_pairs) {
    labels.insert(p.trace_a.label());
    labels.insert(p.trace_b.label());
  }
  if (labels.size() != 2)
    throw Error("train_lot: pairs must span exactly 2 codenames, got " +
                std::to_string(labels.size()));

  const size_t n = train_pairs.size();
  const int max_samples = config.max_samples > 0 ? config.max_samples : 2 * static_cast<int>(n);
  const EncodingKind kind = config.encoding;

  Rng root(config.seed);
  Rng eval_rng = root.fork();
  Rng batch_rng = root.fork();

  std::vector<size_t> first_order(n);
  for (size_t i = 0; i < n; ++i) first_order[i] = i;
  eval_rng.shuffle(first_order);
  const size_t init_idx = first_order.front();

  // the init pair goes to the back of the first epoch so every other pair is
  // seen once before it re-enters the stream
  PairCycle eval_cycle(n, eval_rng.fork());
  {
    std::vector<size_t> epoch(first_order.begin() + 1, first_order.end());
    epoch.push_back(init_idx);
    eval_cycle.seed_epoch(std::move(epoch));
  }
  PairCycle batch_cycle(n, batch_rng.fork());

  TrainStats stats;

  // taxonomy initialization from a single pair
  const TracePair& init_pair = train_pairs[init_idx];
  std::vector<Feature> initial = annotator.propose_initial(init_pair);
  for (auto& f : initial) {
    f.origin_iteration = 0;
    f.origin_pair = init_pair.question_id;
  }
  if (initial.empty()) throw Error("train_lot: initialization yielded an empty taxonomy");
  Taxonomy taxonomy = Taxonomy::with_features(initial);
  log_taxonomy_update(log, taxonomy, taxonomy.size(), initial.size());
  ++stats.taxonomy_updates;

  EncodingMatrix matrix(kind, taxonomy.version(), taxonomy.size());

  const auto annotate_batch = [&] {
    std::vector<size_t> picks(static_cast<size_t>(config.batch_size));
    for (auto& p : picks) p = batch_cycle.next();
    struct SideResult {
      std::optional<std::vector<int>> a, b;
    };
    std::vector<SideResult> results(picks.size());
    parallel_for(picks.size(), config.parallelism, [&](size_t i) {
      const TracePair& pair = train_pairs[picks[i]];
      results[i].a = annotator.annotate(taxonomy, kind, pair.trace_a);
      results[i].b = annotator.annotate(taxonomy, kind, pair.trace_b);
    });
    for (size_t i = 0; i < picks.size(); ++i) {
      const TracePair& pair = train_pairs[picks[i]];
      if (!results[i].a || !results[i].b) {
        ++stats.skipped_pairs;
        log.append(TrainEvent{"skip", json{{"question_id", pair.question_id},
                                           {"reason", "batch annotation missing"}}
                                          .dump()});
        continue;
      }
      matrix.append(make_row(pair.trace_a, taxonomy, kind, std::move(*results[i].a)));
      matrix.append(make_row(pair.trace_b, taxonomy, kind, std::move(*results[i].b)));
    }
  };

  annotate_batch();

  ClassifierModel model;
  bool have_model = false;
  bool dirty = true;
  int unchanged = 0;

  const auto refit = [&] {
    DenseMatrix dense = impute_for_training(matrix, config);
    model = fit_logistic(dense, config.classifier, config.seed, have_model ? &model : nullptr);
    have_model = true;
    dirty = false;
    stats.final_train_accuracy = evaluate(model, dense).accuracy;
    log.append(TrainEvent{"checkpoint", json{{"iteration", stats.iterations},
                                             {"rows", matrix.rows()},
                                             {"width", matrix.width()},
                                             {"version", taxonomy.version()},
                                             {"train_accuracy", stats.final_train_accuracy}}
                                            .dump()});
  };

  while (!check_convergence(unchanged, stats.samples_seen, config.converge_window, max_samples)) {
    if (dirty) refit();
    const size_t idx = eval_cycle.next();
    const TracePair& pair = train_pairs[idx];
    ++stats.samples_seen;
    ++stats.iterations;

    auto enc_a = annotator.annotate(taxonomy, kind, pair.trace_a);
    auto enc_b = annotator.annotate(taxonomy, kind, pair.trace_b);
    if (!enc_a || !enc_b) {
      ++stats.skipped_pairs;
      log.append(TrainEvent{"skip", json{{"question_id", pair.question_id},
                                         {"reason", "annotation missing"}}
                                        .dump()});
      continue;  // skipped pairs do not advance the unchanged counter
    }

    Prediction pred_a = predict(model, as_doubles(*enc_a));
    Prediction pred_b = predict(model, as_doubles(*enc_b));
    const bool correct =
        pred_a.label == pair.trace_a.label() && pred_b.label == pair.trace_b.label();

    if (correct) {
      matrix.append(make_row(pair.trace_a, taxonomy, kind, std::move(*enc_a)));
      matrix.append(make_row(pair.trace_b, taxonomy, kind, std::move(*enc_b)));
      dirty = true;
      ++unchanged;
      continue;
    }

    std::vector<Feature> proposed = annotator.propose_additional(taxonomy, pair);
    for (auto& f : proposed) {
      f.origin_iteration = stats.iterations;
      f.origin_pair = pair.question_id;
    }
    int newly_accepted = taxonomy.merge(proposed);
    if (newly_accepted > 0) {
      log_taxonomy_update(log, taxonomy, static_cast<size_t>(newly_accepted), proposed.size());
      ++stats.taxonomy_updates;
      unchanged = 0;
      matrix.expand(taxonomy.version(), taxonomy.size());
      annotate_batch();
      dirty = true;
    } else {
      ++unchanged;  // only duplicates proposed: the taxonomy did not change
    }
  }

  stats.unchanged_at_stop = unchanged;
  stats.stop_reason = unchanged >= config.converge_window ? "stable" : "sample_budget";
  log.append(TrainEvent{"convergence", json{{"unchanged", unchanged},
                                            {"samples_seen", stats.samples_seen},
                                            {"max_samples", max_samples},
                                            {"converge_window", config.converge_window},
                                            {"reason", stats.stop_reason}}
                                           .dump()});

  refit();  // final model at the final taxonomy version
  return TrainResult{std::move(taxonomy), std::move(model), std::move(matrix), std::move(stats)};
}

TestReport evaluate_on_test(const Taxonomy& taxonomy, const ClassifierModel& model,
                            const std::vector<TracePair>& test_pairs, Annotator& annotator,
                            TrainLog* log, EncodingMatrix* out_encodings, int parallelism) {
  if (test_pairs.empty()) throw Error("evaluate_on_test: empty test set");
  if (taxonomy.version() != model.trained_version)
    throw Error("evaluate_on_test: taxonomy version " + std::to_string(taxonomy.version()) +
                " differs from the model's trained version " +
                std::to_string(model.trained_version) +
                "; evaluation must use the classifier's trained taxonomy");
  if (taxonomy.size() != model.width())
    throw Error("evaluate_on_test: taxonomy width does not match the model");

  struct SideResult {
    std::optional<std::vector<int>> a, b;
  };
  std::vector<SideResult> results(test_pairs.size());
  parallel_for(test_pairs.size(), parallelism, [&](size_t i) {
    results[i].a = annotator.annotate(taxonomy, model.kind, test_pairs[i].trace_a);
    results[i].b = annotator.annotate(taxonomy, model.kind, test_pairs[i].trace_b);
  });

  EncodingMatrix encodings(model.kind, taxonomy.version(), taxonomy.size());
  TestReport report;
  size_t pairs_correct = 0;

  const auto eval_side = [&](const ReasoningTrace& trace, std::optional<std::vector<int>>& values,
                             bool& side_correct) -> bool {
    if (!values) {
      ++report.traces_excluded;
      if (log)
        log->append(TrainEvent{"skip", nlohmann::json{{"trace_id", trace.id},
                                                      {"reason", "test annotation missing"}}
                                           .dump()});
      return false;
    }
    Prediction pred = predict(model, as_doubles(*values));
    const bool is_pos = trace.label() == model.positive_label;
    const bool said_pos = pred.label == model.positive_label;
    side_correct = pred.label == trace.label();
    if (is_pos && said_pos) ++report.confusion.true_positive;
    if (is_pos && !said_pos) ++report.confusion.false_negative;
    if (!is_pos && said_pos) ++report.confusion.false_positive;
    if (!is_pos && !said_pos) ++report.confusion.true_negative;
    ++report.traces_evaluated;
    Encoding row;
    row.trace_id = trace.id;
    row.taxonomy_version = taxonomy.version();
    row.kind = model.kind;
    row.values = std::move(*values);
    row.label = trace.label();
    encodings.append(std::move(row));
    return true;
  };

  for (size_t i = 0; i < test_pairs.size(); ++i) {
    bool a_correct = false, b_correct = false;
    const bool a_ok = eval_side(test_pairs[i].trace_a, results[i].a, a_correct);
    const bool b_ok = eval_side(test_pairs[i].trace_b, results[i].b, b_correct);
    if (a_ok && b_ok) {
      ++report.pairs_evaluated;
      if (a_correct && b_correct) ++pairs_correct;
    }
  }

  if (report.traces_evaluated == 0)
    throw Error("evaluate_on_test: every test annotation is missing");
  if (!encodings.fully_observed())
    throw Error("evaluate_on_test: test encodings must be fully observed");

  report.trace_accuracy =
      static_cast<double>(report.confusion.true_positive + report.confusion.true_negative) /
      static_cast<double>(report.traces_evaluated);
  report.pair_accuracy = report.pairs_evaluated == 0
                             ? 0.0
                             : static_cast<double>(pairs_correct) /
                                   static_cast<double>(report.pairs_evaluated);
  if (out_encodings) *out_encodings = std::move(encodings);
  return report;
}

void TestReport::save(const std::filesystem::path& path, const std::string& method,
                      EncodingKind kind) const {
  json j;
  j["method"] = method;
  j["encoding"] = to_string(kind);
  j["trace_accuracy"] = trace_accuracy;
  j["pair_accuracy"] = pair_accuracy;
  j["confusion"] = {{"true_positive", confusion.true_positive},
                    {"true_negative", confusion.true_negative},
                    {"false_positive", confusion.false_positive},
                    {"false_negative", confusion.false_negative}};
  j["traces_evaluated"] = traces_evaluated;
  j["pairs_evaluated"] = pairs_evaluated;
  j["traces_excluded"] = traces_excluded;
  write_file(path, j.dump(2) + "\n");
}

}  // namespace lot
