#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lot/annotator.hpp"
#include "lot/classifier.hpp"
#include "lot/dataset.hpp"
#include "lot/encoding.hpp"
#include "lot/taxonomy.hpp"
#include "lot/trainlog.hpp"

namespace lot {

/// All loop hyperparameters for one training run.
struct RunConfig {
  EncodingKind encoding = EncodingKind::bor;
  int batch_size = 40;
  int converge_window = 20;  // halt after this many consecutive unchanged iterations
  int max_samples = 0;       // halt after this many sampled pairs; 0 = 2 * |train|
  int knn_k = 5;
  ClassifierHyperparams classifier;
  uint64_t seed = 0;
  int parallelism = 1;

  void validate() const;
  void save(const std::filesystem::path& path) const;
  static RunConfig load(const std::filesystem::path& path);
};

// true iff the taxonomy has been stable long enough or the sample budget is
// exhausted
bool check_convergence(int unchanged_count, int samples_seen, int converge_window,
                       int max_samples);

struct TrainStats {
  int samples_seen = 0;
  int unchanged_at_stop = 0;
  int iterations = 0;
  int taxonomy_updates = 0;
  int skipped_pairs = 0;
  double final_train_accuracy = 0.0;
  std::string stop_reason;  // "stable" or "sample_budget"
};

struct TrainResult {
  Taxonomy taxonomy;
  ClassifierModel model;
  EncodingMatrix matrix;
  TrainStats stats;
};

// Runs the iterative loop: initialize the taxonomy from one pair, annotate
// batches under the current taxonomy, refit the classifier on the imputed
// matrix, and on every misclassified training pair ask for additional
// features; accepted features trigger a fresh batch at the new version.
TrainResult train_lot(const std::vector<TracePair>& train_pairs, const RunConfig& config,
                      Annotator& annotator, TrainLog& log);

struct TestReport {
  double trace_accuracy = 0.0;
  double pair_accuracy = 0.0;
  ConfusionCounts confusion;
  size_t traces_evaluated = 0;
  size_t pairs_evaluated = 0;
  size_t traces_excluded = 0;

  void save(const std::filesystem::path& path, const std::string& method,
            EncodingKind kind) const;
};

// Fresh, fully observed encodings at the classifier's trained version; no
// imputation on the evaluation path. The encodings are returned for the
// analysis stage via out_encodings.
TestReport evaluate_on_test(const Taxonomy& taxonomy, const ClassifierModel& model,
                            const std::vector<TracePair>& test_pairs, Annotator& annotator,
                            TrainLog* log = nullptr, EncodingMatrix* out_encodings = nullptr,
                            int parallelism = 1);

}  // namespace lot
