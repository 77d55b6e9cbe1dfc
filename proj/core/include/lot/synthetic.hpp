#pragma once

#include <string>
#include <vector>

#include "lot/dataset.hpp"

namespace lot {

/// Two pseudo-models whose traces plant marker tokens at configurable
/// rates; the lexical mock oracle can recover exactly these markers, which
/// makes ground-truth separability known in advance.
struct SyntheticCorpusSpec {
  size_t n_questions = 200;
  std::string model_a = "aurora-lrm";
  std::string model_b = "basalt-lrm";
  std::vector<std::string> markers;
  std::vector<double> presence_a;  // per-marker probability a trace mentions it
  std::vector<double> presence_b;
  std::vector<double> count_mean_a;  // sentences containing the marker when present
  std::vector<double> count_mean_b;
  bool planted_correctness = false;
  double correct_if_first_marker = 0.85;  // P(correct | markers[0] present)
  double correct_otherwise = 0.30;
  uint64_t seed = 0;
  std::string dataset_id = "SYNTH";

  void validate() const;
};

Corpus make_marker_corpus(const SyntheticCorpusSpec& spec);

// Presence rates differ strongly between the models; both presence and
// frequency carry signal.
SyntheticCorpusSpec separable_spec(size_t n_questions, uint64_t seed);

// Every trace of both models mentions every marker; only the mention
// frequency differs, so binary encodings carry no signal.
SyntheticCorpusSpec frequency_spec(size_t n_questions, uint64_t seed);

Codebook synthetic_codebook(const SyntheticCorpusSpec& spec);

/// Graded single-model set for the intervention pipeline: some traces carry
/// an error-token paragraph that derails the mock subject model.
struct InterventionSetSpec {
  size_t n_traces = 20;
  std::string model_id = "aurora-lrm";
  double error_fraction = 0.5;
  std::string error_token = "BLUNDER";
  uint64_t seed = 0;
  std::string dataset_id = "SYNTH-INT";
};

struct InterventionSet {
  Corpus traces;
  std::vector<Question> questions;
};

InterventionSet make_intervention_set(const InterventionSetSpec& spec);

}  // namespace lot
