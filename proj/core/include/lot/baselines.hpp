#pragma once

#include <string>
#include <vector>

#include "lot/annotator.hpp"
#include "lot/completion.hpp"
#include "lot/dataset.hpp"
#include "lot/prompts.hpp"
#include "lot/taxonomy.hpp"
#include "lot/trainlog.hpp"

namespace lot {

// The four human-defined reasoning behaviors used as the fixed-taxonomy
// baseline. It is an ordinary Taxonomy: the encoder and classifier paths
// consume it unchanged.
Taxonomy fixed_taxonomy();

/// One labeled example pair for few-shot classification.
struct ShotExample {
  std::string question_id;
  ReasoningTrace trace_a;
  ReasoningTrace trace_b;
};

struct PairPrediction {
  std::string label_a;
  std::string label_b;
};

/// Natural-language if/else rules maintained by the rule-update baseline.
struct DecisionRules {
  std::string rule_text;
  int revision = 0;
};

class BudgetError : public Error {
 public:
  using Error::Error;
};

/// Prompt-level baselines that classify a pair directly from the LLM's
/// answer instead of an encoding.
class BaselineClient {
 public:
  BaselineClient(AnnotatorConfig config, Completer& completer, TemplateSet templates,
                 TrainLog* log = nullptr);

  // Prompt embeds 2*|shots| labeled traces, then the query pair. Throws
  // BudgetError when the assembled prompt exceeds max_prompt_chars.
  PairPrediction fsp_classify(const std::vector<ShotExample>& shots, const TracePair& query);

  // Iterates seeded batches; each round sends the current rules plus the
  // batch and replaces the rules with the response. Unparseable updates
  // keep the previous revision.
  DecisionRules vml_train(const std::vector<TracePair>& train_pairs, int batch_size,
                          uint64_t seed = 0);

  PairPrediction vml_classify(const DecisionRules& rules, const TracePair& pair);

 private:
  std::string completed(const std::string& op, const std::string& prompt);
  PairPrediction parse_pair_answer(const std::string& response, const std::string& codename_a,
                                   const std::string& codename_b) const;

  AnnotatorConfig config_;
  Completer& completer_;
  TemplateSet templates_;
  TrainLog* log_;
};

// Seeded shot selection from the training pairs, never drawing the query's
// question.
std::vector<ShotExample> select_shots(const std::vector<TracePair>& train_pairs, size_t n_shots,
                                      const std::string& query_question_id, uint64_t seed);

/// Deterministic backend for the prompt-level baselines. It reads the
/// labeled example blocks (or the decision rules) out of the prompt and
/// labels the unlabeled reasonings by marker-token overlap; rule updates
/// emit one "if ... predict ..." line per discriminating marker.
class MockComparisonCompleter : public Completer {
 public:
  explicit MockComparisonCompleter(std::string marker_prefix = "MARKER_")
      : marker_prefix_(std::move(marker_prefix)) {}

  CompletionResult complete(const std::string& prompt) override;

 private:
  std::string marker_prefix_;
};

}  // namespace lot
