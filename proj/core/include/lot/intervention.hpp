#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lot/analysis.hpp"
#include "lot/completion.hpp"
#include "lot/dataset.hpp"
#include "lot/prompts.hpp"
#include "lot/taxonomy.hpp"
#include "lot/trainlog.hpp"

namespace lot {

/// A reasoning trace condensed to ordered steps. paragraph_map ties each
/// step to its source paragraph; inserted steps map to nothing.
struct StepSummary {
  std::string source_trace_id;
  std::vector<std::string> steps;
  std::vector<std::optional<size_t>> paragraph_map;
};

struct PlanEntry {
  std::string feature;
  std::string directive;
};

/// Which behaviors to add or remove when editing a summary, derived from
/// odds-ratio findings.
struct InterventionPlan {
  std::vector<PlanEntry> add;
  std::vector<std::string> remove;
  double or_high = 1.5;
  double or_low = 0.67;

  bool empty() const { return add.empty() && remove.empty(); }
  void save(const std::filesystem::path& path) const;
  static InterventionPlan load(const std::filesystem::path& path);
};

// Features with OR >= or_high go to add, OR <= or_low to remove; undefined
// odds are untouched. Definitions for directives come from the taxonomy
// when provided.
InterventionPlan derive_plan(const FeatureReport& report, double or_high = 1.5,
                             double or_low = 0.67, const Taxonomy* taxonomy = nullptr);

/// The subject model, driven in non-thinking mode. One method per pipeline
/// stage; each maps to a single completion for the LLM-backed client.
class ReasoningClient {
 public:
  virtual ~ReasoningClient() = default;

  struct NumberedParagraph {
    size_t index;
    std::string text;
  };
  struct NumberedStep {
    size_t paragraph_index;
    std::string text;
  };

  virtual std::vector<NumberedStep> summarize_chunk(
      const std::string& question, const std::vector<NumberedParagraph>& paragraphs) = 0;
  virtual std::vector<std::string> edit_steps(const std::string& question,
                                              const std::vector<std::string>& steps,
                                              const InterventionPlan& plan) = 0;
  virtual std::string expand_step(const std::string& question, const std::string& prior,
                                  const std::string& step) = 0;
  virtual std::string answer(const std::string& question, const std::string& reasoning) = 0;
};

class LlmReasoningClient : public ReasoningClient {
 public:
  LlmReasoningClient(AnnotatorConfig config, Completer& completer, TemplateSet templates,
                     TrainLog* log = nullptr);

  std::vector<NumberedStep> summarize_chunk(
      const std::string& question, const std::vector<NumberedParagraph>& paragraphs) override;
  std::vector<std::string> edit_steps(const std::string& question,
                                      const std::vector<std::string>& steps,
                                      const InterventionPlan& plan) override;
  std::string expand_step(const std::string& question, const std::string& prior,
                          const std::string& step) override;
  std::string answer(const std::string& question, const std::string& reasoning) override;

 private:
  std::string completed(const std::string& op, const std::string& prompt);
  template <typename Parse>
  auto with_format_retries(const std::string& op, const std::string& base_prompt, Parse parse);

  AnnotatorConfig config_;
  Completer& completer_;
  TemplateSet templates_;
  TrainLog* log_;
};

/// Deterministic stand-in for the subject model: one step per paragraph,
/// pattern-based editing, and answers that are wrong exactly when the
/// reasoning carries the error token.
class MockReasoningClient : public ReasoningClient {
 public:
  struct Options {
    std::string error_token = "BLUNDER";
  };

  MockReasoningClient() = default;
  explicit MockReasoningClient(Options options) : options_(std::move(options)) {}

  std::vector<NumberedStep> summarize_chunk(
      const std::string& question, const std::vector<NumberedParagraph>& paragraphs) override;
  std::vector<std::string> edit_steps(const std::string& question,
                                      const std::vector<std::string>& steps,
                                      const InterventionPlan& plan) override;
  std::string expand_step(const std::string& question, const std::string& prior,
                          const std::string& step) override;
  std::string answer(const std::string& question, const std::string& reasoning) override;

 private:
  Options options_;
};

// Splits the trace into blank-line paragraphs and summarizes them in chunks
// that fit chunk_char_budget; the whole trace is never edited in one piece.
StepSummary summarize(const ReasoningTrace& trace, const std::string& question,
                      ReasoningClient& client, size_t chunk_char_budget = 8000);

struct EditDiff {
  std::vector<std::string> removed;
  std::vector<std::string> added;
};

// Identity when the plan is empty (no client call). Steps that reappear
// verbatim keep their paragraph mapping; new steps map to nothing.
StepSummary edit_summary(const StepSummary& summary, const InterventionPlan& plan,
                         const std::string& question, ReasoningClient& client,
                         EditDiff* diff = nullptr);

// Expands steps one at a time, each conditioned on the question and all
// previously expanded text; returns the concatenation.
std::string expand(const StepSummary& summary, const std::string& question,
                   ReasoningClient& client);

struct ArmResult {
  std::string arm;  // original | control | modified
  std::vector<double> per_rep_accuracy;
  double mean_accuracy = 0.0;
  double stdev_accuracy = 0.0;
  size_t graded_traces = 0;
};

struct InterventionOutcome {
  std::vector<ArmResult> arms;
  size_t traces_excluded = 0;  // no question or grading key
  size_t repetitions = 0;
};

// Runs all three arms over the traces for `repetitions` seeded repetitions.
// The control arm re-expands the unmodified summary; both arms share the
// same summary within a repetition. Artifacts (arm trace files and one
// audit record per trace and repetition) go under out_dir when given.
InterventionOutcome run_intervention(const Corpus& traces, const std::vector<Question>& questions,
                                     const InterventionPlan& plan, ReasoningClient& client,
                                     int repetitions = 10, uint64_t seed = 0,
                                     const std::filesystem::path& out_dir = {},
                                     size_t chunk_char_budget = 8000);

}  // namespace lot
