#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lot/completion.hpp"
#include "lot/dataset.hpp"
#include "lot/encoding.hpp"
#include "lot/prompts.hpp"
#include "lot/taxonomy.hpp"

namespace lot {

class ParseError : public Error {
 public:
  using Error::Error;
};

/// Everything the training loop needs from the LLM side: feature proposals
/// and per-trace annotations. Annotation returns nullopt when the response
/// stays unparseable after retries; the caller skips the pair.
class Annotator {
 public:
  virtual ~Annotator() = default;

  virtual std::vector<Feature> propose_initial(const TracePair& pair) = 0;
  virtual std::vector<Feature> propose_additional(const Taxonomy& taxonomy,
                                                  const TracePair& failed_pair) = 0;
  virtual std::optional<std::vector<int>> annotate_por(const Taxonomy& taxonomy,
                                                       const ReasoningTrace& trace) = 0;
  virtual std::optional<std::vector<int>> annotate_bor(const Taxonomy& taxonomy,
                                                       const ReasoningTrace& trace) = 0;

  std::optional<std::vector<int>> annotate(const Taxonomy& taxonomy, EncodingKind kind,
                                           const ReasoningTrace& trace) {
    return kind == EncodingKind::por ? annotate_por(taxonomy, trace)
                                     : annotate_bor(taxonomy, trace);
  }
};

// Response parsers, shared by the live and mock paths.
//
// Proposals arrive as one fenced block of "FEATURE: <name> :: <definition>"
// lines; annotations as one fenced block of "<name> = <integer>" lines
// covering every taxonomy entry exactly once. Lines naming unknown features
// are ignored with a warning.
std::vector<Feature> parse_features(const std::string& response);
std::vector<int> parse_annotation(const std::string& response, const Taxonomy& taxonomy,
                                  EncodingKind kind);

/// Template-driven annotator over a Completer. Parse failures re-send the
/// prompt with a format reminder up to max_retries, then the item is marked
/// missing (annotation) or raised (proposal).
class LlmAnnotator : public Annotator {
 public:
  LlmAnnotator(AnnotatorConfig config, Completer& completer, TemplateSet templates,
               TrainLog* log = nullptr);

  std::vector<Feature> propose_initial(const TracePair& pair) override;
  std::vector<Feature> propose_additional(const Taxonomy& taxonomy,
                                          const TracePair& failed_pair) override;
  std::optional<std::vector<int>> annotate_por(const Taxonomy& taxonomy,
                                               const ReasoningTrace& trace) override;
  std::optional<std::vector<int>> annotate_bor(const Taxonomy& taxonomy,
                                               const ReasoningTrace& trace) override;

 private:
  std::string trace_for_prompt(const ReasoningTrace& trace) const;
  std::string completed(const std::string& op, const std::string& prompt);
  std::optional<std::vector<int>> annotate_kind(EncodingKind kind, const Taxonomy& taxonomy,
                                                const ReasoningTrace& trace);

  AnnotatorConfig config_;
  Completer& completer_;
  TemplateSet templates_;
  TrainLog* log_;
};

/// Deterministic lexical oracle: a feature is the use of a marker token
/// (default prefix "MARKER_"). Proposals emit one feature per marker that
/// differs between the two sides; PoR is substring presence; BoR counts the
/// sentences containing the marker. Prompts are rendered and responses
/// synthesized in the live wire format, then run through the shared
/// parsers, so the pipeline under test is the real one.
class MockOracleAnnotator : public Annotator {
 public:
  struct Options {
    std::string marker_prefix = "MARKER_";
  };

  MockOracleAnnotator();
  explicit MockOracleAnnotator(TrainLog* log);
  MockOracleAnnotator(Options options, TrainLog* log = nullptr);

  std::vector<Feature> propose_initial(const TracePair& pair) override;
  std::vector<Feature> propose_additional(const Taxonomy& taxonomy,
                                          const TracePair& failed_pair) override;
  std::optional<std::vector<int>> annotate_por(const Taxonomy& taxonomy,
                                               const ReasoningTrace& trace) override;
  std::optional<std::vector<int>> annotate_bor(const Taxonomy& taxonomy,
                                               const ReasoningTrace& trace) override;

  std::vector<std::string> markers_in(std::string_view text) const;
  std::optional<std::string> marker_of_feature(const Feature& feature) const;

 private:
  std::optional<std::vector<int>> annotate_kind(EncodingKind kind, const Taxonomy& taxonomy,
                                                const ReasoningTrace& trace);
  void log_call(const std::string& op, const std::string& prompt, const std::string& response);

  Options options_;
  TemplateSet templates_;
  TrainLog* log_;
};

/// Per-LRM sampling settings used when generating traces. Every profile
/// names where its numbers come from (report, repo, or default).
struct SamplingProfile {
  std::string model_pattern;  // exact id or family prefix
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 50;
  std::string source;
};

const std::vector<SamplingProfile>& default_sampling_profiles();
std::optional<SamplingProfile> profile_for_model(const std::string& model_id);

struct TraceGenRequest {
  Question question;
  std::string model_id;
  std::optional<SamplingProfile> profile_override;
  std::string template_name = "sample_math";
  std::string dataset_id = "GEN";
  std::string think_open = "<think>";
  std::string think_close = "</think>";
};

// Samples one reasoning trace from the subject model's endpoint using the
// model's sampling profile; the thinking segment is extracted between the
// configured delimiters.
ReasoningTrace generate_trace(const TraceGenRequest& request, const AnnotatorConfig& base_config,
                              const TemplateSet& templates, TrainLog* log = nullptr);

}  // namespace lot
