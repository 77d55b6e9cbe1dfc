#pragma once

#include <functional>
#include <optional>
#include <string>

#include "lot/trainlog.hpp"
#include "lot/util.hpp"

namespace lot {

/// Endpoint and sampling settings for every LLM call the pipeline makes.
struct AnnotatorConfig {
  std::string endpoint_url;  // e.g. http://localhost:8000/v1
  std::string api_key;
  std::string model_name;
  double temperature = 0.6;
  double top_p = 0.95;
  int top_k = 50;
  int max_retries = 3;
  double timeout_seconds = 120.0;
  size_t max_prompt_chars = 400000;  // hard cap checked by complete()
  size_t max_trace_chars = 24000;    // per-trace truncation budget
  bool truncate_traces = true;
  bool disable_thinking = false;  // subject-model calls run in non-thinking mode
  int backoff_ms = 500;           // exponential backoff base
  std::string template_dir;       // empty = built-in templates

  void validate() const;
  // fills endpoint_url / api_key / model_name from LOT_API_BASE,
  // LOT_API_KEY, LOT_MODEL when they are unset
  void apply_env();

  void save(const std::filesystem::path& path) const;
  // accepts either a bare object or a combined config file with an
  // "annotator" section
  static AnnotatorConfig load(const std::filesystem::path& path);
};

struct CompletionResult {
  std::string text;
  int attempts = 1;
};

class Completer {
 public:
  virtual ~Completer() = default;
  virtual CompletionResult complete(const std::string& prompt) = 0;
};

/// Chat-completions client: one user message in, first choice text out.
/// Retries transport errors and non-2xx statuses with exponential backoff.
class HttpCompleter : public Completer {
 public:
  explicit HttpCompleter(AnnotatorConfig config, TrainLog* log = nullptr);

  CompletionResult complete(const std::string& prompt) override;

  const AnnotatorConfig& config() const { return config_; }

 private:
  AnnotatorConfig config_;
  std::string scheme_host_;  // scheme://host[:port]
  std::string base_path_;    // path prefix before /chat/completions
  TrainLog* log_;
};

/// Deterministic in-process backend driven by a handler function.
class ScriptedCompleter : public Completer {
 public:
  using Handler = std::function<std::string(const std::string& prompt)>;

  explicit ScriptedCompleter(Handler handler) : handler_(std::move(handler)) {}

  // convenience: replay a fixed sequence of responses
  static ScriptedCompleter from_responses(std::vector<std::string> responses);

  CompletionResult complete(const std::string& prompt) override {
    ++calls_;
    return CompletionResult{handler_(prompt), 1};
  }

  size_t calls() const { return calls_; }

 private:
  Handler handler_;
  size_t calls_ = 0;
};

// Keeps the head 60% and tail 40% of the budget with an elision sentinel in
// between; identity when the text already fits.
std::string truncate_middle(std::string_view text, size_t budget);

std::optional<std::string> extract_boxed(std::string_view text);

}  // namespace lot
