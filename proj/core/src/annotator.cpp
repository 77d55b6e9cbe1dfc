#include "lot/annotator.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lot {

using nlohmann::json;

namespace {

// content of the first ``` ... ``` block, split into trimmed non-empty lines
std::optional<std::vector<std::string>> fenced_lines(const std::string& response) {
  auto block = fenced_block(response);
  if (!block) return std::nullopt;
  std::vector<std::string> content;
  for (const auto& line : split_lines(*block)) {
    std::string t = trim(line);
    if (!t.empty()) content.push_back(std::move(t));
  }
  return content;
}

int parse_non_negative_int(const std::string& s, const std::string& what) {
  if (s.empty()) throw ParseError(what + ": empty value");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw ParseError(what + ": \"" + s + "\" is not a non-negative integer");
  try {
    return std::stoi(s);
  } catch (const std::exception&) {
    throw ParseError(what + ": value \"" + s + "\" out of range");
  }
}

void log_event(TrainLog* log, const std::string& op, const std::string& prompt,
               const std::string& response, int attempts, long latency_ms) {
  if (!log) return;
  json data{{"op", op},
            {"prompt", prompt},
            {"response", response},
            {"prompt_hash", hex64(fnv1a(prompt))},
            {"response_hash", hex64(fnv1a(response))},
            {"attempts", attempts},
            {"latency_ms", latency_ms}};
  log->append(TrainEvent{"annotator_call", data.dump()});
}

void require_anonymized(const TracePair& pair) {
  if (!pair.trace_a.codename || !pair.trace_b.codename)
    throw Error("pair " + pair.question_id + " is not anonymized; codenames are required");
}

}  // namespace

std::vector<Feature> parse_features(const std::string& response) {
  auto lines = fenced_lines(response);
  if (!lines) throw ParseError("no fenced feature block in response");
  std::vector<Feature> features;
  for (const auto& line : *lines) {
    if (line.rfind("FEATURE:", 0) != 0)
      throw ParseError("feature line must start with \"FEATURE:\": " + line);
    std::string rest = trim(line.substr(8));
    auto sep = rest.find("::");
    if (sep == std::string::npos)
      throw ParseError("feature line is missing the \"::\" delimiter: " + line);
    Feature f;
    f.name = trim(rest.substr(0, sep));
    f.definition = trim(rest.substr(sep + 2));
    if (f.name.empty() || f.definition.empty())
      throw ParseError("feature line has an empty name or definition: " + line);
    features.push_back(std::move(f));
  }
  return features;
}

std::vector<int> parse_annotation(const std::string& response, const Taxonomy& taxonomy,
                                  EncodingKind kind) {
  auto lines = fenced_lines(response);
  if (!lines) throw ParseError("no fenced annotation block in response");
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < taxonomy.size(); ++i)
    index[Taxonomy::normalize_name(taxonomy.feature(i).name)] = i;

  std::vector<int> values(taxonomy.size(), -1);
  for (const auto& line : *lines) {
    auto sep = line.rfind(" = ");
    if (sep == std::string::npos)
      throw ParseError("annotation line must look like \"<name> = <integer>\": " + line);
    std::string name = Taxonomy::normalize_name(line.substr(0, sep));
    auto it = index.find(name);
    if (it == index.end()) {
      warn("annotation names unknown feature \"" + trim(line.substr(0, sep)) + "\"; ignored");
      continue;
    }
    if (values[it->second] != -1)
      throw ParseError("feature \"" + taxonomy.feature(it->second).name + "\" annotated twice");
    int v = parse_non_negative_int(trim(line.substr(sep + 3)), "annotation");
    if (kind == EncodingKind::por && v > 1)
      throw ParseError("PoR value must be 0 or 1, got " + std::to_string(v));
    values[it->second] = v;
  }
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i] == -1)
      throw ParseError("feature \"" + taxonomy.feature(i).name + "\" missing from annotation");
  return values;
}

LlmAnnotator::LlmAnnotator(AnnotatorConfig config, Completer& completer, TemplateSet templates,
                           TrainLog* log)
    : config_(std::move(config)), completer_(completer), templates_(std::move(templates)), log_(log) {
  config_.validate();
}

std::string LlmAnnotator::trace_for_prompt(const ReasoningTrace& trace) const {
  if (!config_.truncate_traces) return trace.text;
  return truncate_middle(trace.text, config_.max_trace_chars);
}

std::string LlmAnnotator::completed(const std::string& op, const std::string& prompt) {
  auto started = std::chrono::steady_clock::now();
  CompletionResult res = completer_.complete(prompt);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                std::chrono::steady_clock::now() - started)
                .count();
  log_event(log_, op, prompt, res.text, res.attempts, ms);
  return res.text;
}

namespace {
const char* kFeatureReminder =
    "FORMAT REMINDER: output exactly one fenced block whose lines each read "
    "\"FEATURE: <name> :: <definition>\".";
const char* kAnnotationReminder =
    "FORMAT REMINDER: output exactly one fenced block with one line \"<behavior name> = "
    "<integer>\" for every behavior in the taxonomy, in order.";
}  // namespace

std::vector<Feature> LlmAnnotator::propose_initial(const TracePair& pair) {
  require_anonymized(pair);
  const std::string base = templates_.render("propose_initial",
                                             {{"codename_a", *pair.trace_a.codename},
                                              {"codename_b", *pair.trace_b.codename},
                                              {"trace_a", trace_for_prompt(pair.trace_a)},
                                              {"trace_b", trace_for_prompt(pair.trace_b)}});
  std::string prompt = base;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed("propose_initial", prompt);
    try {
      auto features = parse_features(text);
      if (features.empty())
        throw Error("empty feature list: the annotator found no distinguishing behavior for pair " +
                    pair.question_id);
      return features;
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries)
        throw ParseError("propose_initial unparseable after " + std::to_string(attempt + 1) +
                         " attempt(s): " + e.what());
      prompt = base + "\n\n" + kFeatureReminder;
    }
  }
}

std::vector<Feature> LlmAnnotator::propose_additional(const Taxonomy& taxonomy,
                                                      const TracePair& failed_pair) {
  require_anonymized(failed_pair);
  const std::string base = templates_.render("propose_additional",
                                             {{"taxonomy", format_taxonomy(taxonomy)},
                                              {"codename_a", *failed_pair.trace_a.codename},
                                              {"codename_b", *failed_pair.trace_b.codename},
                                              {"trace_a", trace_for_prompt(failed_pair.trace_a)},
                                              {"trace_b", trace_for_prompt(failed_pair.trace_b)}});
  std::string prompt = base;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed("propose_additional", prompt);
    try {
      return parse_features(text);  // may be empty: no update this round
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries)
        throw ParseError("propose_additional unparseable after " + std::to_string(attempt + 1) +
                         " attempt(s): " + e.what());
      prompt = base + "\n\n" + kFeatureReminder;
    }
  }
}

std::optional<std::vector<int>> LlmAnnotator::annotate_kind(EncodingKind kind,
                                                            const Taxonomy& taxonomy,
                                                            const ReasoningTrace& trace) {
  if (taxonomy.empty()) throw Error("annotate: taxonomy is empty");
  const std::string op = kind == EncodingKind::por ? "annotate_por" : "annotate_bor";
  const std::string base = templates_.render(op, {{"taxonomy", format_taxonomy(taxonomy)},
                                                  {"trace", trace_for_prompt(trace)}});
  std::string prompt = base;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed(op, prompt);
    try {
      return parse_annotation(text, taxonomy, kind);
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries) {
        warn(op + " for trace " + trace.id + " unparseable after " +
             std::to_string(attempt + 1) + " attempt(s); marked missing (" + e.what() + ")");
        return std::nullopt;
      }
      prompt = base + "\n\n" + kAnnotationReminder;
    }
  }
}

std::optional<std::vector<int>> LlmAnnotator::annotate_por(const Taxonomy& taxonomy,
                                                           const ReasoningTrace& trace) {
  return annotate_kind(EncodingKind::por, taxonomy, trace);
}

std::optional<std::vector<int>> LlmAnnotator::annotate_bor(const Taxonomy& taxonomy,
                                                           const ReasoningTrace& trace) {
  return annotate_kind(EncodingKind::bor, taxonomy, trace);
}

MockOracleAnnotator::MockOracleAnnotator() : MockOracleAnnotator(Options{}, nullptr) {}

MockOracleAnnotator::MockOracleAnnotator(TrainLog* log) : MockOracleAnnotator(Options{}, log) {}

MockOracleAnnotator::MockOracleAnnotator(Options options, TrainLog* log)
    : options_(std::move(options)), templates_(TemplateSet::builtin()), log_(log) {
  if (options_.marker_prefix.empty()) throw Error("mock oracle: marker prefix must be non-empty");
}

std::vector<std::string> MockOracleAnnotator::markers_in(std::string_view text) const {
  return find_marker_tokens(text, options_.marker_prefix);
}

std::optional<std::string> MockOracleAnnotator::marker_of_feature(const Feature& feature) const {
  auto in_name = markers_in(feature.name);
  if (!in_name.empty()) return in_name.front();
  auto in_def = markers_in(feature.definition);
  if (!in_def.empty()) return in_def.front();
  return std::nullopt;
}

void MockOracleAnnotator::log_call(const std::string& op, const std::string& prompt,
                                   const std::string& response) {
  log_event(log_, op, prompt, response, 1, 0);
}

namespace {

std::vector<std::string> symmetric_difference(const std::vector<std::string>& a,
                                              const std::vector<std::string>& b) {
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::vector<std::string> out;
  for (const auto& m : a)
    if (!sb.count(m)) out.push_back(m);
  for (const auto& m : b)
    if (!sa.count(m)) out.push_back(m);
  return out;
}

std::string feature_block(const std::vector<std::string>& markers) {
  std::ostringstream out;
  out << "```\n";
  for (const auto& m : markers)
    out << "FEATURE: uses " << m << " :: The reasoning mentions the token " << m
        << " at least once.\n";
  out << "```\n";
  return out.str();
}

}  // namespace

std::vector<Feature> MockOracleAnnotator::propose_initial(const TracePair& pair) {
  require_anonymized(pair);
  const std::string prompt = templates_.render("propose_initial",
                                               {{"codename_a", *pair.trace_a.codename},
                                                {"codename_b", *pair.trace_b.codename},
                                                {"trace_a", pair.trace_a.text},
                                                {"trace_b", pair.trace_b.text}});
  auto diff = symmetric_difference(markers_in(pair.trace_a.text), markers_in(pair.trace_b.text));
  const std::string response = feature_block(diff);
  log_call("propose_initial", prompt, response);
  auto features = parse_features(response);
  if (features.empty())
    throw Error("empty feature list: the annotator found no distinguishing behavior for pair " +
                pair.question_id);
  return features;
}

std::vector<Feature> MockOracleAnnotator::propose_additional(const Taxonomy& taxonomy,
                                                             const TracePair& failed_pair) {
  require_anonymized(failed_pair);
  const std::string prompt =
      templates_.render("propose_additional", {{"taxonomy", format_taxonomy(taxonomy)},
                                               {"codename_a", *failed_pair.trace_a.codename},
                                               {"codename_b", *failed_pair.trace_b.codename},
                                               {"trace_a", failed_pair.trace_a.text},
                                               {"trace_b", failed_pair.trace_b.text}});
  std::set<std::string> covered;
  for (const Feature& f : taxonomy.features())
    if (auto m = marker_of_feature(f)) covered.insert(*m);
  std::vector<std::string> fresh;
  for (const auto& m : symmetric_difference(markers_in(failed_pair.trace_a.text),
                                            markers_in(failed_pair.trace_b.text)))
    if (!covered.count(m)) fresh.push_back(m);
  const std::string response = feature_block(fresh);
  log_call("propose_additional", prompt, response);
  return parse_features(response);
}

std::optional<std::vector<int>> MockOracleAnnotator::annotate_kind(EncodingKind kind,
                                                                   const Taxonomy& taxonomy,
                                                                   const ReasoningTrace& trace) {
  if (taxonomy.empty()) throw Error("annotate: taxonomy is empty");
  const std::string op = kind == EncodingKind::por ? "annotate_por" : "annotate_bor";
  const std::string prompt = templates_.render(op, {{"taxonomy", format_taxonomy(taxonomy)},
                                                    {"trace", trace.text}});
  const auto sentences = split_sentences(trace.text);
  std::ostringstream body;
  body << "```\n";
  for (const Feature& f : taxonomy.features()) {
    int value = 0;
    if (auto marker = marker_of_feature(f)) {
      if (kind == EncodingKind::por) {
        value = contains(trace.text, *marker) ? 1 : 0;
      } else {
        for (const auto& s : sentences)
          if (contains(s, *marker)) ++value;
      }
    }
    body << f.name << " = " << value << "\n";
  }
  body << "```\n";
  const std::string response = body.str();
  log_call(op, prompt, response);
  return parse_annotation(response, taxonomy, kind);
}

std::optional<std::vector<int>> MockOracleAnnotator::annotate_por(const Taxonomy& taxonomy,
                                                                  const ReasoningTrace& trace) {
  return annotate_kind(EncodingKind::por, taxonomy, trace);
}

std::optional<std::vector<int>> MockOracleAnnotator::annotate_bor(const Taxonomy& taxonomy,
                                                                  const ReasoningTrace& trace) {
  return annotate_kind(EncodingKind::bor, taxonomy, trace);
}

const std::vector<SamplingProfile>& default_sampling_profiles() {
  static const std::vector<SamplingProfile> profiles = {
      {"Qwen3", 0.6, 0.95, 20, "report"},
      {"AceReason-Nemotron-14B", 0.6, 0.95, 50, "report"},
      {"DeepSeek-R1-Distill-Qwen-14B", 0.6, 0.95, 50, "report"},
      {"QwQ-32B", 0.6, 0.95, 20, "repo"},
      {"Magistral-Small", 0.7, 0.95, 50, "repo"},
      {"Phi-4-reasoning-plus", 0.8, 0.95, 50, "repo"},
      {"Seed-Coder-8B-Reasoning", 0.6, 0.95, 50, "default"},
  };
  return profiles;
}

std::optional<SamplingProfile> profile_for_model(const std::string& model_id) {
  const auto& profiles = default_sampling_profiles();
  for (const auto& p : profiles)
    if (p.model_pattern == model_id) return p;
  for (const auto& p : profiles)
    if (model_id.rfind(p.model_pattern, 0) == 0) return p;
  return std::nullopt;
}

ReasoningTrace generate_trace(const TraceGenRequest& request, const AnnotatorConfig& base_config,
                              const TemplateSet& templates, TrainLog* log) {
  SamplingProfile profile;
  if (request.profile_override) {
    profile = *request.profile_override;
    if (profile.source.empty()) profile.source = "override";
  } else if (auto p = profile_for_model(request.model_id)) {
    profile = *p;
  } else {
    throw Error("no sampling profile known for model \"" + request.model_id +
                "\"; pass an explicit profile");
  }

  AnnotatorConfig cfg = base_config;
  cfg.model_name = request.model_id;
  cfg.temperature = profile.temperature;
  cfg.top_p = profile.top_p;
  cfg.top_k = profile.top_k;

  HttpCompleter completer(cfg, log);
  const std::string prompt = templates.render(request.template_name,
                                              {{"question", request.question.text}});
  CompletionResult res = completer.complete(prompt);

  std::string thinking = res.text;
  std::string after;
  auto open = res.text.find(request.think_open);
  if (open != std::string::npos) {
    auto close = res.text.find(request.think_close, open + request.think_open.size());
    if (close == std::string::npos)
      throw Error("model output has an unterminated thinking segment");
    thinking = res.text.substr(open + request.think_open.size(),
                               close - open - request.think_open.size());
    after = res.text.substr(close + request.think_close.size());
  }

  ReasoningTrace t;
  t.id = request.model_id + ":" + request.question.question_id;
  t.question_id = request.question.question_id;
  t.dataset_id = request.dataset_id;
  t.model_id = request.model_id;
  t.text = trim(thinking);
  if (t.text.empty()) throw Error("generated trace for " + t.id + " has an empty thinking segment");
  if (auto boxed = extract_boxed(after)) {
    t.final_answer = *boxed;
  } else if (!trim(after).empty()) {
    t.final_answer = trim(after);
  }
  t.char_count = t.text.size();
  return t;
}

}  // namespace lot
