#include "lot/completion.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace lot {

using nlohmann::json;

void AnnotatorConfig::validate() const {
  if (temperature < 0) throw Error("annotator config: temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw Error("annotator config: top_p must be in (0,1]");
  if (max_retries < 0) throw Error("annotator config: max_retries must be >= 0");
  if (timeout_seconds <= 0) throw Error("annotator config: timeout must be positive");
}

void AnnotatorConfig::apply_env() {
  const auto take = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  if (endpoint_url.empty()) endpoint_url = take("LOT_API_BASE");
  if (api_key.empty()) api_key = take("LOT_API_KEY");
  if (model_name.empty()) model_name = take("LOT_MODEL");
}

void AnnotatorConfig::save(const std::filesystem::path& path) const {
  json j;
  j["endpoint_url"] = endpoint_url;
  j["model_name"] = model_name;
  j["temperature"] = temperature;
  j["top_p"] = top_p;
  j["top_k"] = top_k;
  j["max_retries"] = max_retries;
  j["timeout_seconds"] = timeout_seconds;
  j["max_prompt_chars"] = max_prompt_chars;
  j["max_trace_chars"] = max_trace_chars;
  j["truncate_traces"] = truncate_traces;
  j["disable_thinking"] = disable_thinking;
  j["backoff_ms"] = backoff_ms;
  j["template_dir"] = template_dir;
  write_file(path, j.dump(2) + "\n");
}

AnnotatorConfig AnnotatorConfig::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed annotator config " + path.string() + ": " + e.what());
  }
  if (j.contains("annotator")) j = j.at("annotator");
  AnnotatorConfig c;
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.api_key = j.value("api_key", c.api_key);
  c.model_name = j.value("model_name", c.model_name);
  c.temperature = j.value("temperature", c.temperature);
  c.top_p = j.value("top_p", c.top_p);
  c.top_k = j.value("top_k", c.top_k);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
  c.max_prompt_chars = j.value("max_prompt_chars", c.max_prompt_chars);
  c.max_trace_chars = j.value("max_trace_chars", c.max_trace_chars);
  c.truncate_traces = j.value("truncate_traces", c.truncate_traces);
  c.disable_thinking = j.value("disable_thinking", c.disable_thinking);
  c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
  c.template_dir = j.value("template_dir", c.template_dir);
  c.validate();
  return c;
}

HttpCompleter::HttpCompleter(AnnotatorConfig config, TrainLog* log)
    : config_(std::move(config)), log_(log) {
  config_.validate();
  if (config_.endpoint_url.empty())
    throw Error("no endpoint configured; set LOT_API_BASE or annotator.endpoint_url");
  const std::string& url = config_.endpoint_url;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("endpoint_url must include a scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_ = url;
    base_path_ = "";
  } else {
    scheme_host_ = url.substr(0, path_start);
    base_path_ = url.substr(path_start);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }
}

CompletionResult HttpCompleter::complete(const std::string& prompt) {
  if (config_.max_prompt_chars > 0 && prompt.size() > config_.max_prompt_chars)
    throw Error("prompt of " + std::to_string(prompt.size()) + " chars exceeds max_prompt_chars " +
                std::to_string(config_.max_prompt_chars));

  json body;
  body["model"] = config_.model_name;
  body["messages"] = json::array({{{"role", "user"}, {"content", prompt}}});
  body["temperature"] = config_.temperature;
  body["top_p"] = config_.top_p;
  body["top_k"] = config_.top_k;
  if (config_.disable_thinking) body["chat_template_kwargs"] = {{"enable_thinking", false}};
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  const std::string path = base_path_ + "/chat/completions";
  std::string last_failure;
  const auto started = std::chrono::steady_clock::now();

  for (int attempt = 1; attempt <= config_.max_retries + 1; ++attempt) {
    httplib::Client client(scheme_host_);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_failure = "transport error: " + httplib::to_string(res.error());
    } else if (res->status < 200 || res->status >= 300) {
      last_failure = "HTTP status " + std::to_string(res->status);
    } else {
      try {
        json reply = json::parse(res->body);
        std::string text = reply.at("choices").at(0).at("message").at("content").get<std::string>();
        if (log_) {
          auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - started)
                        .count();
          json data{{"op", "http_complete"},
                    {"prompt_hash", hex64(fnv1a(prompt))},
                    {"response_hash", hex64(fnv1a(text))},
                    {"latency_ms", ms},
                    {"attempts", attempt}};
          log_->append(TrainEvent{"annotator_call", data.dump()});
        }
        return CompletionResult{std::move(text), attempt};
      } catch (const json::exception& e) {
        last_failure = std::string("malformed completion payload: ") + e.what();
      }
    }
    if (attempt <= config_.max_retries) {
      auto delay = std::chrono::milliseconds(config_.backoff_ms << (attempt - 1));
      std::this_thread::sleep_for(delay);
    }
  }
  throw Error("completion failed after " + std::to_string(config_.max_retries + 1) +
              " attempt(s): " + last_failure);
}

ScriptedCompleter ScriptedCompleter::from_responses(std::vector<std::string> responses) {
  auto index = std::make_shared<size_t>(0);
  auto shared = std::make_shared<std::vector<std::string>>(std::move(responses));
  return ScriptedCompleter([index, shared](const std::string&) -> std::string {
    if (*index >= shared->size()) throw Error("scripted completer ran out of responses");
    return (*shared)[(*index)++];
  });
}

std::string truncate_middle(std::string_view text, size_t budget) {
  if (budget == 0 || text.size() <= budget) return std::string(text);
  static const std::string sentinel = "\n[... middle of trace elided ...]\n";
  if (budget <= sentinel.size()) return std::string(text.substr(0, budget));
  const size_t keep = budget - sentinel.size();
  const size_t head = keep * 6 / 10;
  const size_t tail = keep - head;
  std::string out;
  out.reserve(budget);
  out.append(text.substr(0, head));
  out.append(sentinel);
  out.append(text.substr(text.size() - tail));
  return out;
}

std::optional<std::string> extract_boxed(std::string_view text) {
  const std::string_view token = "\\boxed{";
  auto pos = text.rfind(token);
  if (pos == std::string_view::npos) return std::nullopt;
  size_t i = pos + token.size();
  int depth = 1;
  std::string content;
  while (i < text.size() && depth > 0) {
    char c = text[i];
    if (c == '{') ++depth;
    if (c == '}') {
      --depth;
      if (depth == 0) break;
    }
    content.push_back(c);
    ++i;
  }
  if (depth != 0) return std::nullopt;
  return content;
}

}  // namespace lot
