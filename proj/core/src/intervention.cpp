#include "lot/intervention.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lot/annotator.hpp"

namespace lot {

using nlohmann::json;

void InterventionPlan::save(const std::filesystem::path& path) const {
  json j;
  j["or_high"] = or_high;
  j["or_low"] = or_low;
  json add_j = json::array();
  for (const auto& e : add) add_j.push_back({{"feature", e.feature}, {"directive", e.directive}});
  j["add"] = std::move(add_j);
  j["remove"] = remove;
  write_file(path, j.dump(2) + "\n");
}

InterventionPlan InterventionPlan::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed plan file " + path.string() + ": " + e.what());
  }
  InterventionPlan plan;
  plan.or_high = j.value("or_high", plan.or_high);
  plan.or_low = j.value("or_low", plan.or_low);
  if (j.contains("add"))
    for (const auto& e : j.at("add"))
      plan.add.push_back(PlanEntry{e.at("feature").get<std::string>(),
                                   e.value("directive", std::string())});
  if (j.contains("remove"))
    for (const auto& e : j.at("remove")) plan.remove.push_back(e.get<std::string>());
  std::set<std::string> added;
  for (const auto& e : plan.add) added.insert(e.feature);
  for (const auto& r : plan.remove)
    if (added.count(r)) throw Error("plan file " + path.string() + ": feature \"" + r +
                                    "\" appears in both add and remove");
  return plan;
}

InterventionPlan derive_plan(const FeatureReport& report, double or_high, double or_low,
                             const Taxonomy* taxonomy) {
  if (report.rows.empty()) throw Error("derive_plan: empty report");
  if (!(or_low < 1.0 && 1.0 < or_high))
    throw Error("derive_plan: thresholds must satisfy or_low < 1 < or_high");
  InterventionPlan plan;
  plan.or_high = or_high;
  plan.or_low = or_low;
  const auto definition_of = [&](const std::string& name) -> std::string {
    if (!taxonomy) return "";
    for (const Feature& f : taxonomy->features())
      if (f.name == name) return f.definition;
    return "";
  };
  for (const auto& row : report.rows) {
    if (!row.odds) continue;
    if (row.odds->value >= or_high) {
      std::string directive = "Add a step that performs \"" + row.name + "\"";
      std::string def = definition_of(row.name);
      if (!def.empty()) directive += ": " + def;
      plan.add.push_back(PlanEntry{row.name, directive});
    } else if (row.odds->value <= or_low) {
      plan.remove.push_back(row.name);
    }
  }
  return plan;
}

LlmReasoningClient::LlmReasoningClient(AnnotatorConfig config, Completer& completer,
                                       TemplateSet templates, TrainLog* log)
    : config_(std::move(config)), completer_(completer), templates_(std::move(templates)), log_(log) {
  config_.validate();
}

std::string LlmReasoningClient::completed(const std::string& op, const std::string& prompt) {
  auto started = std::chrono::steady_clock::now();
  CompletionResult res = completer_.complete(prompt);
  if (log_) {
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - started)
                  .count();
    json data{{"op", op},
              {"prompt", prompt},
              {"response", res.text},
              {"prompt_hash", hex64(fnv1a(prompt))},
              {"response_hash", hex64(fnv1a(res.text))},
              {"attempts", res.attempts},
              {"latency_ms", ms}};
    log_->append(TrainEvent{"annotator_call", data.dump()});
  }
  return res.text;
}

template <typename Parse>
auto LlmReasoningClient::with_format_retries(const std::string& op, const std::string& base_prompt,
                                             Parse parse) {
  std::string prompt = base_prompt;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed(op, prompt);
    try {
      return parse(text);
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries)
        throw ParseError(op + " unparseable after " + std::to_string(attempt + 1) +
                         " attempt(s): " + e.what());
      prompt = base_prompt + "\n\nFORMAT REMINDER: follow the requested output format exactly.";
    }
  }
}

std::vector<ReasoningClient::NumberedStep> LlmReasoningClient::summarize_chunk(
    const std::string& question, const std::vector<NumberedParagraph>& paragraphs) {
  std::ostringstream numbered;
  std::set<size_t> valid;
  for (const auto& p : paragraphs) {
    numbered << "[" << (p.index + 1) << "] " << p.text << "\n\n";
    valid.insert(p.index + 1);
  }
  const std::string prompt = templates_.render("intervene_summarize",
                                               {{"question", question},
                                                {"paragraphs", numbered.str()}});
  return with_format_retries("intervene_summarize", prompt, [&](const std::string& text) {
    auto block = fenced_block(text);
    if (!block) throw ParseError("no fenced step block");
    std::vector<NumberedStep> steps;
    for (const auto& raw : split_lines(*block)) {
      std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.rfind("STEP", 0) != 0) throw ParseError("step line must start with STEP: " + line);
      auto colon = line.find(':');
      if (colon == std::string::npos) throw ParseError("step line is missing ':': " + line);
      std::string num = trim(line.substr(4, colon - 4));
      size_t paragraph_no = 0;
      try {
        paragraph_no = static_cast<size_t>(std::stoul(num));
      } catch (const std::exception&) {
        throw ParseError("step line has no paragraph number: " + line);
      }
      if (!valid.count(paragraph_no))
        throw ParseError("step references paragraph " + num + " outside this chunk");
      std::string step_text = trim(line.substr(colon + 1));
      if (step_text.empty()) throw ParseError("empty step text: " + line);
      steps.push_back(NumberedStep{paragraph_no - 1, std::move(step_text)});
    }
    if (steps.empty()) throw ParseError("summary produced no steps");
    return steps;
  });
}

std::vector<std::string> LlmReasoningClient::edit_steps(const std::string& question,
                                                        const std::vector<std::string>& steps,
                                                        const InterventionPlan& plan) {
  std::ostringstream step_list;
  for (size_t i = 0; i < steps.size(); ++i) step_list << (i + 1) << ". " << steps[i] << "\n";
  std::ostringstream directives;
  for (const auto& name : plan.remove)
    directives << "- Remove every step that exhibits \"" << name << "\".\n";
  for (const auto& e : plan.add) directives << "- " << e.directive << "\n";
  const std::string prompt = templates_.render("intervene_edit",
                                               {{"question", question},
                                                {"steps", step_list.str()},
                                                {"directives", directives.str()}});
  return with_format_retries("intervene_edit", prompt, [&](const std::string& text) {
    auto block = fenced_block(text);
    if (!block) throw ParseError("no fenced step block");
    std::vector<std::string> edited;
    for (const auto& raw : split_lines(*block)) {
      std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.rfind("STEP:", 0) != 0) throw ParseError("edited line must start with STEP:: " + line);
      std::string step_text = trim(line.substr(5));
      if (step_text.empty()) throw ParseError("empty edited step");
      edited.push_back(std::move(step_text));
    }
    return edited;
  });
}

std::string LlmReasoningClient::expand_step(const std::string& question, const std::string& prior,
                                            const std::string& step) {
  const std::string prompt = templates_.render("intervene_expand", {{"question", question},
                                                                    {"prior", prior},
                                                                    {"step", step}});
  return with_format_retries("intervene_expand", prompt, [&](const std::string& text) {
    std::string paragraph = trim(text);
    if (paragraph.empty()) throw ParseError("empty expansion");
    return paragraph;
  });
}

std::string LlmReasoningClient::answer(const std::string& question, const std::string& reasoning) {
  const std::string prompt = templates_.render("final_answer", {{"question", question},
                                                                {"reasoning", reasoning}});
  return with_format_retries("final_answer", prompt, [&](const std::string& text) {
    if (auto boxed = extract_boxed(text)) return *boxed;
    std::string plain = trim(text);
    if (plain.empty()) throw ParseError("empty answer");
    return plain;
  });
}

std::vector<ReasoningClient::NumberedStep> MockReasoningClient::summarize_chunk(
    const std::string&, const std::vector<NumberedParagraph>& paragraphs) {
  std::vector<NumberedStep> steps;
  for (const auto& p : paragraphs) steps.push_back(NumberedStep{p.index, collapse_ws(p.text)});
  return steps;
}

std::vector<std::string> MockReasoningClient::edit_steps(const std::string&,
                                                         const std::vector<std::string>& steps,
                                                         const InterventionPlan& plan) {
  // removal pattern = last word of the feature name ("uses MARKER_3" -> MARKER_3)
  std::vector<std::string> patterns;
  for (const auto& name : plan.remove) {
    auto pos = name.find_last_of(" \t");
    patterns.push_back(pos == std::string::npos ? name : name.substr(pos + 1));
  }
  std::vector<std::string> edited;
  for (const auto& step : steps) {
    bool drop = false;
    for (const auto& p : patterns)
      if (!p.empty() && contains(step, p)) drop = true;
    if (!drop) edited.push_back(step);
  }
  for (const auto& e : plan.add) edited.push_back(e.directive);
  return edited;
}

std::string MockReasoningClient::expand_step(const std::string&, const std::string&,
                                             const std::string& step) {
  return step + " This step is carried out in full detail.";
}

std::string MockReasoningClient::answer(const std::string& question, const std::string& reasoning) {
  if (contains(reasoning, options_.error_token)) return "incorrect-guess";
  auto pos = question.find("[gold=");
  if (pos == std::string::npos) return "unknown";
  auto end = question.find(']', pos);
  if (end == std::string::npos) return "unknown";
  return question.substr(pos + 6, end - pos - 6);
}

StepSummary summarize(const ReasoningTrace& trace, const std::string& question,
                      ReasoningClient& client, size_t chunk_char_budget) {
  auto paragraphs = split_paragraphs(trace.text);
  if (paragraphs.empty()) throw Error("summarize: trace " + trace.id + " has no paragraphs");

  StepSummary summary;
  summary.source_trace_id = trace.id;

  // greedy chunks under the character budget; one call per chunk
  size_t i = 0;
  while (i < paragraphs.size()) {
    std::vector<ReasoningClient::NumberedParagraph> chunk;
    size_t used = 0;
    while (i < paragraphs.size() && (chunk.empty() || used + paragraphs[i].size() <= chunk_char_budget)) {
      chunk.push_back(ReasoningClient::NumberedParagraph{i, paragraphs[i]});
      used += paragraphs[i].size();
      ++i;
    }
    auto steps = client.summarize_chunk(question, chunk);
    if (steps.empty()) throw Error("summarize: client produced no steps for trace " + trace.id);
    for (auto& s : steps) {
      if (s.paragraph_index >= paragraphs.size())
        throw Error("summarize: step maps to paragraph " + std::to_string(s.paragraph_index) +
                    " beyond the trace");
      summary.steps.push_back(std::move(s.text));
      summary.paragraph_map.push_back(s.paragraph_index);
    }
  }
  if (summary.steps.empty()) throw Error("summarize: no steps for trace " + trace.id);
  return summary;
}

StepSummary edit_summary(const StepSummary& summary, const InterventionPlan& plan,
                         const std::string& question, ReasoningClient& client, EditDiff* diff) {
  if (plan.empty()) {
    if (diff) *diff = EditDiff{};
    return summary;
  }
  std::vector<std::string> edited = client.edit_steps(question, summary.steps, plan);

  // steps that reappear verbatim keep their paragraph mapping
  std::map<std::string, std::vector<size_t>> original_positions;
  for (size_t i = 0; i < summary.steps.size(); ++i)
    original_positions[summary.steps[i]].push_back(i);

  StepSummary out;
  out.source_trace_id = summary.source_trace_id;
  std::vector<bool> survived(summary.steps.size(), false);
  for (const auto& step : edited) {
    std::optional<size_t> origin;
    auto it = original_positions.find(step);
    if (it != original_positions.end() && !it->second.empty()) {
      origin = summary.paragraph_map[it->second.front()];
      survived[it->second.front()] = true;
      it->second.erase(it->second.begin());
    }
    out.steps.push_back(step);
    out.paragraph_map.push_back(origin);
  }
  if (diff) {
    diff->removed.clear();
    diff->added.clear();
    for (size_t i = 0; i < summary.steps.size(); ++i)
      if (!survived[i]) diff->removed.push_back(summary.steps[i]);
    for (const auto& step : out.steps) {
      bool was_original = original_positions.count(step) &&
                          std::find(summary.steps.begin(), summary.steps.end(), step) !=
                              summary.steps.end();
      if (!was_original) diff->added.push_back(step);
    }
  }
  return out;
}

std::string expand(const StepSummary& summary, const std::string& question,
                   ReasoningClient& client) {
  if (summary.steps.empty()) throw Error("expand: summary has no steps");
  std::string full;
  for (const auto& step : summary.steps) {
    std::string paragraph = client.expand_step(question, full, step);
    if (!full.empty()) full += "\n\n";
    full += paragraph;
  }
  return full;
}

namespace {

std::string graded_answer(const std::string& raw) {
  if (auto boxed = extract_boxed(raw)) return lower_copy(trim(*boxed));
  return lower_copy(trim(raw));
}

json arm_trace_record(const ReasoningTrace& original, const std::string& arm, int rep,
                      const std::string& text, const std::string& answer, bool correct) {
  json j;
  j["id"] = original.id + "#" + arm + "#r" + std::to_string(rep);
  j["question_id"] = original.question_id;
  j["dataset"] = original.dataset_id;
  j["model"] = original.model_id;
  if (original.codename) j["codename"] = *original.codename;
  j["text"] = text;
  j["answer"] = answer;
  j["correct"] = correct;
  j["arm"] = arm;
  return j;
}

}  // namespace

InterventionOutcome run_intervention(const Corpus& traces, const std::vector<Question>& questions,
                                     const InterventionPlan& plan, ReasoningClient& client,
                                     int repetitions, uint64_t seed,
                                     const std::filesystem::path& out_dir,
                                     size_t chunk_char_budget) {
  if (repetitions < 1) throw Error("run_intervention: repetitions must be >= 1");
  std::map<std::string, const Question*> by_qid;
  for (const auto& q : questions) by_qid[q.question_id] = &q;

  std::vector<const ReasoningTrace*> eligible;
  InterventionOutcome outcome;
  outcome.repetitions = static_cast<size_t>(repetitions);
  for (const auto& t : traces) {
    auto it = by_qid.find(t.question_id);
    if (it == by_qid.end() || it->second->answer.empty()) {
      ++outcome.traces_excluded;
      warn("trace " + t.id + " excluded: no question or grading key");
      continue;
    }
    eligible.push_back(&t);
  }
  if (eligible.empty()) throw Error("run_intervention: no trace has a question and grading key");

  const std::vector<std::string> arm_names = {"original", "control", "modified"};
  std::map<std::string, ArmResult> arms;
  for (const auto& name : arm_names) arms[name].arm = name;

  std::ostringstream audit;
  std::map<std::string, std::ostringstream> arm_files;

  Rng rng(seed);
  for (int rep = 0; rep < repetitions; ++rep) {
    (void)rng.next_u64();  // one draw per repetition keeps reps distinct for seeded clients
    std::map<std::string, size_t> correct_per_arm;
    for (const ReasoningTrace* trace : eligible) {
      const Question& q = *by_qid.at(trace->question_id);
      const std::string gold = graded_answer(q.answer);

      StepSummary summary = summarize(*trace, q.text, client, chunk_char_budget);
      std::string control_text = expand(summary, q.text, client);
      EditDiff diff;
      StepSummary edited = edit_summary(summary, plan, q.text, client, &diff);
      std::string modified_text = expand(edited, q.text, client);

      const std::map<std::string, std::string> arm_texts = {
          {"original", trace->text}, {"control", control_text}, {"modified", modified_text}};
      for (const auto& [arm, text] : arm_texts) {
        std::string ans = client.answer(q.text, text);
        bool correct = graded_answer(ans) == gold;
        if (correct) ++correct_per_arm[arm];
        if (!out_dir.empty())
          arm_files[arm] << arm_trace_record(*trace, arm, rep, text, ans, correct).dump() << "\n";
      }
      if (!out_dir.empty()) {
        json a;
        a["trace_id"] = trace->id;
        a["rep"] = rep;
        a["paragraphs"] = split_paragraphs(trace->text).size();
        a["steps"] = summary.steps;
        a["edited_steps"] = edited.steps;
        a["removed"] = diff.removed;
        a["added"] = diff.added;
        audit << a.dump() << "\n";
      }
    }
    for (const auto& name : arm_names) {
      arms[name].per_rep_accuracy.push_back(static_cast<double>(correct_per_arm[name]) /
                                            static_cast<double>(eligible.size()));
      arms[name].graded_traces = eligible.size();
    }
  }

  for (const auto& name : arm_names) {
    ArmResult& arm = arms[name];
    double sum = 0.0;
    for (double a : arm.per_rep_accuracy) sum += a;
    arm.mean_accuracy = sum / static_cast<double>(arm.per_rep_accuracy.size());
    double var = 0.0;
    for (double a : arm.per_rep_accuracy) var += (a - arm.mean_accuracy) * (a - arm.mean_accuracy);
    arm.stdev_accuracy = std::sqrt(var / static_cast<double>(arm.per_rep_accuracy.size()));
    outcome.arms.push_back(arm);
  }

  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    for (const auto& [arm, stream] : arm_files)
      write_file(out_dir / ("arm_" + arm + ".jsonl"), stream.str());
    write_file(out_dir / "audit.jsonl", audit.str());
    json summary;
    summary["repetitions"] = repetitions;
    summary["traces_excluded"] = outcome.traces_excluded;
    json arms_j = json::array();
    for (const auto& arm : outcome.arms)
      arms_j.push_back({{"arm", arm.arm},
                        {"mean_accuracy", arm.mean_accuracy},
                        {"stdev_accuracy", arm.stdev_accuracy},
                        {"per_rep_accuracy", arm.per_rep_accuracy},
                        {"graded_traces", arm.graded_traces}});
    summary["arms"] = std::move(arms_j);
    write_file(out_dir / "intervention_report.json", summary.dump(2) + "\n");
  }
  return outcome;
}

}  // namespace lot
