#include "lot/baselines.hpp"

#include <chrono>
#include <sstream>

#include <json.hpp>

namespace lot {

using nlohmann::json;

Taxonomy fixed_taxonomy() {
  std::vector<Feature> features;
  Feature verification;
  verification.name = "Verification";
  verification.definition =
      "The model systematically checks each step of its solution against established rules or "
      "data. This behavior ensures the solution's accuracy and consistency within the given "
      "framework. It involves confirming calculations, assumptions, and outcomes to maintain "
      "integrity in problem-solving. Example: The model faces a complex algebraic equation. It "
      "analyzes: \"I will verify each transformation of the equation by checking algebraic "
      "identities.\" The model checks every step, ensuring no errors in logical transition or "
      "simplification have occurred. By cross-checking results with verified examples, the model "
      "establishes confidence in its solution. Upon detecting a mismatch, the model revisits "
      "previous steps to correct any potential errors.";
  features.push_back(verification);

  Feature backtracking;
  backtracking.name = "Backtracking";
  backtracking.definition =
      "The model revisits earlier stages in its problem-solving process to explore alternative "
      "pathways or correct mistakes. It traces back decision points to find where it diverged "
      "from a successful path, allowing for adjustments and retries. Example: The model works on "
      "a logic puzzle and concludes: \"My current approach seems incorrect. I will backtrack to "
      "the last decision point and try an alternative solution path.\" The model reassesses the "
      "point where its assumptions might have derailed its strategy, opting to pursue a "
      "different branch to reach the correct solution.";
  features.push_back(backtracking);

  Feature subgoal;
  subgoal.name = "Subgoal-Setting";
  subgoal.definition =
      "The model breaks down complex problems into smaller, manageable subgoals. This behavior "
      "involves creating intermediate steps or milestones that guide the progression toward the "
      "ultimate solution, enhancing focus and organization. Example: The model tackles a "
      "multistep calculus problem. It states: \"To solve this integral, I will first determine "
      "the derivatives involved as subgoals.\" By decomposing the problem into smaller parts, "
      "the model ensures each component is addressed thoroughly. Completing each subgoal "
      "incrementally builds the foundation leading to the primary objective.";
  features.push_back(subgoal);

  Feature backward;
  backward.name = "Backward Chaining";
  backward.definition =
      "The model starts with the desired outcome and works backward to identify necessary "
      "conditions that must be met. This deductive approach traces back from the goal to the "
      "known data points, ensuring the path taken is logically sound. Example: The model "
      "encounters a logic-based challenge. It declares: \"I will set the target conclusion "
      "first, then determine what premises would logically entail this result.\" By analyzing "
      "the final objective, the model identifies required antecedents and systematically works "
      "backward, ensuring seamless causality in its reasoning process.";
  features.push_back(backward);

  return Taxonomy::with_features(std::move(features));
}

BaselineClient::BaselineClient(AnnotatorConfig config, Completer& completer,
                               TemplateSet templates, TrainLog* log)
    : config_(std::move(config)), completer_(completer), templates_(std::move(templates)), log_(log) {
  config_.validate();
}

std::string BaselineClient::completed(const std::string& op, const std::string& prompt) {
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

PairPrediction BaselineClient::parse_pair_answer(const std::string& response,
                                                 const std::string& codename_a,
                                                 const std::string& codename_b) const {
  // the answer is the last non-empty line, with or without the ANSWER: prefix
  std::string answer_line;
  for (const auto& line : split_lines(response)) {
    std::string t = trim(line);
    if (!t.empty()) answer_line = t;
  }
  if (answer_line.rfind("ANSWER:", 0) == 0) answer_line = trim(answer_line.substr(7));
  std::istringstream ss(answer_line);
  std::string first, second, extra;
  if (!(ss >> first >> second))
    throw ParseError("expected two codenames, got \"" + answer_line + "\"");
  if (ss >> extra) throw ParseError("expected exactly two codenames, got \"" + answer_line + "\"");
  for (const std::string& token : {first, second})
    if (token != codename_a && token != codename_b)
      throw ParseError("response names unknown codename \"" + token + "\"");
  return PairPrediction{first, second};
}

namespace {

std::string shot_block(const std::vector<ShotExample>& shots) {
  std::ostringstream out;
  size_t k = 1;
  for (const auto& shot : shots) {
    out << "Example " << k << ", reasoning from " << shot.trace_a.label() << ":\n<<<\n"
        << shot.trace_a.text << "\n>>>\n\n";
    out << "Example " << k << ", reasoning from " << shot.trace_b.label() << ":\n<<<\n"
        << shot.trace_b.text << "\n>>>\n\n";
    ++k;
  }
  return out.str();
}

std::string pair_block(const std::vector<TracePair>& batch) {
  std::ostringstream out;
  size_t k = 1;
  for (const auto& pair : batch) {
    out << "Example " << k << ", reasoning from " << pair.trace_a.label() << ":\n<<<\n"
        << pair.trace_a.text << "\n>>>\n\n";
    out << "Example " << k << ", reasoning from " << pair.trace_b.label() << ":\n<<<\n"
        << pair.trace_b.text << "\n>>>\n\n";
    ++k;
  }
  return out.str();
}

const char* kAnswerReminder =
    "FORMAT REMINDER: answer with one line \"ANSWER: <codename> <codename>\" using exactly the "
    "two given codenames.";

}  // namespace

PairPrediction BaselineClient::fsp_classify(const std::vector<ShotExample>& shots,
                                            const TracePair& query) {
  if (shots.empty()) throw Error("fsp_classify: need at least one shot");
  if (!query.trace_a.codename || !query.trace_b.codename)
    throw Error("fsp_classify: query pair is not anonymized");
  for (const auto& shot : shots)
    if (shot.question_id == query.question_id)
      throw Error("fsp_classify: shot shares the query's question " + query.question_id);

  const std::string& codename_a = *query.trace_a.codename;
  const std::string& codename_b = *query.trace_b.codename;
  const std::string base = templates_.render("fsp_classify",
                                             {{"codename_a", codename_a},
                                              {"codename_b", codename_b},
                                              {"shots", shot_block(shots)},
                                              {"trace_a", query.trace_a.text},
                                              {"trace_b", query.trace_b.text}});
  if (config_.max_prompt_chars > 0 && base.size() > config_.max_prompt_chars)
    throw BudgetError("fsp prompt with " + std::to_string(shots.size()) + " shot(s) needs " +
                      std::to_string(base.size()) + " chars, over the " +
                      std::to_string(config_.max_prompt_chars) + " budget");

  std::string prompt = base;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed("fsp_classify", prompt);
    try {
      return parse_pair_answer(text, codename_a, codename_b);
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries)
        throw ParseError("fsp_classify unparseable after " + std::to_string(attempt + 1) +
                         " attempt(s): " + e.what());
      prompt = base + "\n\n" + kAnswerReminder;
    }
  }
}

DecisionRules BaselineClient::vml_train(const std::vector<TracePair>& train_pairs, int batch_size,
                                        uint64_t seed) {
  if (train_pairs.empty()) throw Error("vml_train: empty training set");
  if (batch_size < 1) throw Error("vml_train: batch_size must be >= 1");
  for (const auto& p : train_pairs)
    if (!p.trace_a.codename || !p.trace_b.codename)
      throw Error("vml_train: pairs must be anonymized");

  std::vector<size_t> order(train_pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  DecisionRules rules;
  rules.rule_text = "(no rules yet)";
  const std::string codename_a = *train_pairs.front().trace_a.codename;
  const std::string codename_b = *train_pairs.front().trace_b.codename;

  for (size_t start = 0; start < order.size(); start += static_cast<size_t>(batch_size)) {
    std::vector<TracePair> batch;
    for (size_t i = start; i < std::min(order.size(), start + static_cast<size_t>(batch_size)); ++i)
      batch.push_back(train_pairs[order[i]]);
    const std::string prompt = templates_.render("vml_update",
                                                 {{"codename_a", codename_a},
                                                  {"codename_b", codename_b},
                                                  {"rules", rules.rule_text},
                                                  {"shots", pair_block(batch)}});
    std::string text = completed("vml_update", prompt);
    std::string updated;
    if (auto block = fenced_block(text))
      updated = trim(*block);
    else
      updated = trim(text);
    if (updated.empty()) {
      warn("vml_train: empty rule update, keeping revision " + std::to_string(rules.revision));
      if (log_)
        log_->append(TrainEvent{"note", json{{"op", "vml_update_rejected"},
                                             {"revision", rules.revision}}
                                            .dump()});
      continue;
    }
    rules.rule_text = std::move(updated);
    ++rules.revision;
  }
  if (rules.revision == 0) throw Error("vml_train: no usable rule update was produced");
  return rules;
}

PairPrediction BaselineClient::vml_classify(const DecisionRules& rules, const TracePair& pair) {
  if (rules.rule_text.empty() || rules.revision < 1)
    throw Error("vml_classify: decision rules are empty");
  if (!pair.trace_a.codename || !pair.trace_b.codename)
    throw Error("vml_classify: pair is not anonymized");
  const std::string& codename_a = *pair.trace_a.codename;
  const std::string& codename_b = *pair.trace_b.codename;
  const std::string base = templates_.render("vml_classify",
                                             {{"codename_a", codename_a},
                                              {"codename_b", codename_b},
                                              {"rules", rules.rule_text},
                                              {"trace_a", pair.trace_a.text},
                                              {"trace_b", pair.trace_b.text}});
  std::string prompt = base;
  for (int attempt = 0;; ++attempt) {
    std::string text = completed("vml_classify", prompt);
    try {
      return parse_pair_answer(text, codename_a, codename_b);
    } catch (const ParseError& e) {
      if (attempt >= config_.max_retries)
        throw ParseError("vml_classify unparseable after " + std::to_string(attempt + 1) +
                         " attempt(s): " + e.what());
      prompt = base + "\n\n" + kAnswerReminder;
    }
  }
}

namespace {

struct PromptSections {
  std::string codename_a, codename_b;
  std::vector<std::pair<std::string, std::string>> labeled;  // (codename, text)
  std::vector<std::string> unlabeled;
  std::string rules;
};

// pulls the "<<< ... >>>" blocks and their headers out of a baseline prompt
PromptSections dissect_prompt(const std::string& prompt) {
  PromptSections s;
  auto mention = prompt.find("assistants, ");
  if (mention != std::string::npos) {
    size_t start = mention + 12;
    auto and_pos = prompt.find(" and ", start);
    if (and_pos != std::string::npos) {
      s.codename_a = trim(prompt.substr(start, and_pos - start));
      size_t b_start = and_pos + 5;
      size_t b_end = prompt.find_first_of(",.\n", b_start);
      if (b_end != std::string::npos) s.codename_b = trim(prompt.substr(b_start, b_end - b_start));
    }
  }
  auto lines = split_lines(prompt);
  std::string pending_header;
  bool in_block = false;
  std::string block;
  for (const auto& line : lines) {
    std::string t = trim(line);
    if (t == "<<<") {
      in_block = true;
      block.clear();
      continue;
    }
    if (t == ">>>") {
      in_block = false;
      if (pending_header.rfind("Decision rules", 0) == 0) {
        s.rules = block;
      } else if (pending_header.rfind("Unlabeled reasoning", 0) == 0) {
        s.unlabeled.push_back(block);
      } else {
        auto from = pending_header.find("reasoning from ");
        if (from != std::string::npos) {
          std::string name = trim(pending_header.substr(from + 15));
          if (!name.empty() && name.back() == ':') name.pop_back();
          s.labeled.emplace_back(name, block);
        }
      }
      continue;
    }
    if (in_block) {
      block += line;
      block += "\n";
    } else if (!t.empty() && t.back() == ':') {
      pending_header = t;
    }
  }
  return s;
}

}  // namespace

CompletionResult MockComparisonCompleter::complete(const std::string& prompt) {
  PromptSections s = dissect_prompt(prompt);

  // rule update: name the markers that separate the labeled examples
  if (contains(prompt, "New labeled training examples")) {
    std::map<std::string, std::set<std::string>> owners;  // marker -> codenames it occurs for
    for (const auto& [name, text] : s.labeled)
      for (const auto& m : find_marker_tokens(text, marker_prefix_)) owners[m].insert(name);
    std::ostringstream out;
    out << "```\n";
    for (const auto& [marker, names] : owners)
      if (names.size() == 1)
        out << "if the reasoning mentions " << marker << ", predict " << *names.begin() << ".\n";
    out << "otherwise predict " << s.codename_a << ".\n";
    out << "```\n";
    return CompletionResult{out.str(), 1};
  }

  // classification: score each unlabeled reasoning against examples or rules
  std::map<std::string, std::set<std::string>> evidence;  // codename -> markers
  for (const auto& [name, text] : s.labeled)
    for (const auto& m : find_marker_tokens(text, marker_prefix_)) evidence[name].insert(m);
  if (!s.rules.empty()) {
    for (const auto& line : split_lines(s.rules)) {
      auto mpos = line.find("mentions ");
      auto ppos = line.find(", predict ");
      if (mpos == std::string::npos || ppos == std::string::npos) continue;
      std::string marker = trim(line.substr(mpos + 9, ppos - mpos - 9));
      std::string name = trim(line.substr(ppos + 10));
      if (!name.empty() && name.back() == '.') name.pop_back();
      evidence[name].insert(marker);
    }
  }
  // markers claimed by both sides carry no signal
  std::map<std::string, std::string> marker_owner;
  for (const auto& [name, markers] : evidence)
    for (const auto& m : markers) {
      auto it = marker_owner.find(m);
      marker_owner[m] = it == marker_owner.end() ? name : std::string();
    }

  std::vector<std::string> answers;
  for (size_t i = 0; i < s.unlabeled.size(); ++i) {
    std::map<std::string, int> votes;
    for (const auto& m : find_marker_tokens(s.unlabeled[i], marker_prefix_)) {
      auto it = marker_owner.find(m);
      if (it != marker_owner.end() && !it->second.empty()) ++votes[it->second];
    }
    std::string best = i == 0 ? s.codename_a : s.codename_b;  // fallback by position
    int best_votes = -1;
    for (const auto& [name, v] : votes)
      if (v > best_votes) {
        best = name;
        best_votes = v;
      }
    answers.push_back(best);
  }
  std::ostringstream out;
  out << "ANSWER:";
  for (const auto& a : answers) out << " " << a;
  out << "\n";
  return CompletionResult{out.str(), 1};
}

std::vector<ShotExample> select_shots(const std::vector<TracePair>& train_pairs, size_t n_shots,
                                      const std::string& query_question_id, uint64_t seed) {
  std::vector<size_t> eligible;
  for (size_t i = 0; i < train_pairs.size(); ++i)
    if (train_pairs[i].question_id != query_question_id) eligible.push_back(i);
  if (eligible.size() < n_shots)
    throw Error("select_shots: only " + std::to_string(eligible.size()) +
                " eligible pair(s) for " + std::to_string(n_shots) + " shot(s)");
  Rng rng(seed);
  rng.shuffle(eligible);
  std::vector<ShotExample> shots;
  for (size_t i = 0; i < n_shots; ++i) {
    const TracePair& p = train_pairs[eligible[i]];
    shots.push_back(ShotExample{p.question_id, p.trace_a, p.trace_b});
  }
  return shots;
}

}  // namespace lot
