#include "lot/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace lot {

using nlohmann::json;

const std::string& ReasoningTrace::label() const {
  if (!codename) throw Error("trace " + id + " has no codename; anonymize the corpus first");
  return *codename;
}

Codebook Codebook::from_map(const std::map<std::string, std::string>& mapping) {
  Codebook cb;
  for (const auto& [model, code] : mapping) {
    if (model.empty() || code.empty()) throw Error("codebook entries must be non-empty");
    if (cb.reverse_.count(code))
      throw Error("codebook is not bijective: codename \"" + code + "\" is used twice");
    cb.forward_[model] = code;
    cb.reverse_[code] = model;
  }
  for (const auto& [model, code] : cb.forward_) {
    (void)code;
    if (cb.reverse_.count(model))
      throw Error("codename \"" + model + "\" collides with a model id");
  }
  return cb;
}

Codebook Codebook::load(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error("malformed codebook " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw Error("codebook " + path.string() + " must be a JSON object");
  std::map<std::string, std::string> mapping;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error("codebook value for \"" + k + "\" must be a string");
    mapping[k] = v.get<std::string>();
  }
  return from_map(mapping);
}

void Codebook::save(const std::filesystem::path& path) const {
  json j = json::object();
  for (const auto& [model, code] : forward_) j[model] = code;
  write_file(path, j.dump(2) + "\n");
}

bool Codebook::covers(const std::string& model_id) const { return forward_.count(model_id) > 0; }

const std::string& Codebook::codename_for(const std::string& model_id) const {
  auto it = forward_.find(model_id);
  if (it == forward_.end()) throw Error("codebook does not cover model \"" + model_id + "\"");
  return it->second;
}

std::optional<std::string> Codebook::model_for(const std::string& codename) const {
  auto it = reverse_.find(codename);
  if (it == reverse_.end()) return std::nullopt;
  return it->second;
}

namespace {

ReasoningTrace trace_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(where + ": record is not a JSON object");
  const auto need_string = [&](const char* field) -> std::string {
    if (!j.contains(field)) throw Error(where + ": missing field \"" + field + "\"");
    if (!j.at(field).is_string()) throw Error(where + ": field \"" + field + "\" must be a string");
    return j.at(field).get<std::string>();
  };
  ReasoningTrace t;
  t.id = need_string("id");
  t.question_id = need_string("question_id");
  t.dataset_id = need_string("dataset");
  t.model_id = need_string("model");
  t.text = need_string("text");
  if (t.id.empty()) throw Error(where + ": \"id\" must be non-empty");
  if (t.text.empty()) throw Error(where + ": \"text\" must be non-empty");
  if (j.contains("codename")) {
    if (!j.at("codename").is_string()) throw Error(where + ": \"codename\" must be a string");
    t.codename = j.at("codename").get<std::string>();
    if (*t.codename == t.model_id)
      throw Error(where + ": codename must differ from the model id");
  }
  if (j.contains("answer")) {
    if (!j.at("answer").is_string()) throw Error(where + ": \"answer\" must be a string");
    t.final_answer = j.at("answer").get<std::string>();
  }
  if (j.contains("correct")) {
    if (!j.at("correct").is_boolean()) throw Error(where + ": \"correct\" must be a boolean");
    t.is_correct = j.at("correct").get<bool>();
  }
  t.char_count = t.text.size();
  return t;
}

json trace_to_json(const ReasoningTrace& t) {
  json j;
  j["id"] = t.id;
  j["question_id"] = t.question_id;
  j["dataset"] = t.dataset_id;
  j["model"] = t.model_id;
  if (t.codename) j["codename"] = *t.codename;
  j["text"] = t.text;
  if (t.final_answer) j["answer"] = *t.final_answer;
  if (t.is_correct) j["correct"] = *t.is_correct;
  return j;
}

}  // namespace

Corpus load_traces(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file: " + path.string());
  Corpus corpus;
  std::set<std::string> seen_ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(where + ": invalid JSON: " + e.what());
    }
    ReasoningTrace t = trace_from_json(j, where);
    if (!seen_ids.insert(t.id).second) throw Error(where + ": duplicate trace id \"" + t.id + "\"");
    corpus.push_back(std::move(t));
  }
  return corpus;
}

void save_traces(const std::filesystem::path& path, const Corpus& corpus) {
  std::ostringstream out;
  for (const auto& t : corpus) out << trace_to_json(t).dump() << "\n";
  write_file(path, out.str());
}

PairingResult pair_traces(const Corpus& corpus, const std::string& model_a,
                          const std::string& model_b) {
  if (model_a == model_b) throw Error("pair_traces: the two models must differ");
  bool saw_a = false, saw_b = false;
  // question_id -> traces per side, preserving corpus order of questions
  std::vector<std::string> question_order;
  std::map<std::string, std::pair<std::vector<const ReasoningTrace*>, std::vector<const ReasoningTrace*>>> by_question;
  for (const auto& t : corpus) {
    if (t.model_id == model_a) saw_a = true;
    if (t.model_id == model_b) saw_b = true;
    if (t.model_id != model_a && t.model_id != model_b) continue;
    auto [it, inserted] = by_question.try_emplace(t.question_id);
    if (inserted) question_order.push_back(t.question_id);
    (t.model_id == model_a ? it->second.first : it->second.second).push_back(&t);
  }
  if (!saw_a) throw Error("pair_traces: corpus has no traces from \"" + model_a + "\"");
  if (!saw_b) throw Error("pair_traces: corpus has no traces from \"" + model_b + "\"");

  PairingResult result;
  for (const auto& qid : question_order) {
    const auto& [as, bs] = by_question.at(qid);
    if (as.size() == 1 && bs.size() == 1) {
      result.pairs.push_back(TracePair{qid, *as[0], *bs[0]});
    } else {
      ++result.skipped_questions;
      warn("question " + qid + " skipped: needs exactly one trace per model, got " +
           std::to_string(as.size()) + "/" + std::to_string(bs.size()));
    }
  }
  if (result.pairs.empty()) throw Error("pair_traces: no question has one trace from each model");
  return result;
}

PairSplit split_pairs(const std::vector<TracePair>& pairs, double train_fraction, uint64_t seed) {
  if (pairs.size() < 2) throw Error("split_pairs: need at least 2 pairs");
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("split_pairs: train_fraction must be in (0,1)");
  std::vector<size_t> order(pairs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  // round half-up on the train side
  size_t n_train = static_cast<size_t>(std::floor(train_fraction * static_cast<double>(pairs.size()) + 0.5));
  n_train = std::clamp<size_t>(n_train, 1, pairs.size() - 1);
  PairSplit split;
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? split.train : split.test).push_back(pairs[order[i]]);
  }
  return split;
}

Corpus anonymize(const Corpus& corpus, const Codebook& codebook) {
  for (const auto& t : corpus) {
    if (!codebook.covers(t.model_id))
      throw Error("anonymize: codebook does not cover model \"" + t.model_id + "\"");
  }
  Corpus out = corpus;
  for (auto& t : out) t.codename = codebook.codename_for(t.model_id);
  return out;
}

std::vector<TracePair> load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pairs file: " + path.string());
  std::vector<TracePair> pairs;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(where + ": invalid JSON: " + e.what());
    }
    if (!j.contains("question_id") || !j.contains("a") || !j.contains("b"))
      throw Error(where + ": pair record needs \"question_id\", \"a\", \"b\"");
    TracePair p;
    p.question_id = j.at("question_id").get<std::string>();
    p.trace_a = trace_from_json(j.at("a"), where + " (a)");
    p.trace_b = trace_from_json(j.at("b"), where + " (b)");
    if (p.trace_a.question_id != p.question_id || p.trace_b.question_id != p.question_id)
      throw Error(where + ": pair members disagree on question_id");
    if (p.trace_a.model_id == p.trace_b.model_id)
      throw Error(where + ": pair members must come from different models");
    pairs.push_back(std::move(p));
  }
  return pairs;
}

void save_pairs(const std::filesystem::path& path, const std::vector<TracePair>& pairs) {
  std::ostringstream out;
  for (const auto& p : pairs) {
    json j;
    j["question_id"] = p.question_id;
    j["a"] = trace_to_json(p.trace_a);
    j["b"] = trace_to_json(p.trace_b);
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

std::vector<Question> load_questions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open questions file: " + path.string());
  std::vector<Question> questions;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(where + ": invalid JSON: " + e.what());
    }
    Question q;
    if (!j.contains("question_id") || !j.contains("question"))
      throw Error(where + ": question record needs \"question_id\" and \"question\"");
    q.question_id = j.at("question_id").get<std::string>();
    q.text = j.at("question").get<std::string>();
    if (j.contains("answer")) q.answer = j.at("answer").get<std::string>();
    if (!seen.insert(q.question_id).second)
      throw Error(where + ": duplicate question_id \"" + q.question_id + "\"");
    questions.push_back(std::move(q));
  }
  return questions;
}

void save_questions(const std::filesystem::path& path, const std::vector<Question>& questions) {
  std::ostringstream out;
  for (const auto& q : questions) {
    json j;
    j["question_id"] = q.question_id;
    j["question"] = q.text;
    j["answer"] = q.answer;
    out << j.dump() << "\n";
  }
  write_file(path, out.str());
}

}  // namespace lot
