#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lot/util.hpp"

namespace lot {

/// One model's full thinking text for one question.
struct ReasoningTrace {
  std::string id;
  std::string question_id;
  std::string dataset_id;
  std::string model_id;
  std::optional<std::string> codename;
  std::string text;
  std::optional<std::string> final_answer;
  std::optional<bool> is_correct;
  size_t char_count = 0;

  const std::string& label() const;  // codename; throws if not anonymized

  bool operator==(const ReasoningTrace&) const = default;
};

struct TracePair {
  std::string question_id;
  ReasoningTrace trace_a;
  ReasoningTrace trace_b;

  bool operator==(const TracePair&) const = default;
};

/// Bijective model_id -> codename map. No codename may equal any model_id.
class Codebook {
 public:
  static Codebook from_map(const std::map<std::string, std::string>& mapping);
  static Codebook load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  bool covers(const std::string& model_id) const;
  const std::string& codename_for(const std::string& model_id) const;
  std::optional<std::string> model_for(const std::string& codename) const;
  const std::map<std::string, std::string>& mapping() const { return forward_; }

 private:
  std::map<std::string, std::string> forward_;
  std::map<std::string, std::string> reverse_;
};

using Corpus = std::vector<ReasoningTrace>;

// Line-delimited records, one JSON object per line. Validates every record and
// rejects duplicate ids; errors carry the offending line number.
Corpus load_traces(const std::filesystem::path& path);
void save_traces(const std::filesystem::path& path, const Corpus& corpus);

struct PairingResult {
  std::vector<TracePair> pairs;
  size_t skipped_questions = 0;
};

// One pair per question that has exactly one trace from each model; other
// questions are skipped and counted.
PairingResult pair_traces(const Corpus& corpus, const std::string& model_a,
                          const std::string& model_b);

struct PairSplit {
  std::vector<TracePair> train;
  std::vector<TracePair> test;
};

// Deterministic seeded split over whole pairs. |train| rounds half-up.
PairSplit split_pairs(const std::vector<TracePair>& pairs, double train_fraction, uint64_t seed);

// Returns a copy of the corpus with every codename set from the codebook.
Corpus anonymize(const Corpus& corpus, const Codebook& codebook);

std::vector<TracePair> load_pairs(const std::filesystem::path& path);
void save_pairs(const std::filesystem::path& path, const std::vector<TracePair>& pairs);

/// Question text plus grading key, used by trace generation and intervention.
struct Question {
  std::string question_id;
  std::string text;
  std::string answer;
};

std::vector<Question> load_questions(const std::filesystem::path& path);
void save_questions(const std::filesystem::path& path, const std::vector<Question>& questions);

}  // namespace lot
