#include "lot/synthetic.hpp"

#include <cmath>
#include <sstream>

#include "lot/util.hpp"

namespace lot {

namespace {

const std::vector<std::string>& filler_pool() {
  static const std::vector<std::string> fillers = {
      "Let me restate what the question is asking",
      "First I collect the quantities given in the statement",
      "This suggests working through the cases one at a time",
      "I simplify the expression before going further",
      "The intermediate result looks consistent so far",
      "Next I substitute the values back in",
      "That narrows the possibilities considerably",
      "I keep track of the units while computing",
      "A quick sanity check on the magnitude seems fine",
      "Now the remaining part of the argument follows",
  };
  return fillers;
}

int draw_count(Rng& rng, double mean) {
  // roughly uniform on [mean/2, 3*mean/2], at least 1
  double v = mean + (rng.unit() - 0.5) * mean;
  return std::max(1, static_cast<int>(std::lround(v)));
}

std::string build_text(Rng& rng, const std::string& question_tag,
                       const std::vector<std::string>& markers,
                       const std::vector<double>& presence, const std::vector<double>& count_mean,
                       std::vector<bool>* present_out) {
  const auto& fillers = filler_pool();
  std::vector<std::string> sentences;
  sentences.push_back("Working on question " + question_tag + " now.");
  size_t n_fillers = 3 + rng.below(4);
  for (size_t i = 0; i < n_fillers; ++i)
    sentences.push_back(fillers[rng.below(fillers.size())] + ".");

  for (size_t k = 0; k < markers.size(); ++k) {
    bool present = rng.unit() < presence[k];
    if (present_out) (*present_out)[k] = present;
    if (!present) continue;
    int count = draw_count(rng, count_mean[k]);
    for (int c = 0; c < count; ++c) {
      size_t slot = 1 + rng.below(sentences.size());
      sentences.insert(sentences.begin() + static_cast<long>(slot),
                       "Here the token " + markers[k] + " anchors the step.");
    }
  }
  std::ostringstream out;
  for (size_t i = 0; i < sentences.size(); ++i) {
    if (i) out << " ";
    out << sentences[i];
  }
  return out.str();
}

}  // namespace

void SyntheticCorpusSpec::validate() const {
  if (n_questions == 0) throw Error("synthetic spec: n_questions must be positive");
  if (markers.empty()) throw Error("synthetic spec: need at least one marker");
  if (presence_a.size() != markers.size() || presence_b.size() != markers.size() ||
      count_mean_a.size() != markers.size() || count_mean_b.size() != markers.size())
    throw Error("synthetic spec: per-marker vectors must match the marker count");
  if (model_a == model_b) throw Error("synthetic spec: models must differ");
}

Corpus make_marker_corpus(const SyntheticCorpusSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Corpus corpus;
  for (size_t q = 0; q < spec.n_questions; ++q) {
    const std::string qid = "q" + std::to_string(q);
    for (int side = 0; side < 2; ++side) {
      const bool is_a = side == 0;
      ReasoningTrace t;
      t.question_id = qid;
      t.dataset_id = spec.dataset_id;
      t.model_id = is_a ? spec.model_a : spec.model_b;
      t.id = t.model_id + ":" + qid;
      std::vector<bool> present(spec.markers.size(), false);
      t.text = build_text(rng, qid, spec.markers, is_a ? spec.presence_a : spec.presence_b,
                          is_a ? spec.count_mean_a : spec.count_mean_b, &present);
      t.char_count = t.text.size();
      if (spec.planted_correctness) {
        double p = present[0] ? spec.correct_if_first_marker : spec.correct_otherwise;
        t.is_correct = rng.unit() < p;
      }
      corpus.push_back(std::move(t));
    }
  }
  return corpus;
}

SyntheticCorpusSpec separable_spec(size_t n_questions, uint64_t seed) {
  SyntheticCorpusSpec spec;
  spec.n_questions = n_questions;
  spec.seed = seed;
  spec.markers = {"MARKER_ALPHA", "MARKER_BRAVO", "MARKER_CHARLIE",
                  "MARKER_DELTA", "MARKER_ECHO",  "MARKER_FOXTROT"};
  spec.presence_a = {0.92, 0.85, 0.80, 0.10, 0.08, 0.15};
  spec.presence_b = {0.10, 0.12, 0.15, 0.90, 0.85, 0.88};
  spec.count_mean_a = {3.0, 2.0, 2.0, 1.0, 1.0, 1.0};
  spec.count_mean_b = {1.0, 1.0, 1.0, 3.0, 2.0, 2.0};
  return spec;
}

SyntheticCorpusSpec frequency_spec(size_t n_questions, uint64_t seed) {
  SyntheticCorpusSpec spec;
  spec.n_questions = n_questions;
  spec.seed = seed;
  spec.markers = {"MARKER_ALPHA", "MARKER_BRAVO", "MARKER_CHARLIE", "MARKER_DELTA"};
  // every trace mentions every marker: presence carries zero signal
  spec.presence_a = {1.0, 1.0, 1.0, 1.0};
  spec.presence_b = {1.0, 1.0, 1.0, 1.0};
  spec.count_mean_a = {8.0, 7.0, 2.0, 1.5};
  spec.count_mean_b = {2.0, 1.5, 8.0, 7.0};
  return spec;
}

Codebook synthetic_codebook(const SyntheticCorpusSpec& spec) {
  return Codebook::from_map({{spec.model_a, "Omelet"}, {spec.model_b, "Waffle"}});
}

InterventionSet make_intervention_set(const InterventionSetSpec& spec) {
  if (spec.n_traces == 0) throw Error("intervention spec: n_traces must be positive");
  Rng rng(spec.seed);
  InterventionSet set;
  for (size_t i = 0; i < spec.n_traces; ++i) {
    const std::string qid = "iq" + std::to_string(i);
    const std::string gold = "v" + std::to_string(100 + i);

    Question q;
    q.question_id = qid;
    q.text = "Compute the value of quantity Q" + std::to_string(i) + ". [gold=" + gold + "]";
    q.answer = gold;
    set.questions.push_back(q);

    const bool derailed = rng.unit() < spec.error_fraction;
    ReasoningTrace t;
    t.question_id = qid;
    t.dataset_id = spec.dataset_id;
    t.model_id = spec.model_id;
    t.id = spec.model_id + ":" + qid;
    std::ostringstream text;
    text << "I start by reading the question and noting what Q" << i << " depends on.\n\n";
    if (derailed)
      text << "Partway through, a stray " << spec.error_token
           << " assumption derails the calculation.\n\n";
    else
      text << "The calculation proceeds cleanly through each intermediate value.\n\n";
    text << "Collecting the results gives the final value " << gold << ".";
    t.text = text.str();
    t.char_count = t.text.size();
    t.final_answer = derailed ? "incorrect-guess" : gold;
    t.is_correct = !derailed;
    set.traces.push_back(std::move(t));
  }
  return set;
}

}  // namespace lot
