// Synthetic corpus generator for demos and pipeline checks: two
// pseudo-models with planted marker tokens, plus a graded set for the
// intervention pipeline.
#include <iostream>

#include <CLI11.hpp>

#include "lot/dataset.hpp"
#include "lot/synthetic.hpp"
#include "lot/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate synthetic reasoning-trace corpora with planted markers"};
  std::string mode = "separable";
  std::string out_dir;
  size_t n = 200;
  uint64_t seed = 0;
  app.add_option("--mode", mode, "separable | frequency | graded")
      ->check(CLI::IsMember({"separable", "frequency", "graded"}));
  app.add_option("--questions", n, "Number of questions (pairs)");
  app.add_option("--seed", seed);
  app.add_option("--out", out_dir)->required();
  CLI11_PARSE(app, argc, argv);

  try {
    std::filesystem::path out(out_dir);
    lot::ensure_dir(out);
    if (mode == "graded") {
      lot::InterventionSetSpec spec;
      spec.n_traces = n;
      spec.seed = seed;
      lot::InterventionSet set = lot::make_intervention_set(spec);
      lot::save_traces(out / "traces.jsonl", set.traces);
      lot::save_questions(out / "questions.jsonl", set.questions);
      std::cout << "wrote " << set.traces.size() << " graded trace(s) to " << out_dir << std::endl;
      return 0;
    }
    lot::SyntheticCorpusSpec spec =
        mode == "separable" ? lot::separable_spec(n, seed) : lot::frequency_spec(n, seed);
    spec.planted_correctness = true;
    lot::Corpus corpus = lot::make_marker_corpus(spec);
    lot::save_traces(out / "traces.jsonl", corpus);
    lot::synthetic_codebook(spec).save(out / "codebook.json");
    std::cout << "wrote " << corpus.size() << " trace(s) from 2 pseudo-models to " << out_dir
              << std::endl;
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
