#include "cli.hpp"

#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lot/analysis.hpp"
#include "lot/annotator.hpp"
#include "lot/baselines.hpp"
#include "lot/classifier.hpp"
#include "lot/dataset.hpp"
#include "lot/encoding.hpp"
#include "lot/intervention.hpp"
#include "lot/prompts.hpp"
#include "lot/taxonomy.hpp"
#include "lot/trainer.hpp"
#include "lot/trainlog.hpp"
#include "lot/util.hpp"

namespace lot::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Session {
  uint64_t seed = 0;
  bool seed_given = false;
  std::string config_path;
  std::string out_dir;
  int parallelism = 1;
  bool mock_annotator = false;

  CommandResult result;

  fs::path out() const {
    if (out_dir.empty()) throw Error("this subcommand needs --out");
    return fs::path(out_dir);
  }

  void write_marker(const fs::path& path) { result.artifacts_written.push_back(path.string()); }

  RunConfig run_config() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = RunConfig::load(config_path);
    if (seed_given) cfg.seed = seed;
    cfg.parallelism = parallelism;
    return cfg;
  }

  AnnotatorConfig annotator_config() const {
    AnnotatorConfig cfg;
    if (!config_path.empty()) cfg = AnnotatorConfig::load(config_path);
    cfg.apply_env();
    return cfg;
  }

  TemplateSet templates(const AnnotatorConfig& cfg) const {
    return cfg.template_dir.empty() ? TemplateSet::builtin()
                                    : TemplateSet::from_dir(cfg.template_dir);
  }
};

/// Owns whichever annotator/completer combination the flags picked.
struct AnnotatorBundle {
  std::unique_ptr<Completer> completer;
  std::unique_ptr<Annotator> annotator;

  Annotator& get() { return *annotator; }
};

AnnotatorBundle make_annotator(const Session& session, TrainLog* log) {
  AnnotatorBundle bundle;
  if (session.mock_annotator) {
    bundle.annotator = std::make_unique<MockOracleAnnotator>(MockOracleAnnotator::Options{}, log);
    return bundle;
  }
  AnnotatorConfig cfg = session.annotator_config();
  bundle.completer = std::make_unique<HttpCompleter>(cfg, log);
  bundle.annotator =
      std::make_unique<LlmAnnotator>(cfg, *bundle.completer, session.templates(cfg), log);
  return bundle;
}

std::map<std::string, bool> correctness_map(const Corpus& corpus) {
  std::map<std::string, bool> m;
  for (const auto& t : corpus)
    if (t.is_correct) m[t.id] = *t.is_correct;
  return m;
}

void write_taxonomy_snapshots(const fs::path& out, const Taxonomy& taxonomy, const TrainLog& log,
                              Session& session) {
  for (const auto& event : log.events_of_type("taxonomy_update")) {
    json j = json::parse(event.payload_json);
    int version = j.at("version").get<int>();
    size_t width = j.at("width").get<size_t>();
    Taxonomy snapshot = taxonomy.prefix(version, width);
    auto path = out / ("taxonomy_v" + std::to_string(version) + ".json");
    snapshot.save(path);
    session.write_marker(path);
  }
  taxonomy.save(out / "taxonomy.json");
  session.write_marker(out / "taxonomy.json");
}

void cmd_ingest(Session& session, const std::string& traces_path) {
  Corpus corpus = load_traces(traces_path);
  std::set<std::string> models, questions, datasets;
  size_t with_correctness = 0;
  for (const auto& t : corpus) {
    models.insert(t.model_id);
    questions.insert(t.question_id);
    datasets.insert(t.dataset_id);
    if (t.is_correct) ++with_correctness;
  }
  std::ostringstream line;
  line << "ingested " << corpus.size() << " trace(s), " << models.size() << " model(s), "
       << questions.size() << " question(s)";
  if (!session.out_dir.empty()) {
    ensure_dir(session.out());
    save_traces(session.out() / "traces.jsonl", corpus);
    session.write_marker(session.out() / "traces.jsonl");
    json j{{"traces", corpus.size()},
           {"models", json(models)},
           {"datasets", json(datasets)},
           {"questions", questions.size()},
           {"with_correctness", with_correctness}};
    write_file(session.out() / "ingest_report.json", j.dump(2) + "\n");
    session.write_marker(session.out() / "ingest_report.json");
  }
  session.result.summary_line = line.str();
}

void cmd_anonymize(Session& session, const std::string& traces_path,
                   const std::string& codebook_path) {
  Corpus corpus = load_traces(traces_path);
  Codebook codebook = Codebook::load(codebook_path);
  Corpus anonymized = anonymize(corpus, codebook);
  ensure_dir(session.out());
  save_traces(session.out() / "traces.jsonl", anonymized);
  session.write_marker(session.out() / "traces.jsonl");
  session.result.summary_line = "anonymized " + std::to_string(anonymized.size()) + " trace(s)";
}

void cmd_pair(Session& session, const std::string& traces_path, const std::string& model_a,
              const std::string& model_b) {
  Corpus corpus = load_traces(traces_path);
  PairingResult pairing = pair_traces(corpus, model_a, model_b);
  ensure_dir(session.out());
  save_pairs(session.out() / "pairs.jsonl", pairing.pairs);
  session.write_marker(session.out() / "pairs.jsonl");
  session.result.summary_line = "paired " + std::to_string(pairing.pairs.size()) +
                                " question(s), skipped " +
                                std::to_string(pairing.skipped_questions);
}

void cmd_split(Session& session, const std::string& pairs_path, double train_fraction) {
  auto pairs = load_pairs(pairs_path);
  PairSplit split = split_pairs(pairs, train_fraction, session.seed);
  ensure_dir(session.out());
  save_pairs(session.out() / "train.jsonl", split.train);
  save_pairs(session.out() / "test.jsonl", split.test);
  session.write_marker(session.out() / "train.jsonl");
  session.write_marker(session.out() / "test.jsonl");
  session.result.summary_line = "split " + std::to_string(pairs.size()) + " pair(s) into " +
                                std::to_string(split.train.size()) + " train / " +
                                std::to_string(split.test.size()) + " test";
}

void cmd_train(Session& session, const std::string& pairs_path, const std::string& encoding) {
  auto pairs = load_pairs(pairs_path);
  RunConfig cfg = session.run_config();
  if (!encoding.empty()) cfg.encoding = encoding_kind_from_string(encoding);

  const fs::path out = session.out();
  ensure_dir(out);
  TrainLog log;
  AnnotatorBundle annotator = make_annotator(session, &log);

  TrainResult result = train_lot(pairs, cfg, annotator.get(), log);

  cfg.save(out / "config.json");
  session.write_marker(out / "config.json");
  write_taxonomy_snapshots(out, result.taxonomy, log, session);
  result.model.save(out / "model.json");
  session.write_marker(out / "model.json");
  result.matrix.save(out / "encodings.tsv", feature_names(result.taxonomy));
  session.write_marker(out / "encodings.tsv");
  log.save_jsonl(out / "train_log.jsonl");
  session.write_marker(out / "train_log.jsonl");

  json report{{"pairs", pairs.size()},
              {"encoding", to_string(cfg.encoding)},
              {"taxonomy_version", result.taxonomy.version()},
              {"features", result.taxonomy.size()},
              {"train_accuracy", result.stats.final_train_accuracy},
              {"samples_seen", result.stats.samples_seen},
              {"iterations", result.stats.iterations},
              {"taxonomy_updates", result.stats.taxonomy_updates},
              {"skipped_pairs", result.stats.skipped_pairs},
              {"stop_reason", result.stats.stop_reason}};
  write_file(out / "report.json", report.dump(2) + "\n");
  session.write_marker(out / "report.json");

  std::ostringstream line;
  line << "trained " << result.taxonomy.size() << " feature(s) over "
       << result.stats.samples_seen << " sample(s); train accuracy "
       << result.stats.final_train_accuracy << " (" << result.stats.stop_reason << ")";
  session.result.summary_line = line.str();
}

void cmd_eval(Session& session, const std::string& run_dir, const std::string& pairs_path) {
  auto pairs = load_pairs(pairs_path);
  Taxonomy taxonomy = Taxonomy::load(fs::path(run_dir) / "taxonomy.json");
  ClassifierModel model = ClassifierModel::load(fs::path(run_dir) / "model.json");
  const fs::path out = session.out();
  ensure_dir(out);
  TrainLog log;
  AnnotatorBundle annotator = make_annotator(session, &log);
  EncodingMatrix encodings(model.kind, 1, 0);
  TestReport report = evaluate_on_test(taxonomy, model, pairs, annotator.get(), &log, &encodings,
                                       session.parallelism);
  report.save(out / "eval_report.json", "lot", model.kind);
  session.write_marker(out / "eval_report.json");
  encodings.save(out / "test_encodings.tsv", feature_names(taxonomy));
  session.write_marker(out / "test_encodings.tsv");
  log.save_jsonl(out / "eval_log.jsonl");
  session.write_marker(out / "eval_log.jsonl");
  std::ostringstream line;
  line << "test accuracy " << report.trace_accuracy << " over " << report.traces_evaluated
       << " trace(s), pair accuracy " << report.pair_accuracy;
  session.result.summary_line = line.str();
}

void cmd_analyze(Session& session, const std::string& encodings_path,
                 const std::string& traces_path) {
  LoadedEncodings loaded = EncodingMatrix::load(encodings_path);
  Corpus corpus = load_traces(traces_path);
  FeatureReport report =
      feature_report(loaded.matrix, loaded.feature_names, correctness_map(corpus));
  const fs::path out = session.out();
  ensure_dir(out);
  write_report_csv(out / "feature_report.csv", report);
  write_report_markdown(out / "feature_report.md", report);
  session.write_marker(out / "feature_report.csv");
  session.write_marker(out / "feature_report.md");
  session.result.summary_line = "analyzed " + std::to_string(report.rows.size()) +
                                " feature(s) over " + std::to_string(report.traces_used) +
                                " graded trace(s)";
}

void cmd_baseline_fixed(Session& session, const std::string& train_path,
                        const std::string& test_path, const std::string& encoding) {
  auto train = load_pairs(train_path);
  auto test = load_pairs(test_path);
  EncodingKind kind = encoding.empty() ? EncodingKind::bor : encoding_kind_from_string(encoding);

  const fs::path out = session.out();
  ensure_dir(out);
  TrainLog log;
  AnnotatorBundle annotator = make_annotator(session, &log);

  Taxonomy taxonomy = fixed_taxonomy();
  EncodingMatrix matrix(kind, taxonomy.version(), taxonomy.size());
  size_t skipped = 0;
  for (const auto& pair : train) {
    for (const ReasoningTrace* trace : {&pair.trace_a, &pair.trace_b}) {
      auto values = annotator.get().annotate(taxonomy, kind, *trace);
      if (!values) {
        ++skipped;
        continue;
      }
      Encoding row;
      row.trace_id = trace->id;
      row.taxonomy_version = taxonomy.version();
      row.kind = kind;
      row.values = std::move(*values);
      row.label = trace->label();
      matrix.append(std::move(row));
    }
  }
  RunConfig cfg = session.run_config();
  ClassifierModel model = fit_logistic(matrix.dense_observed(), cfg.classifier, cfg.seed);
  TestReport report =
      evaluate_on_test(taxonomy, model, test, annotator.get(), &log, nullptr, session.parallelism);

  taxonomy.save(out / "taxonomy.json");
  model.save(out / "model.json");
  report.save(out / "baseline_fixed_report.json", "fixed_taxonomy", kind);
  log.save_jsonl(out / "baseline_log.jsonl");
  for (const char* name :
       {"taxonomy.json", "model.json", "baseline_fixed_report.json", "baseline_log.jsonl"})
    session.write_marker(out / name);
  std::ostringstream line;
  line << "fixed-taxonomy baseline accuracy " << report.trace_accuracy;
  if (skipped > 0) line << " (" << skipped << " annotation(s) missing)";
  session.result.summary_line = line.str();
}

std::unique_ptr<Completer> make_baseline_completer(const Session& session, TrainLog* log) {
  if (session.mock_annotator) return std::make_unique<MockComparisonCompleter>();
  return std::make_unique<HttpCompleter>(session.annotator_config(), log);
}

void cmd_baseline_fsp(Session& session, const std::string& train_path,
                      const std::string& test_path, int max_shots) {
  auto train = load_pairs(train_path);
  auto test = load_pairs(test_path);
  if (max_shots < 1) throw Error("--max-shots must be >= 1");

  const fs::path out = session.out();
  ensure_dir(out);
  TrainLog log;
  AnnotatorConfig cfg = session.mock_annotator ? AnnotatorConfig{} : session.annotator_config();
  auto completer = make_baseline_completer(session, &log);
  BaselineClient client(cfg, *completer, session.templates(cfg), &log);

  json per_shot = json::array();
  double best_accuracy = -1.0;
  int best_shots = 0;
  for (int n = 1; n <= max_shots; ++n) {
    size_t correct = 0, total = 0;
    bool available = true;
    std::string unavailable_reason;
    for (const auto& pair : test) {
      uint64_t shot_seed = session.seed ^ fnv1a(pair.question_id) ^ static_cast<uint64_t>(n);
      std::vector<ShotExample> shots;
      try {
        shots = select_shots(train, static_cast<size_t>(n), pair.question_id, shot_seed);
        PairPrediction pred = client.fsp_classify(shots, pair);
        correct += pred.label_a == pair.trace_a.label() ? 1 : 0;
        correct += pred.label_b == pair.trace_b.label() ? 1 : 0;
      } catch (const BudgetError& e) {
        available = false;
        unavailable_reason = e.what();
        break;
      } catch (const ParseError& e) {
        warn(std::string("fsp: ") + e.what() + "; pair counted as misclassified");
      } catch (const Error& e) {
        available = false;  // e.g. not enough pairs for n shots
        unavailable_reason = e.what();
        break;
      }
      total += 2;
    }
    if (!available) {
      per_shot.push_back({{"shots", n}, {"available", false}, {"reason", unavailable_reason}});
      continue;
    }
    double accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    per_shot.push_back({{"shots", n}, {"available", true}, {"trace_accuracy", accuracy}});
    if (accuracy > best_accuracy) {
      best_accuracy = accuracy;
      best_shots = n;
    }
  }
  json report{{"method", "fsp"},
              {"per_shot", per_shot},
              {"best_shots", best_shots},
              {"best_trace_accuracy", best_accuracy < 0 ? json() : json(best_accuracy)}};
  write_file(out / "baseline_fsp_report.json", report.dump(2) + "\n");
  log.save_jsonl(out / "baseline_log.jsonl");
  session.write_marker(out / "baseline_fsp_report.json");
  session.write_marker(out / "baseline_log.jsonl");
  std::ostringstream line;
  if (best_shots > 0)
    line << "fsp best " << best_shots << "-shot accuracy " << best_accuracy;
  else
    line << "fsp: no shot count was available";
  session.result.summary_line = line.str();
}

void cmd_baseline_vml(Session& session, const std::string& train_path,
                      const std::string& test_path, int batch_size) {
  auto train = load_pairs(train_path);
  auto test = load_pairs(test_path);

  const fs::path out = session.out();
  ensure_dir(out);
  TrainLog log;
  AnnotatorConfig cfg = session.mock_annotator ? AnnotatorConfig{} : session.annotator_config();
  auto completer = make_baseline_completer(session, &log);
  BaselineClient client(cfg, *completer, session.templates(cfg), &log);

  DecisionRules rules = client.vml_train(train, batch_size, session.seed);
  size_t correct = 0, total = 0;
  for (const auto& pair : test) {
    try {
      PairPrediction pred = client.vml_classify(rules, pair);
      correct += pred.label_a == pair.trace_a.label() ? 1 : 0;
      correct += pred.label_b == pair.trace_b.label() ? 1 : 0;
    } catch (const ParseError& e) {
      warn(std::string("vml: ") + e.what() + "; pair counted as misclassified");
    }
    total += 2;
  }
  double accuracy = total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  write_file(out / "rules.txt", rules.rule_text + "\n");
  json report{{"method", "vml"},
              {"batch_size", batch_size},
              {"revision", rules.revision},
              {"trace_accuracy", accuracy}};
  write_file(out / "baseline_vml_report.json", report.dump(2) + "\n");
  log.save_jsonl(out / "baseline_log.jsonl");
  for (const char* name : {"rules.txt", "baseline_vml_report.json", "baseline_log.jsonl"})
    session.write_marker(out / name);
  std::ostringstream line;
  line << "vml revision " << rules.revision << " accuracy " << accuracy;
  session.result.summary_line = line.str();
}

void cmd_intervene(Session& session, const std::string& traces_path,
                   const std::string& questions_path, const std::string& plan_path,
                   const std::string& arms, int reps) {
  Corpus traces = load_traces(traces_path);
  auto questions = load_questions(questions_path);
  InterventionPlan plan = InterventionPlan::load(plan_path);
  const std::set<std::string> valid_arms = {"all", "original", "control", "modified"};
  if (!valid_arms.count(arms)) throw Error("--arms must be all|original|control|modified");

  const fs::path out = session.out();
  ensure_dir(out);

  std::unique_ptr<Completer> completer;
  std::unique_ptr<ReasoningClient> client;
  TrainLog log;
  if (session.mock_annotator) {
    client = std::make_unique<MockReasoningClient>();
  } else {
    AnnotatorConfig cfg = session.annotator_config();
    cfg.disable_thinking = true;  // the subject model runs in non-thinking mode
    completer = std::make_unique<HttpCompleter>(cfg, &log);
    client = std::make_unique<LlmReasoningClient>(cfg, *completer, session.templates(cfg), &log);
  }

  InterventionOutcome outcome =
      run_intervention(traces, questions, plan, *client, reps, session.seed, out);

  if (arms != "all") {
    for (const char* name : {"original", "control", "modified"})
      if (arms != name) fs::remove(out / ("arm_" + std::string(name) + ".jsonl"));
  }
  for (const auto& entry : fs::directory_iterator(out)) session.write_marker(entry.path());

  std::ostringstream line;
  line << "intervention over " << outcome.repetitions << " rep(s):";
  for (const auto& arm : outcome.arms) line << " " << arm.arm << "=" << arm.mean_accuracy;
  session.result.summary_line = line.str();
}

void cmd_report(Session& session, const std::string& run_dir) {
  const fs::path run(run_dir);
  const fs::path out = session.out_dir.empty() ? run : session.out();
  ensure_dir(out);
  std::ostringstream md;
  md << "# Run summary\n\n";

  const auto add_json_section = [&](const fs::path& file, const std::string& title) {
    if (!fs::exists(file)) return;
    json j = json::parse(read_file(file));
    md << "## " << title << "\n\n";
    md << "```json\n" << j.dump(2) << "\n```\n\n";
  };
  add_json_section(run / "config.json", "Configuration");
  add_json_section(run / "report.json", "Training");
  add_json_section(run / "eval_report.json", "Test evaluation");
  add_json_section(run / "baseline_fixed_report.json", "Fixed-taxonomy baseline");
  add_json_section(run / "baseline_fsp_report.json", "Few-shot baseline");
  add_json_section(run / "baseline_vml_report.json", "Rule-update baseline");
  add_json_section(run / "intervention_report.json", "Intervention");

  if (fs::exists(run / "taxonomy.json")) {
    Taxonomy taxonomy = Taxonomy::load(run / "taxonomy.json");
    md << "## Taxonomy (version " << taxonomy.version() << ", " << taxonomy.size()
       << " features)\n\n";
    for (const auto& f : taxonomy.features())
      md << "- **" << f.name << "**: " << f.definition << "\n";
    md << "\n";
  }
  if (fs::exists(run / "feature_report.csv"))
    md << "## Feature statistics\n\nSee [feature_report.csv](feature_report.csv) and "
          "[feature_report.md](feature_report.md).\n\n";

  write_file(out / "summary.md", md.str());
  session.write_marker(out / "summary.md");
  session.result.summary_line = "wrote " + (out / "summary.md").string();
}

}  // namespace

CommandResult dispatch(const std::vector<std::string>& args) {
  Session session;

  CLI::App app{"LOT: discover, classify, and intervene on reasoning-trace differences"};
  app.require_subcommand(1);
  app.fallthrough();

  app.add_option("--seed", session.seed, "Seed for every random choice")
      ->each([&](const std::string&) { session.seed_given = true; });
  app.add_option("--config", session.config_path, "JSON config file (run + annotator sections)");
  app.add_option("--out", session.out_dir, "Output directory for artifacts");
  app.add_option("--parallelism", session.parallelism, "Concurrent annotation calls")
      ->check(CLI::PositiveNumber);
  app.add_flag("--mock-annotator", session.mock_annotator,
               "Use the deterministic lexical mock instead of an HTTP endpoint");

  std::string traces_path, codebook_path, pairs_path, model_a, model_b, encoding;
  std::string run_dir, encodings_path, questions_path, plan_path, arms = "all";
  std::string baseline_train, baseline_test;
  double train_fraction = 0.8;
  int max_shots = 15, batch_size = 2, reps = 10;

  auto* ingest = app.add_subcommand("ingest", "Validate a trace file and report statistics");
  ingest->add_option("--traces", traces_path, "Trace file (JSONL)")->required();

  auto* anonymize_cmd = app.add_subcommand("anonymize", "Assign codenames from a codebook");
  anonymize_cmd->add_option("--traces", traces_path)->required();
  anonymize_cmd->add_option("--codebook", codebook_path)->required();

  auto* pair_cmd = app.add_subcommand("pair", "Pair traces of two models by question");
  pair_cmd->add_option("--traces", traces_path)->required();
  pair_cmd->add_option("--model-a", model_a)->required();
  pair_cmd->add_option("--model-b", model_b)->required();

  auto* split_cmd = app.add_subcommand("split", "Seeded train/test split over pairs");
  split_cmd->add_option("--pairs", pairs_path)->required();
  split_cmd->add_option("--train-fraction", train_fraction)->check(CLI::Range(0.0, 1.0));

  auto* train_cmd = app.add_subcommand("train", "Run the iterative taxonomy training loop");
  train_cmd->add_option("--pairs", pairs_path)->required();
  train_cmd->add_option("--encoding", encoding, "por or bor");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a trained run on held-out pairs");
  eval_cmd->add_option("--run", run_dir)->required();
  eval_cmd->add_option("--pairs", pairs_path)->required();

  auto* analyze_cmd = app.add_subcommand("analyze", "Feature statistics over test encodings");
  analyze_cmd->add_option("--encodings", encodings_path)->required();
  analyze_cmd->add_option("--traces", traces_path, "Trace file carrying correctness flags")
      ->required();

  auto* baseline = app.add_subcommand("baseline", "Comparison methods");
  baseline->require_subcommand(1);
  auto* fixed_cmd = baseline->add_subcommand("fixed", "Human-defined four-behavior taxonomy");
  fixed_cmd->add_option("--train", baseline_train)->required();
  fixed_cmd->add_option("--test", baseline_test)->required();
  fixed_cmd->add_option("--encoding", encoding);
  auto* fsp_cmd = baseline->add_subcommand("fsp", "Few-shot prompting sweep");
  fsp_cmd->add_option("--train", baseline_train)->required();
  fsp_cmd->add_option("--test", baseline_test)->required();
  fsp_cmd->add_option("--max-shots", max_shots);
  auto* vml_cmd = baseline->add_subcommand("vml", "Verbalized decision-rule baseline");
  vml_cmd->add_option("--train", baseline_train)->required();
  vml_cmd->add_option("--test", baseline_test)->required();
  vml_cmd->add_option("--batch-size", batch_size);

  auto* intervene_cmd = app.add_subcommand("intervene", "Summarize, edit, and re-expand traces");
  intervene_cmd->add_option("--traces", traces_path)->required();
  intervene_cmd->add_option("--questions", questions_path)->required();
  intervene_cmd->add_option("--plan", plan_path)->required();
  intervene_cmd->add_option("--arms", arms, "all|original|control|modified");
  intervene_cmd->add_option("--reps", reps)->check(CLI::PositiveNumber);

  auto* report_cmd = app.add_subcommand("report", "Render a run directory into summaries");
  report_cmd->add_option("--run", run_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help() << std::endl;
    return CommandResult{0, {}, "help"};
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help() << std::endl;
    return CommandResult{2, {}, std::string("usage error: ") + e.what()};
  }

  try {
    if (ingest->parsed()) cmd_ingest(session, traces_path);
    if (anonymize_cmd->parsed()) cmd_anonymize(session, traces_path, codebook_path);
    if (pair_cmd->parsed()) cmd_pair(session, traces_path, model_a, model_b);
    if (split_cmd->parsed()) cmd_split(session, pairs_path, train_fraction);
    if (train_cmd->parsed()) cmd_train(session, pairs_path, encoding);
    if (eval_cmd->parsed()) cmd_eval(session, run_dir, pairs_path);
    if (analyze_cmd->parsed()) cmd_analyze(session, encodings_path, traces_path);
    if (baseline->parsed()) {
      if (fixed_cmd->parsed()) cmd_baseline_fixed(session, baseline_train, baseline_test, encoding);
      if (fsp_cmd->parsed()) cmd_baseline_fsp(session, baseline_train, baseline_test, max_shots);
      if (vml_cmd->parsed()) cmd_baseline_vml(session, baseline_train, baseline_test, batch_size);
    }
    if (intervene_cmd->parsed())
      cmd_intervene(session, traces_path, questions_path, plan_path, arms, reps);
    if (report_cmd->parsed()) cmd_report(session, run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    session.result.exit_code = 1;
    session.result.summary_line = std::string("error: ") + e.what();
    return session.result;
  }
  return session.result;
}

}  // namespace lot::cli
