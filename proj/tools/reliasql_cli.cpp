// reliasql command-line entry point: one subcommand per pipeline stage plus
// `run` for the whole chain.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "reliasql/corpus_analyzer.hpp"
#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"
#include "reliasql/evaluator.hpp"
#include "reliasql/pipeline.hpp"
#include "reliasql/verifier.hpp"

namespace fs = std::filesystem;
using namespace reliasql;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

// Flags shared by every subcommand. Unset flags leave config-file values alone.
struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> questions, labels, db, catalog, out, prompts, lexicons;
  std::optional<std::string> train_questions, train_labels, vocab, stub_rules, cache, mode, miss_policy;
  std::optional<std::string> format, vote, penalties;
  std::optional<int> ensemble_size;
  std::optional<std::size_t> few_shot_k;
  std::optional<double> temperature;
  bool no_templatize = false, no_reflect = false, no_verify = false, no_ensemble = false;
  bool no_patient_gate = false, vocab_gate = false, fine_tuned = false;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "JSON config file");
  app->add_option("--seed", f.seed, "Random seed");
  app->add_option("--jobs", f.jobs, "Worker threads");
}

void add_paths(CLI::App* app, CommonFlags& f) {
  app->add_option("--catalog", f.catalog, "Schema catalog JSON");
  app->add_option("--db", f.db, "SQLite database");
  app->add_option("--prompts", f.prompts, "Prompt template directory");
  app->add_option("--lexicons", f.lexicons, "Value lexicon JSON");
  app->add_option("--train-questions", f.train_questions, "Training questions (templates, few-shot pool)");
  app->add_option("--train-labels", f.train_labels, "Training labels");
  app->add_option("--vocab", f.vocab, "Unanswerable vocabulary JSON array");
  app->add_option("--stub-rules", f.stub_rules, "Stub gateway rules JSON");
  app->add_option("--cache", f.cache, "Response cache (JSON lines)");
  app->add_option("--mode", f.mode, "Gateway mode: live, replay or stub");
  app->add_option("--miss-policy", f.miss_policy, "Replay miss policy: strict or empty");
  app->add_option("--format", f.format, "Schema rendering: natural or ddl");
  app->add_option("--ensemble-size", f.ensemble_size, "Ensemble members");
  app->add_option("--few-shot", f.few_shot_k, "Few-shot examples per prompt");
  app->add_option("--temperature", f.temperature, "Sampling temperature");
  app->add_option("--vote", f.vote, "Vote by: text or result");
  app->add_flag("--fine-tuned", f.fine_tuned, "Fine-tuned backend (no few-shot examples)");
  app->add_flag("--no-templatize", f.no_templatize, "Skip question rewriting");
  app->add_flag("--no-reflect", f.no_reflect, "Skip the second generation pass");
  app->add_flag("--no-verify", f.no_verify, "Skip execution checks and repair");
  app->add_flag("--no-ensemble", f.no_ensemble, "Single member, no alignment check");
  app->add_flag("--no-patient-gate", f.no_patient_gate, "Disable the patient-number gate");
  app->add_flag("--vocab-gate", f.vocab_gate, "Enable the unanswerable-vocabulary gate");
}

PipelineConfig build_config(const CommonFlags& f) {
  PipelineConfig c = f.config.empty() ? parse_pipeline_config("{}") : load_pipeline_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.jobs) c.jobs = *f.jobs;
  if (f.questions) c.questions = *f.questions;
  if (f.labels) c.labels = fs::path(*f.labels);
  if (f.db) c.database = *f.db;
  if (f.catalog) c.catalog = *f.catalog;
  if (f.out) c.output = *f.out;
  if (f.prompts) c.prompts_dir = *f.prompts;
  if (f.lexicons) c.lexicons = fs::path(*f.lexicons);
  if (f.train_questions) c.train_questions = fs::path(*f.train_questions);
  if (f.train_labels) c.train_labels = fs::path(*f.train_labels);
  if (f.vocab) c.unanswerable_vocab = fs::path(*f.vocab);
  if (f.stub_rules) c.stub_rules = fs::path(*f.stub_rules);
  if (f.cache) c.gateway.cache_path = fs::path(*f.cache);
  if (f.mode) c.gateway.mode = gateway_mode_from_string(*f.mode);
  if (f.miss_policy) {
    if (*f.miss_policy == "strict") c.gateway.miss_policy = MissPolicy::Strict;
    else if (*f.miss_policy == "empty") c.gateway.miss_policy = MissPolicy::Empty;
    else throw ConfigError("unknown miss policy: " + *f.miss_policy);
  }
  if (f.format) c.generation.format = render_format_from_string(*f.format);
  if (f.ensemble_size) c.generation.ensemble_size = *f.ensemble_size;
  if (f.few_shot_k) c.generation.few_shot_k = *f.few_shot_k;
  if (f.temperature) c.generation.temperature = *f.temperature;
  if (f.fine_tuned) {
    c.generation.fine_tuned_backend = true;
    c.generation.few_shot_k = 0;
  }
  if (f.vote) c.vote_mode = vote_mode_from_string(*f.vote);
  if (f.penalties) c.penalties = parse_penalties(*f.penalties);
  if (f.no_templatize) c.toggles.templatize = false;
  if (f.no_reflect) c.toggles.reflect = false;
  if (f.no_verify) c.toggles.verify = false;
  if (f.no_ensemble) c.toggles.ensemble = false;
  if (f.no_patient_gate) c.toggles.gates.patient_id = false;
  if (f.vocab_gate) c.toggles.gates.vocabulary = true;
  c.generation.reflect = c.toggles.reflect;
  return c;
}

std::vector<QuestionRecord> read_questions(const PipelineConfig& c) {
  if (c.questions.empty()) throw ConfigError("no questions file given");
  return load_dataset(c.questions).questions;
}

fs::path require_out(const PipelineConfig& c) {
  if (c.output.empty()) throw ConfigError("no output path given (--out)");
  return c.output;
}

void print_report(const RSReport& report, const std::optional<std::string>& out) {
  std::string text = report_json(report);
  if (out) write_text_file(*out, text);
  else std::cout << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reliability-first text-to-SQL pipeline"};
  app.set_version_flag("--version", std::string(RELIASQL_VERSION));
  app.require_subcommand(1);
  CommonFlags f;

  auto* templatize_cmd = app.add_subcommand("templatize", "Mask values and rewrite questions into template style");
  auto* generate_cmd = app.add_subcommand("generate", "Generate candidate SQL per question");
  auto* verify_cmd = app.add_subcommand("verify", "Gate, execute and repair candidates");
  auto* ensemble_cmd = app.add_subcommand("ensemble", "Alignment check and majority vote into predictions");
  auto* score_cmd = app.add_subcommand("score", "Reliability score of predictions against gold labels");
  auto* analyze_cmd = app.add_subcommand("analyze", "N-gram statistics and unanswerable categories");
  auto* split_cmd = app.add_subcommand("split", "Stratified k-fold assignment");
  auto* run_cmd = app.add_subcommand("run", "Whole pipeline, then scoring when labels are given");

  std::string candidates_in;
  for (auto* cmd : {templatize_cmd, generate_cmd, verify_cmd, ensemble_cmd, run_cmd}) {
    add_common(cmd, f);
    add_paths(cmd, f);
    cmd->add_option("--questions", f.questions, "Questions file (raw or stage file)");
    cmd->add_option("--out", f.out, "Output file");
  }
  for (auto* cmd : {verify_cmd, ensemble_cmd})
    cmd->add_option("--candidates", candidates_in, "Candidates file from the previous stage")->required();
  run_cmd->add_option("--labels", f.labels, "Gold labels; enables scoring");
  run_cmd->add_option("--penalties", f.penalties, "Penalty list, e.g. 0,5,10,N");

  std::string pred_path, gold_path, score_db;
  std::string penalty_text = "0,5,10,N";
  std::optional<std::string> score_out;
  bool score_table = false;
  add_common(score_cmd, f);
  score_cmd->add_option("--pred", pred_path, "Predictions file")->required();
  score_cmd->add_option("--gold", gold_path, "Gold labels file")->required();
  score_cmd->add_option("--db", score_db, "SQLite database")->required();
  score_cmd->add_option("--penalties", penalty_text, "Penalty list");
  score_cmd->add_option("--out", score_out, "Write the JSON report here instead of stdout");
  score_cmd->add_flag("--table", score_table, "Also print a readable table to stderr");

  std::string analyze_questions, split_name = "train";
  std::optional<std::string> analyze_labels, analyze_json, vocab_out;
  std::vector<int> ns{1, 2, 3};
  std::size_t top = 10;
  bool unanswerable_only = false;
  add_common(analyze_cmd, f);
  analyze_cmd->add_option("--questions", analyze_questions, "Questions file")->required();
  analyze_cmd->add_option("--labels", analyze_labels, "Labels file");
  analyze_cmd->add_option("--split", split_name, "Split name for the report");
  analyze_cmd->add_option("--n", ns, "N-gram orders (1-3)");
  analyze_cmd->add_option("--top", top, "Entries per table");
  analyze_cmd->add_flag("--unanswerable", unanswerable_only, "Only questions labeled unanswerable");
  analyze_cmd->add_option("--json", analyze_json, "Write a JSON report here");
  analyze_cmd->add_option("--vocab-out", vocab_out, "Write the unanswerable vocabulary here");

  std::string split_questions, split_labels, split_out;
  int k = 5;
  add_common(split_cmd, f);
  split_cmd->add_option("--questions", split_questions, "Questions file")->required();
  split_cmd->add_option("--labels", split_labels, "Labels file")->required();
  split_cmd->add_option("--k", k, "Number of folds");
  split_cmd->add_option("--out", split_out, "Fold assignment file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*templatize_cmd) {
      PipelineConfig c = build_config(f);
      PipelineResources res(c);
      write_questions(require_out(c), run_templatize_stage(read_questions(c), res));
    } else if (*generate_cmd) {
      PipelineConfig c = build_config(f);
      PipelineResources res(c);
      write_candidates(require_out(c), run_generate_stage(read_questions(c), res));
    } else if (*verify_cmd) {
      PipelineConfig c = build_config(f);
      if (c.database.empty()) throw ConfigError("no database path given (--db)");
      if (!fs::exists(c.database)) throw ConfigError("database not found: " + c.database.string());
      PipelineResources res(c);
      write_candidates(require_out(c), run_verify_stage(read_questions(c), load_candidates(candidates_in), res));
    } else if (*ensemble_cmd) {
      PipelineConfig c = build_config(f);
      PipelineResources res(c);
      write_predictions(require_out(c), run_ensemble_stage(read_questions(c), load_candidates(candidates_in), res));
    } else if (*run_cmd) {
      RunResult r = run_pipeline(build_config(f));
      if (r.report) std::cerr << report_table(*r.report);
    } else if (*score_cmd) {
      if (!fs::exists(score_db)) throw ConfigError("database not found: " + score_db);
      Database db = Database::open(score_db);
      PredictionMap golds_raw = load_predictions(gold_path);
      std::map<std::string, GoldLabel> golds;
      for (auto& [id, answer] : golds_raw) golds.emplace(id, GoldLabel{id, answer});
      RSReport report = score(load_predictions(pred_path), golds, db, parse_penalties(penalty_text));
      print_report(report, score_out);
      if (score_table) std::cerr << report_table(report);
    } else if (*analyze_cmd) {
      Dataset ds = load_dataset(analyze_questions, analyze_labels ? std::optional<fs::path>(*analyze_labels) : std::nullopt,
                                split_name);
      if (unanswerable_only && !ds.labels) throw ConfigError("--unanswerable needs --labels");
      std::vector<Tokens> corpus;
      std::vector<const QuestionRecord*> unanswerable;
      for (const auto& q : ds.questions) {
        bool una = ds.labels && ds.labels->count(q.id) && !ds.labels->at(q.id).answerable();
        if (una) unanswerable.push_back(&q);
        if (unanswerable_only && !una) continue;
        corpus.push_back(preprocess(q.raw_text));
      }
      nlohmann::json report = {{"split", split_name}, {"questions", corpus.size()}};
      for (int n : ns) {
        NGramTable table = ngram_counts(corpus, n);
        std::cout << "Top " << top << " " << n << "-grams (" << split_name << ")\n" << render_top(table, top) << "\n";
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < table.counts.size() && i < top; ++i)
          rows.push_back({{"gram", table.counts[i].first}, {"count", table.counts[i].second}});
        report["ngrams"][std::to_string(n)] = rows;
      }
      if (ds.labels) {
        std::map<std::string, std::size_t> counts;
        for (const auto* q : unanswerable) ++counts[std::string(to_string(categorize_unanswerable(*q)))];
        std::cout << "Unanswerable categories\n";
        for (const auto& [name, count] : counts) std::cout << "  " << name << ": " << count << "\n";
        report["unanswerable_categories"] = counts;
      }
      if (analyze_json) write_text_file(*analyze_json, report.dump(2) + "\n");
      if (vocab_out) {
        std::vector<Tokens> una_corpus;
        for (const auto* q : unanswerable) una_corpus.push_back(preprocess(q->raw_text));
        if (!ds.labels) throw ConfigError("--vocab-out needs --labels");
        auto vocab = unanswerable_vocab(una_corpus);
        write_text_file(*vocab_out, nlohmann::json(vocab).dump() + "\n");
      }
    } else if (*split_cmd) {
      Dataset ds = load_dataset(split_questions, fs::path(split_labels), "train");
      std::uint64_t seed = f.seed.value_or(0);
      if (!f.config.empty() && !f.seed) seed = load_pipeline_config(f.config).seed;
      Categorizer by_label = [&](const std::string& id) -> std::string {
        const auto& label = ds.labels->at(id);
        if (label.answerable()) return "answerable";
        return std::string(to_string(categorize_unanswerable(*ds.find(id))));
      };
      write_folds(split_out, stratified_kfold(ds, k, by_label, seed), seed);
    }
  } catch (const ConfigError& e) {
    std::cerr << "reliasql: configuration error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "reliasql: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
