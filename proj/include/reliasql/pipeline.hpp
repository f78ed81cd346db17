#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/dataset_io.hpp"
#include "reliasql/ensembler.hpp"
#include "reliasql/evaluator.hpp"
#include "reliasql/llm_gateway.hpp"
#include "reliasql/prompts.hpp"
#include "reliasql/schema_catalog.hpp"
#include "reliasql/sql_generator.hpp"
#include "reliasql/templatizer.hpp"
#include "reliasql/verifier.hpp"

namespace reliasql {

struct StageToggles {
  bool templatize = true;
  bool reflect = true;
  bool verify = true;
  bool ensemble = true;
  GateFlags gates;
};

struct EmbeddingConfig {
  std::string provider = "hashing";  // "hashing" | "remote"
  std::size_t dim = 512;
  std::string endpoint = "https://api.openai.com/v1/embeddings";
  std::string model = "text-embedding-3-small";
};

struct PipelineConfig {
  std::filesystem::path questions;
  std::optional<std::filesystem::path> labels;
  std::filesystem::path database;
  std::filesystem::path catalog;
  std::filesystem::path output;
  std::filesystem::path prompts_dir;
  std::optional<std::filesystem::path> lexicons;
  std::optional<std::filesystem::path> train_questions;  // few-shot pool and template source
  std::optional<std::filesystem::path> train_labels;
  std::optional<std::filesystem::path> unanswerable_vocab;  // JSON array of tokens
  std::optional<std::filesystem::path> stub_rules;

  StageToggles toggles;
  GatewayConfig gateway;
  GenerationConfig generation;
  EmbeddingConfig embedding;
  TemplatizeOptions templatize_options;
  AlignmentOptions alignment_options;
  VoteMode vote_mode = VoteMode::ByQueryText;
  std::vector<Penalty> penalties = default_penalties();
  std::size_t template_k = 3;
  bool embed_raw_text = false;
  int timeout_ms = kDefaultTimeoutMs;
  std::uint64_t seed = 0;
  int jobs = 0;  // 0: number of processors (at most 8 against a live endpoint)

  int effective_jobs() const;
};

/// Reads a JSON config; relative paths resolve against the config file's directory.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const std::string& json_text, const std::filesystem::path& base_dir = {});
/// Effective configuration as JSON (for manifests).
std::string config_json(const PipelineConfig& config);

/// Per-question candidate lists, in generation order.
using CandidateMap = std::map<std::string, std::vector<Candidate>>;

std::string serialize_candidates(const CandidateMap& candidates);
void write_candidates(const std::filesystem::path& path, const CandidateMap& candidates);
CandidateMap load_candidates(const std::filesystem::path& path);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Exceptions are rethrown.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Shared, immutable resources for the stages, loaded from a config.
class PipelineResources {
 public:
  explicit PipelineResources(const PipelineConfig& config, std::shared_ptr<Transport> transport = nullptr);

  const PipelineConfig& config() const noexcept { return config_; }
  const SchemaCatalog& catalog() const noexcept { return catalog_; }
  const PromptTemplates& prompts() const noexcept { return prompts_; }
  LlmGateway& gateway() noexcept { return *gateway_; }
  const LlmGateway& gateway() const noexcept { return *gateway_; }

  /// Lazily built on first use.
  const ValueIndex& value_index();
  const TemplateIndex& template_index();
  std::vector<FewShotExample> few_shot_for(const std::string& question);
  const std::set<std::string>* unanswerable_vocab() const { return vocab_ ? &*vocab_ : nullptr; }
  Embedder& embedder() { return *embedder_; }
  const Lexicons& lexicons() const noexcept { return lexicons_; }

 private:
  void load_training();

  PipelineConfig config_;
  SchemaCatalog catalog_;
  PromptTemplates prompts_;
  std::unique_ptr<LlmGateway> gateway_;
  std::unique_ptr<Embedder> embedder_;
  Lexicons lexicons_;
  std::optional<std::set<std::string>> vocab_;
  std::optional<ValueIndex> value_index_;
  std::optional<Dataset> training_;
  std::optional<TemplateIndex> template_index_;
  std::optional<TemplateIndex> question_index_;
  std::mutex lazy_mu_;
};

std::vector<QuestionRecord> run_templatize_stage(const std::vector<QuestionRecord>& questions, PipelineResources& res);
CandidateMap run_generate_stage(const std::vector<QuestionRecord>& questions, PipelineResources& res);
CandidateMap run_verify_stage(const std::vector<QuestionRecord>& questions, const CandidateMap& candidates,
                              PipelineResources& res);
PredictionMap run_ensemble_stage(const std::vector<QuestionRecord>& questions, const CandidateMap& candidates,
                                 PipelineResources& res);

struct RunResult {
  PredictionMap predictions;
  std::optional<RSReport> report;
  std::filesystem::path predictions_path;
  std::optional<std::filesystem::path> report_path;
  std::filesystem::path manifest_path;
};

/// Full pipeline: templatize, generate, verify, ensemble, then score when labels are given.
RunResult run_pipeline(const PipelineConfig& config, std::shared_ptr<Transport> transport = nullptr);

/// `<output minus extension><suffix>`, e.g. predictions.report.json.
std::filesystem::path sibling_path(const std::filesystem::path& output, const std::string& suffix);

}  // namespace reliasql
