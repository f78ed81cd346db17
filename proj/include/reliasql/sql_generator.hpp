#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/llm_gateway.hpp"
#include "reliasql/prompts.hpp"
#include "reliasql/schema_catalog.hpp"

namespace reliasql {

struct GenerationConfig {
  RenderFormat format = RenderFormat::NaturalLanguage;
  std::size_t few_shot_k = 3;
  /// Unset: 0.7 for ensembles, 0 for a single member.
  std::optional<double> temperature;
  int ensemble_size = 1;
  /// Fine-tuned backends are prompted without neighbor examples.
  bool fine_tuned_backend = false;
  bool reflect = true;
  std::string model_tag = "gpt-3.5-turbo";
  int max_output_tokens = 512;

  double effective_temperature() const { return temperature ? *temperature : (ensemble_size > 1 ? 0.7 : 0.0); }
};

/// Throws ValidationError for ensemble_size < 1, a negative temperature, or
/// few-shot examples requested for a fine-tuned backend.
void validate(const GenerationConfig& config);

struct FewShotExample {
  std::string question;
  std::string sql;
};

/// Task outline, brief table listing, examples, then the question.
ChatRequest build_stage1_prompt(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, const std::vector<FewShotExample>& few_shot,
                                const PromptTemplates& prompts);

/// Same as stage 1 with the table section replaced by column detail for
/// `tables`. An empty set keeps the brief listing.
ChatRequest build_stage2_prompt(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, const std::vector<FewShotExample>& few_shot,
                                const PromptTemplates& prompts, const std::set<std::string>& tables);

struct ExtractedTables {
  std::set<std::string> known;    // catalog spelling
  std::set<std::string> unknown;  // as written
};

/// Tables named in FROM/JOIN at any depth; aliases and CTE names are not
/// tables. Throws ParseError for text that is not a SELECT query.
ExtractedTables extract_tables(const std::string& sql_text, const SchemaCatalog& catalog);

/// Strips code fences, keeps the first statement without its semicolon;
/// blank text or "null" becomes the abstention.
SqlOrNull postprocess_completion(const std::string& text);

/// Two passes per ensemble member: a draft from the brief listing, then a
/// regeneration with detail for the tables the draft used. Output holds, per
/// member, its Stage1 candidate followed by its Reflected one.
std::vector<Candidate> generate(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, LlmGateway& gateway,
                                const std::vector<FewShotExample>& few_shot, const PromptTemplates& prompts);

}  // namespace reliasql
