#include "reliasql/sql_generator.hpp"

#include "reliasql/error.hpp"
#include "reliasql/sql_analysis.hpp"
#include "reliasql/sql_lexer.hpp"

namespace reliasql {

void validate(const GenerationConfig& config) {
  if (config.ensemble_size < 1) throw ValidationError("ensemble_size must be at least 1");
  if (config.temperature && *config.temperature < 0.0) throw ValidationError("temperature must be non-negative");
  if (config.fine_tuned_backend && config.few_shot_k != 0)
    throw ValidationError("a fine-tuned backend is prompted without few-shot examples (few_shot_k must be 0)");
}

namespace {

std::string examples_section(const std::vector<FewShotExample>& few_shot) {
  if (few_shot.empty()) return {};
  std::string out = "### Examples\n";
  for (const auto& ex : few_shot) out += "Question: " + ex.question + "\nSQL: " + ex.sql + "\n\n";
  return out;
}

ChatRequest build_prompt(const std::string& question, const GenerationConfig& config,
                         const std::vector<FewShotExample>& few_shot, const PromptTemplates& prompts,
                         const std::string& tables) {
  if (few_shot.size() != config.few_shot_k)
    throw ValidationError("expected " + std::to_string(config.few_shot_k) + " few-shot examples, got " +
                          std::to_string(few_shot.size()));
  ChatRequest req;
  req.system_text = prompts.generate_system;
  req.user_text = fill_template(prompts.generate_user, {{"task", trim(prompts.task)},
                                                        {"tables", tables},
                                                        {"examples", examples_section(few_shot)},
                                                        {"question", question}});
  req.temperature = config.effective_temperature();
  req.max_output_tokens = config.max_output_tokens;
  req.model_tag = config.model_tag;
  return req;
}

}  // namespace

ChatRequest build_stage1_prompt(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, const std::vector<FewShotExample>& few_shot,
                                const PromptTemplates& prompts) {
  return build_prompt(question, config, few_shot, prompts, render_brief(catalog, config.format));
}

ChatRequest build_stage2_prompt(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, const std::vector<FewShotExample>& few_shot,
                                const PromptTemplates& prompts, const std::set<std::string>& tables) {
  if (tables.empty()) return build_stage1_prompt(question, catalog, config, few_shot, prompts);
  return build_prompt(question, config, few_shot, prompts, render_detailed(catalog, tables));
}

ExtractedTables extract_tables(const std::string& sql_text, const SchemaCatalog& catalog) {
  if (trim(sql_text).empty()) throw ParseError("empty SQL text", 0);
  const auto structure = sql::analyze_query(sql_text);
  ExtractedTables out;
  for (const auto& ref : structure.tables) {
    if (const TableInfo* t = catalog.find_table(ref.name)) {
      out.known.insert(t->name);
    } else if (!structure.cte_names.count(to_lower(ref.name))) {
      out.unknown.insert(ref.name);
    }
  }
  return out;
}

SqlOrNull postprocess_completion(const std::string& text) {
  std::string body = trim(text);
  if (auto fence = body.find("```"); fence != std::string::npos) {
    auto line_end = body.find('\n', fence);
    auto start = line_end == std::string::npos ? body.size() : line_end + 1;
    auto close = body.find("```", start);
    body = body.substr(start, close == std::string::npos ? std::string::npos : close - start);
  }
  body = sql::first_statement(body);
  while (!body.empty() && body.back() == ';') body = trim(body.substr(0, body.size() - 1));
  if (body.empty() || to_lower(body) == "null") return SqlOrNull::null();
  return SqlOrNull::query(body);
}

std::vector<Candidate> generate(const std::string& question, const SchemaCatalog& catalog,
                                const GenerationConfig& config, LlmGateway& gateway,
                                const std::vector<FewShotExample>& few_shot, const PromptTemplates& prompts) {
  validate(config);
  std::vector<Candidate> drafts, reflected;
  for (int member = 0; member < config.ensemble_size; ++member) {
    Candidate draft{SqlOrNull::null(), Stage::Stage1, member, {}};
    try {
      ChatRequest req = build_stage1_prompt(question, catalog, config, few_shot, prompts);
      req.sample_index = member;
      draft.prediction = postprocess_completion(gateway.complete(req).text);
    } catch (const Error& e) {
      draft.add_note(std::string("stage1 failed: ") + e.what());
    }
    if (config.reflect) {
      Candidate second{SqlOrNull::null(), Stage::Stage1, member, {}};
      second.advance(Stage::Reflected);
      if (!draft.notes.empty()) {
        second.add_note("skipped: stage1 failed");
      } else {
        std::set<std::string> tables;
        if (draft.prediction.is_query()) {
          try {
            auto extracted = extract_tables(draft.prediction.sql(), catalog);
            tables = std::move(extracted.known);
            if (!extracted.unknown.empty()) {
              std::string names;
              for (const auto& u : extracted.unknown) names += (names.empty() ? "" : ",") + u;
              second.add_note("unknown tables in draft: " + names);
            }
          } catch (const ParseError&) {
            second.add_note("draft not parseable; brief table listing kept");
          }
        }
        try {
          ChatRequest req = build_stage2_prompt(question, catalog, config, few_shot, prompts, tables);
          req.sample_index = member;
          second.prediction = postprocess_completion(gateway.complete(req).text);
        } catch (const Error& e) {
          second.prediction = SqlOrNull::null();
          second.add_note(std::string("reflection failed: ") + e.what());
        }
      }
      reflected.push_back(std::move(second));
    }
    drafts.push_back(std::move(draft));
  }
  std::vector<Candidate> out;
  for (std::size_t m = 0; m < drafts.size(); ++m) {
    out.push_back(std::move(drafts[m]));
    if (config.reflect) out.push_back(std::move(reflected[m]));
  }
  return out;
}

}  // namespace reliasql
