#pragma once

#include <optional>
#include <string>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/llm_gateway.hpp"
#include "reliasql/prompts.hpp"
#include "reliasql/sqlite_db.hpp"

namespace reliasql {

enum class VoteMode { ByQueryText, ByExecutionResult };

VoteMode vote_mode_from_string(std::string_view text);  // "text" | "result"
std::string_view to_string(VoteMode mode);

struct AlignmentOptions {
  std::string model_tag = "gpt-4-turbo";
  int max_output_tokens = 8;
};

/// First "yes"/"no" word of a reply; nullopt when neither appears first.
std::optional<bool> parse_yes_no(std::string_view reply);

/// Asks the model whether `sql` captures the intent of `question`. Fails open:
/// unparseable replies and gateway errors count as aligned.
bool alignment_check(const std::string& question, const std::string& sql, LlmGateway& gateway,
                     const PromptTemplates& prompts, const AlignmentOptions& options = {});

/// Collapses whitespace runs to one space and trims.
std::string normalize_whitespace(std::string_view text);

/// Largest group wins; ties prefer a non-null group, then the group whose
/// first member came earliest. The winner is the earliest member of its group.
/// ByExecutionResult groups by sorted result rows and needs `db`; candidates
/// that fail to execute join the abstention group.
SqlOrNull majority_vote(const std::vector<SqlOrNull>& candidates, VoteMode mode, const Database* db = nullptr,
                        int timeout_ms = 30000);

}  // namespace reliasql
