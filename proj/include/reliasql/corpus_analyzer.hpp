#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reliasql/core.hpp"

namespace reliasql {

using Tokens = std::vector<std::string>;

/// Drops '.', ',' and '?', lowercases, splits on whitespace and removes the
/// articles "the", "a" and "an". Other punctuation stays.
Tokens preprocess(std::string_view text);

struct NGramTable {
  int n = 1;
  /// Count non-increasing, ties by gram in lexicographic order.
  std::vector<std::pair<Tokens, std::size_t>> counts;

  std::size_t count_of(const Tokens& gram) const;
};

/// Sliding-window n-grams inside each question, n in {1, 2, 3}.
NGramTable ngram_counts(const std::vector<Tokens>& corpus, int n);

/// Python tuple spelling, e.g. ('since', '1', 'year') or ("today's",).
std::string format_gram(const Tokens& gram);

/// Top-k entries as "('patient',): 3205" lines.
std::string render_top(const NGramTable& table, std::size_t k);

enum class UnansCategory { IncorrectPatientNumber, RequireExternalKnowledge, OutOfEhrKnowledgeBase, Uncategorized };

std::string_view to_string(UnansCategory category);

/// Token sequences whose presence marks a question as needing outside knowledge.
struct CategoryCues {
  std::vector<Tokens> external_knowledge;
  static CategoryCues defaults();  // protocol, protocols, checklist, "what to do before"
};

/// Heuristic category for a question labeled unanswerable.
UnansCategory categorize_unanswerable(const QuestionRecord& record, const CategoryCues& cues = CategoryCues::defaults());

/// Union of the tokens of every question in `corpus`.
std::set<std::string> unanswerable_vocab(const std::vector<Tokens>& corpus);

}  // namespace reliasql
