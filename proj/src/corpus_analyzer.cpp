#include "reliasql/corpus_analyzer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "reliasql/error.hpp"
#include "reliasql/verifier.hpp"

namespace reliasql {

Tokens preprocess(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text)
    if (c != '.' && c != ',' && c != '?') cleaned.push_back(c);
  std::istringstream in(to_lower(cleaned));
  Tokens out;
  std::string word;
  while (in >> word)
    if (word != "the" && word != "a" && word != "an") out.push_back(word);
  return out;
}

std::size_t NGramTable::count_of(const Tokens& gram) const {
  for (const auto& [g, c] : counts)
    if (g == gram) return c;
  return 0;
}

NGramTable ngram_counts(const std::vector<Tokens>& corpus, int n) {
  if (n < 1 || n > 3) throw ValidationError("n-gram order must be 1, 2 or 3");
  std::map<Tokens, std::size_t> counts;
  const auto width = static_cast<std::size_t>(n);
  for (const auto& tokens : corpus) {
    if (tokens.size() < width) continue;
    for (std::size_t i = 0; i + width <= tokens.size(); ++i)
      ++counts[Tokens(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + width))];
  }
  NGramTable table;
  table.n = n;
  table.counts.assign(counts.begin(), counts.end());
  // map order is lexicographic already; stable sort keeps it within equal counts
  std::stable_sort(table.counts.begin(), table.counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return table;
}

std::string format_gram(const Tokens& gram) {
  std::string out = "(";
  for (std::size_t i = 0; i < gram.size(); ++i) {
    if (i) out += ", ";
    const char quote = gram[i].find('\'') != std::string::npos && gram[i].find('"') == std::string::npos ? '"' : '\'';
    out += quote;
    for (char c : gram[i]) {
      if (c == quote || c == '\\') out += '\\';
      out += c;
    }
    out += quote;
  }
  if (gram.size() == 1) out += ",";
  return out + ")";
}

std::string render_top(const NGramTable& table, std::size_t k) {
  std::string out;
  for (std::size_t i = 0; i < std::min(k, table.counts.size()); ++i)
    out += format_gram(table.counts[i].first) + ": " + std::to_string(table.counts[i].second) + "\n";
  return out;
}

std::string_view to_string(UnansCategory category) {
  switch (category) {
    case UnansCategory::IncorrectPatientNumber: return "incorrect_patient_number";
    case UnansCategory::RequireExternalKnowledge: return "require_external_knowledge";
    case UnansCategory::OutOfEhrKnowledgeBase: return "out_of_ehr_knowledge_base";
    case UnansCategory::Uncategorized: return "uncategorized";
  }
  return "uncategorized";
}

CategoryCues CategoryCues::defaults() {
  return CategoryCues{{{"protocol"}, {"protocols"}, {"checklist"}, {"what", "to", "do", "before"}}};
}

UnansCategory categorize_unanswerable(const QuestionRecord& record, const CategoryCues& cues) {
  if (patient_id_gate(record.raw_text)) return UnansCategory::IncorrectPatientNumber;
  const Tokens tokens = preprocess(record.raw_text);
  for (const auto& cue : cues.external_knowledge) {
    if (cue.empty() || cue.size() > tokens.size()) continue;
    if (std::search(tokens.begin(), tokens.end(), cue.begin(), cue.end()) != tokens.end())
      return UnansCategory::RequireExternalKnowledge;
  }
  return UnansCategory::OutOfEhrKnowledgeBase;
}

std::set<std::string> unanswerable_vocab(const std::vector<Tokens>& corpus) {
  std::set<std::string> vocab;
  for (const auto& q : corpus) vocab.insert(q.begin(), q.end());
  return vocab;
}

}  // namespace reliasql
