#include "reliasql/core.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <stdexcept>

#include "reliasql/error.hpp"

namespace reliasql {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

// Placeholders are written "<lowercase words>".
std::vector<std::string> find_placeholders(std::string_view text) {
  std::vector<std::string> found;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::islower(static_cast<unsigned char>(text[j])) || text[j] == ' ' ||
                               text[j] == '_'))
      ++j;
    if (j < text.size() && text[j] == '>' && j > i + 1) {
      found.emplace_back(text.substr(i, j - i + 1));
      i = j;
    }
  }
  return found;
}

}  // namespace

SqlOrNull SqlOrNull::query(std::string sql) {
  if (trim(sql).empty()) throw std::invalid_argument("query text is blank");
  if (sql == kNullText) throw std::invalid_argument("\"null\" is the abstention marker, not a query");
  SqlOrNull out;
  out.sql_ = std::move(sql);
  return out;
}

SqlOrNull SqlOrNull::from_text(std::string text) {
  if (text == kNullText) return null();
  return query(std::move(text));
}

std::string restore_bindings(std::string_view masked, const std::vector<Binding>& bindings) {
  std::map<std::string, std::size_t> used;
  std::string out;
  std::size_t pos = 0;
  while (pos < masked.size()) {
    std::size_t best = std::string_view::npos;
    const Binding* chosen = nullptr;
    for (const auto& b : bindings) {
      std::size_t at = masked.find(b.placeholder, pos);
      if (at != std::string_view::npos && (best == std::string_view::npos || at < best)) {
        best = at;
        chosen = &b;
      }
    }
    if (!chosen) break;
    // i-th occurrence of this placeholder takes the i-th binding for it
    std::size_t nth = used[chosen->placeholder]++;
    const Binding* pick = nullptr;
    std::size_t seen = 0;
    for (const auto& b : bindings) {
      if (b.placeholder != chosen->placeholder) continue;
      if (seen++ == nth) {
        pick = &b;
        break;
      }
    }
    out.append(masked.substr(pos, best - pos));
    out.append(pick ? pick->original : chosen->placeholder);
    pos = best + chosen->placeholder.size();
  }
  out.append(masked.substr(std::min(pos, masked.size())));
  return out;
}

void validate(const QuestionRecord& record) {
  if (record.id.empty()) throw ValidationError("question id is empty");
  if (!record.masked_text) return;
  std::map<std::string, std::size_t> available;
  for (const auto& b : record.bindings) ++available[b.placeholder];
  std::map<std::string, std::size_t> needed;
  for (const auto& p : find_placeholders(*record.masked_text)) ++needed[p];
  for (const auto& [placeholder, count] : needed) {
    // placeholders that were already present in the raw text need no binding
    std::size_t in_raw = 0;
    for (std::size_t at = record.raw_text.find(placeholder); at != std::string::npos;
         at = record.raw_text.find(placeholder, at + 1))
      ++in_raw;
    if (available[placeholder] + in_raw < count)
      throw ValidationError("question " + record.id + ": placeholder " + placeholder + " has no binding");
  }
  if (collapse_whitespace(restore_bindings(*record.masked_text, record.bindings)) !=
      collapse_whitespace(record.raw_text))
    throw ValidationError("question " + record.id + ": bindings do not reproduce the raw text");
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Stage1: return "stage1";
    case Stage::Reflected: return "reflected";
    case Stage::Repaired: return "repaired";
    case Stage::Gated: return "gated";
  }
  return "stage1";
}

Stage stage_from_string(std::string_view text) {
  if (text == "stage1") return Stage::Stage1;
  if (text == "reflected") return Stage::Reflected;
  if (text == "repaired") return Stage::Repaired;
  if (text == "gated") return Stage::Gated;
  throw ValidationError("unknown candidate stage '" + std::string(text) + "'");
}

void Candidate::advance(Stage next) {
  if (static_cast<int>(next) < static_cast<int>(stage))
    throw std::logic_error("candidate stage cannot move from " + std::string(to_string(stage)) + " back to " +
                           std::string(to_string(next)));
  stage = next;
}

void Candidate::add_note(std::string_view note) {
  if (!notes.empty()) notes += "; ";
  notes += note;
}

OutcomeLedger::OutcomeLedger(std::string id, bool answerable, bool attempted, std::optional<bool> correct)
    : id_(std::move(id)), answerable_(answerable), attempted_(attempted), correct_(correct) {
  if (correct_.has_value() != (answerable_ && attempted_))
    throw std::invalid_argument("outcome " + id_ + ": correctness must be present iff answerable and attempted");
}

double phi(const OutcomeLedger& outcome, double c) {
  if (outcome.answerable()) {
    if (!outcome.attempted()) return 0.0;
    return *outcome.correct() ? 1.0 : -c;
  }
  return outcome.attempted() ? -c : 1.0;
}

std::string trim(std::string_view text) {
  std::size_t b = 0, e = text.size();
  while (b < e && is_space(text[b])) ++b;
  while (e > b && is_space(text[e - 1])) --e;
  return std::string(text.substr(b, e - b));
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace reliasql
