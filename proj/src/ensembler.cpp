#include "reliasql/ensembler.hpp"

#include <cctype>
#include <cmath>

#include "reliasql/error.hpp"

namespace reliasql {

VoteMode vote_mode_from_string(std::string_view text) {
  if (text == "text") return VoteMode::ByQueryText;
  if (text == "result") return VoteMode::ByExecutionResult;
  throw ConfigError("unknown vote mode '" + std::string(text) + "' (expected text or result)");
}

std::string_view to_string(VoteMode mode) { return mode == VoteMode::ByQueryText ? "text" : "result"; }

std::optional<bool> parse_yes_no(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size()) {
    while (i < reply.size() && !std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
    std::size_t start = i;
    while (i < reply.size() && std::isalpha(static_cast<unsigned char>(reply[i]))) ++i;
    if (start == i) break;
    std::string word = to_lower(reply.substr(start, i - start));
    if (word == "yes") return true;
    if (word == "no") return false;
    return std::nullopt;
  }
  return std::nullopt;
}

bool alignment_check(const std::string& question, const std::string& sql, LlmGateway& gateway,
                     const PromptTemplates& prompts, const AlignmentOptions& options) {
  ChatRequest req;
  req.system_text = prompts.align_system;
  req.user_text = fill_template(prompts.align_user, {{"question", question}, {"sql", sql}});
  req.temperature = 0.0;
  req.max_output_tokens = options.max_output_tokens;
  req.model_tag = options.model_tag;
  try {
    return parse_yes_no(gateway.complete(req).text).value_or(true);
  } catch (const Error&) {
    return true;
  }
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  bool space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(c);
  }
  return out;
}

namespace {

bool same_value(const Value& a, const Value& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return *x == y || (std::isnan(*x) && std::isnan(y));
  }
  return a == b;
}

bool same_rows(const std::vector<Row>& a, const std::vector<Row>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!same_value(a[i][j], b[i][j])) return false;
  }
  return true;
}

}  // namespace

SqlOrNull majority_vote(const std::vector<SqlOrNull>& candidates, VoteMode mode, const Database* db, int timeout_ms) {
  if (candidates.empty()) throw std::invalid_argument("majority vote needs at least one candidate");
  if (mode == VoteMode::ByExecutionResult && !db) throw std::invalid_argument("result voting needs a database");

  struct Group {
    bool is_null;
    std::size_t first;
    std::size_t size = 0;
    std::string text_key;
    std::vector<Row> rows_key;
  };
  std::vector<Group> groups;
  auto null_group = [&]() -> Group& {
    for (auto& g : groups)
      if (g.is_null) return g;
    return groups.emplace_back(Group{true, 0, 0, {}, {}});
  };

  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    Group* target = nullptr;
    if (c.is_query()) {
      if (mode == VoteMode::ByQueryText) {
        std::string key = normalize_whitespace(c.sql());
        for (auto& g : groups)
          if (!g.is_null && g.text_key == key) target = &g;
        if (!target) target = &groups.emplace_back(Group{false, i, 0, std::move(key), {}});
      } else {
        auto outcome = db->query(c.sql(), timeout_ms);
        if (outcome.ok()) {
          auto key = canonical_rows(outcome.rows());
          for (auto& g : groups)
            if (!g.is_null && same_rows(g.rows_key, key)) target = &g;
          if (!target) target = &groups.emplace_back(Group{false, i, 0, {}, std::move(key)});
        }
      }
    }
    if (!target) {
      target = &null_group();
      if (target->size == 0) target->first = i;
    }
    ++target->size;
  }

  const Group* best = nullptr;
  for (const auto& g : groups) {
    if (!best || g.size > best->size) {
      best = &g;
      continue;
    }
    if (g.size < best->size) continue;
    if (best->is_null != g.is_null) {
      if (best->is_null) best = &g;
      continue;
    }
    if (g.first < best->first) best = &g;
  }
  if (best->is_null) return SqlOrNull::null();
  return candidates[best->first];
}

}  // namespace reliasql
