#include "reliasql/verifier.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include "reliasql/corpus_analyzer.hpp"
#include "reliasql/error.hpp"
#include "reliasql/sql_analysis.hpp"

namespace reliasql {

ExecutionOutcome execute_check(const std::string& sql, const Database& db, int timeout_ms) {
  return db.query(sql, timeout_ms);
}

bool has_text_affinity(std::string_view sql_type) {
  const std::string upper = [&] {
    std::string s(sql_type);
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  }();
  return upper.find("CHAR") != std::string::npos || upper.find("CLOB") != std::string::npos ||
         upper.find("TEXT") != std::string::npos;
}

void ValueIndex::add(std::string value, ValueLocation location) {
  if (value.size() > kMaxValueLength) return;
  values_[std::move(value)].insert(std::move(location));
}

const std::set<ValueLocation>* ValueIndex::find(const std::string& value) const {
  auto it = values_.find(value);
  return it == values_.end() ? nullptr : &it->second;
}

ValueIndex ValueIndex::build(const Database& db, const SchemaCatalog& catalog) {
  ValueIndex index;
  for (const auto& table : catalog.tables()) {
    for (const auto& column : table.columns) {
      if (!has_text_affinity(column.sql_type)) continue;
      const std::string col = quote_identifier(column.name);
      const std::string sql = "SELECT DISTINCT " + col + " FROM " + quote_identifier(table.name) + " WHERE typeof(" +
                              col + ") = 'text' AND length(" + col + ") <= " + std::to_string(kMaxValueLength);
      auto outcome = db.query(sql, 10 * kDefaultTimeoutMs);
      if (!outcome.ok()) continue;
      for (const auto& row : outcome.rows())
        if (auto* s = std::get_if<std::string>(&row.at(0))) index.add(*s, {table.name, column.name});
    }
  }
  return index;
}

namespace {

bool is_comparison(const sql::Token& t) {
  if (t.kind == sql::TokenKind::Operator)
    return t.value == "=" || t.value == "==" || t.value == "!=" || t.value == "<>" || t.value == "<" || t.value == ">" ||
           t.value == "<=" || t.value == ">=";
  return t.is_keyword("like") || t.is_keyword("glob");
}

// String literal compared against the operand spanning tokens [first, last].
std::optional<std::string> adjacent_literal(const std::vector<sql::Token>& toks, std::size_t first, std::size_t last) {
  std::size_t j = last + 1;
  if (j < toks.size() && toks[j].is_keyword("not")) ++j;
  if (j + 1 < toks.size() && is_comparison(toks[j]) && toks[j + 1].kind == sql::TokenKind::String) return toks[j + 1].value;
  if (j + 2 < toks.size() && toks[j].is_keyword("in") && toks[j + 1].kind == sql::TokenKind::LParen &&
      toks[j + 2].kind == sql::TokenKind::String)
    return toks[j + 2].value;
  if (first >= 2 && is_comparison(toks[first - 1]) && toks[first - 2].kind == sql::TokenKind::String)
    return toks[first - 2].value;
  return std::nullopt;
}

template <typename Names>
std::optional<std::string> unique_close_name(std::string_view wrong, const Names& names) {
  std::set<std::string> hits;
  for (const auto& n : names)
    if (sql::edit_distance(wrong, n) <= 2) hits.insert(n);
  if (hits.size() == 1) return *hits.begin();
  return std::nullopt;
}

}  // namespace

RepairResult repair_names(const std::string& sql_text, const SchemaCatalog& catalog, const ValueIndex& values) {
  const auto qs = sql::analyze_query(sql_text);
  const auto& toks = qs.tokens;
  std::map<std::size_t, std::string> replace;  // token index -> catalog name
  std::vector<std::optional<std::string>> resolved(qs.tables.size());

  auto table_index = [&](const sql::TableReference* ref) { return static_cast<std::size_t>(ref - qs.tables.data()); };
  auto literal_for = [&](const sql::ColumnReference& c) {
    return adjacent_literal(toks, c.qualifier_token.value_or(c.token), c.token);
  };
  auto is_local_name = [&](const std::string& name) {
    const std::string lower = to_lower(name);
    return qs.aliases.count(lower) > 0 || qs.cte_names.count(lower) > 0;
  };

  std::vector<std::string> table_names;
  for (const auto& t : catalog.tables()) table_names.push_back(t.name);

  for (std::size_t ti = 0; ti < qs.tables.size(); ++ti) {
    const auto& ref = qs.tables[ti];
    if (const TableInfo* t = catalog.find_table(ref.name)) {
      resolved[ti] = t->name;
      continue;
    }
    if (is_local_name(ref.name)) continue;
    std::optional<std::string> fix = unique_close_name(ref.name, table_names);
    if (!fix) {
      const auto in_scope = qs.tables_in_scope(ref.scope);
      std::set<std::string> located;
      for (const auto& col : qs.columns) {
        if (col.scope != ref.scope) continue;
        bool belongs = false;
        if (col.qualifier_token) {
          belongs = qs.resolve_qualifier(toks[*col.qualifier_token].value, col.scope) == &ref;
        } else {
          belongs = in_scope.size() == 1;
        }
        if (!belongs) continue;
        if (auto lit = literal_for(col))
          if (const auto* locs = values.find(*lit))
            for (const auto& loc : *locs) located.insert(loc.table);
      }
      if (located.size() == 1) fix = *located.begin();
    }
    if (fix) {
      replace[ref.token] = *fix;
      resolved[ti] = *fix;
    }
  }

  for (const auto& col : qs.columns) {
    const std::string& name = toks[col.token].value;
    // qualifier spelled like a repaired, unaliased table
    if (col.qualifier_token) {
      const auto* ref = qs.resolve_qualifier(toks[*col.qualifier_token].value, col.scope);
      if (ref && !ref->alias && replace.count(ref->token)) replace[*col.qualifier_token] = replace[ref->token];
    }
    if (catalog.has_column_anywhere(name) || catalog.find_table(name) || is_local_name(name)) continue;

    std::vector<const TableInfo*> candidates;
    if (col.qualifier_token) {
      const auto* ref = qs.resolve_qualifier(toks[*col.qualifier_token].value, col.scope);
      if (!ref || !resolved[table_index(ref)]) continue;
      candidates.push_back(catalog.find_table(*resolved[table_index(ref)]));
    } else {
      for (std::size_t scope = col.scope;; scope = qs.scope_parent[scope]) {
        for (const auto* ref : qs.tables_in_scope(scope))
          if (auto& r = resolved[table_index(ref)]) candidates.push_back(catalog.find_table(*r));
        if (!candidates.empty() || scope == 0) break;
      }
    }
    if (candidates.empty()) continue;

    std::vector<std::string> column_names;
    for (const auto* t : candidates)
      for (const auto& c : t->columns) column_names.push_back(c.name);
    std::optional<std::string> fix = unique_close_name(name, column_names);
    if (!fix) {
      if (auto lit = literal_for(col)) {
        if (const auto* locs = values.find(*lit)) {
          std::set<std::string> hits;
          for (const auto& loc : *locs)
            for (const auto* t : candidates)
              if (t->name == loc.table) hits.insert(loc.column);
          if (hits.size() == 1) fix = *hits.begin();
        }
      }
    }
    if (fix) replace[col.token] = *fix;
  }

  RepairResult out{sql_text, false};
  if (replace.empty()) return out;
  std::string rebuilt;
  std::size_t pos = 0;
  for (const auto& [index, name] : replace) {
    const auto& tok = toks[index];
    rebuilt.append(sql_text, pos, tok.offset - pos);
    rebuilt.append(quote_identifier(name));
    pos = tok.offset + tok.length;
  }
  rebuilt.append(sql_text, pos, std::string::npos);
  out.changed = rebuilt != sql_text;
  out.sql = std::move(rebuilt);
  return out;
}

bool patient_id_gate(std::string_view raw_text) {
  static const std::regex pattern(R"(\bpatient\s+(\d+))", std::regex::icase);
  const std::string text(raw_text);
  for (auto it = std::sregex_iterator(text.begin(), text.end(), pattern); it != std::sregex_iterator(); ++it)
    if ((*it)[1].length() != 8) return true;
  return false;
}

bool vocab_gate(const std::vector<std::string>& tokens, const std::set<std::string>& vocab) {
  if (tokens.empty()) return false;
  return std::all_of(tokens.begin(), tokens.end(), [&](const std::string& t) { return vocab.count(t) > 0; });
}

namespace {

enum class Verdict { Kept, Repaired, Gated, Failed };

std::pair<SqlOrNull, Verdict> verify_detailed(const SqlOrNull& candidate, const QuestionRecord& question,
                                              const VerifyContext& ctx, std::string& note) {
  if (candidate.is_null()) return {candidate, Verdict::Kept};
  if (ctx.gates.patient_id && patient_id_gate(question.raw_text)) {
    note = "gate: patient number";
    return {SqlOrNull::null(), Verdict::Gated};
  }
  if (ctx.gates.vocabulary && ctx.unanswerable_vocab &&
      vocab_gate(preprocess(question.raw_text), *ctx.unanswerable_vocab)) {
    note = "gate: unanswerable vocabulary";
    return {SqlOrNull::null(), Verdict::Gated};
  }
  auto first = execute_check(candidate.sql(), ctx.db, ctx.timeout_ms);
  if (first.ok()) return {candidate, Verdict::Kept};
  note = "execution " + std::string(to_string(first.failure().kind)) + ": " + first.failure().message;
  RepairResult repaired;
  try {
    repaired = repair_names(candidate.sql(), ctx.catalog, ctx.values);
  } catch (const ParseError&) {
    return {SqlOrNull::null(), Verdict::Failed};
  }
  if (!repaired.changed) return {SqlOrNull::null(), Verdict::Failed};
  auto second = execute_check(repaired.sql, ctx.db, ctx.timeout_ms);
  if (!second.ok()) {
    note += "; repair did not execute: " + second.failure().message;
    return {SqlOrNull::null(), Verdict::Failed};
  }
  note += "; names repaired";
  return {SqlOrNull::query(repaired.sql), Verdict::Repaired};
}

}  // namespace

SqlOrNull verify(const SqlOrNull& candidate, const QuestionRecord& question, const VerifyContext& ctx) {
  std::string note;
  return verify_detailed(candidate, question, ctx, note).first;
}

Candidate verify_candidate(Candidate candidate, const QuestionRecord& question, const VerifyContext& ctx) {
  std::string note;
  auto [result, verdict] = verify_detailed(candidate.prediction, question, ctx, note);
  candidate.prediction = std::move(result);
  if (verdict == Verdict::Gated) candidate.advance(Stage::Gated);
  if (verdict == Verdict::Repaired) candidate.advance(Stage::Repaired);
  if (!note.empty()) candidate.add_note(note);
  return candidate;
}

}  // namespace reliasql
