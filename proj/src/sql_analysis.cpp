#include "reliasql/sql_analysis.hpp"

#include <algorithm>

#include "reliasql/core.hpp"
#include "reliasql/error.hpp"

namespace reliasql::sql {

namespace {

bool is_operand_end(const Token& t) {
  switch (t.kind) {
    case TokenKind::Identifier:
    case TokenKind::QuotedIdentifier:
    case TokenKind::Number:
    case TokenKind::String:
    case TokenKind::Blob:
    case TokenKind::RParen:
      return true;
    case TokenKind::Keyword:
      return t.value == "end" || t.value == "null" || t.value == "current_date" || t.value == "current_time" ||
             t.value == "current_timestamp";
    default:
      return false;
  }
}

bool ends_from_clause(const Token& t) {
  static constexpr std::string_view kStops[] = {"where", "group",     "having", "order",  "limit", "window",
                                                "union", "intersect", "except", "select", "values"};
  return t.kind == TokenKind::Keyword && std::find(std::begin(kStops), std::end(kStops), t.value) != std::end(kStops);
}

struct Frame {
  std::size_t scope;
  bool in_from = false;
  bool expect_table = false;
  bool derived_pending = false;  // a subquery in FROM position just closed
  bool cte_expect_name = false;
  bool cte_pending_comma = false;
};

class Analyzer {
 public:
  explicit Analyzer(std::string_view sql) { out_.tokens = tokenize(sql); }

  QueryStructure run() {
    auto& toks = out_.tokens;
    std::size_t n = toks.size();
    while (n > 0 && toks[n - 1].kind == TokenKind::Semicolon) --n;
    for (std::size_t i = 0; i < n; ++i)
      if (toks[i].kind == TokenKind::Semicolon) throw ParseError("more than one statement", toks[i].offset);
    toks.resize(n);
    if (toks.empty()) throw ParseError("empty query", 0);
    std::size_t first = 0;
    while (first < toks.size() && toks[first].kind == TokenKind::LParen) ++first;
    if (first == toks.size() || !(toks[first].is_keyword("select") || toks[first].is_keyword("with")))
      throw ParseError("not a SELECT query", toks[std::min(first, toks.size() - 1)].offset);

    out_.scope_parent.push_back(0);
    std::vector<Frame> stack{Frame{0}};
    std::vector<bool> from_position;  // per open paren: was it a FROM item?

    for (std::size_t i = 0; i < toks.size(); ++i) {
      const Token& t = toks[i];
      Frame& f = stack.back();

      if (t.kind == TokenKind::LParen) {
        const bool opens_query = i + 1 < toks.size() && (toks[i + 1].is_keyword("select") || toks[i + 1].is_keyword("with") ||
                                                         toks[i + 1].is_keyword("values"));
        from_position.push_back(f.expect_table);
        f.expect_table = false;
        std::size_t scope = f.scope;
        if (opens_query) {
          scope = out_.scope_parent.size();
          out_.scope_parent.push_back(f.scope);
        }
        stack.push_back(Frame{scope});
        continue;
      }
      if (t.kind == TokenKind::RParen) {
        if (stack.size() == 1) throw ParseError("unbalanced ')'", t.offset);
        if (stack.back().expect_table) throw ParseError("FROM clause without a table", t.offset);
        stack.pop_back();
        const bool was_from_item = from_position.back();
        from_position.pop_back();
        if (was_from_item) {
          stack.back().derived_pending = true;
        }
        continue;
      }

      if (f.derived_pending) {
        f.derived_pending = false;
        if (t.is_keyword("as") && i + 1 < toks.size() && toks[i + 1].is_name_like()) {
          out_.aliases.insert(to_lower(toks[i + 1].value));
          ++i;
          continue;
        }
        if (t.kind == TokenKind::Identifier || t.kind == TokenKind::QuotedIdentifier) {
          out_.aliases.insert(to_lower(t.value));
          continue;
        }
      }

      if (t.kind == TokenKind::Keyword) {
        if (t.value == "with" && (i == 0 || toks[i - 1].kind == TokenKind::LParen)) {
          f.cte_expect_name = true;
          continue;
        }
        if (t.value == "recursive" && f.cte_expect_name) continue;
        if (t.value == "from" || t.value == "join") {
          f.in_from = true;
          f.expect_table = true;
          continue;
        }
        if (ends_from_clause(t)) {
          f.in_from = false;
          f.cte_pending_comma = false;
          if (f.expect_table) throw ParseError("FROM clause without a table", t.offset);
        }
        if (t.value == "as" && i + 1 < toks.size() && toks[i + 1].is_identifier()) {
          // column alias or CAST target type
          out_.aliases.insert(to_lower(toks[i + 1].value));
          ++i;
          continue;
        }
        if (!t.is_name_like()) continue;
      }

      if (t.kind == TokenKind::Comma) {
        if (f.in_from && !f.expect_table) f.expect_table = true;
        if (f.cte_pending_comma) {
          f.cte_pending_comma = false;
          f.cte_expect_name = true;
        }
        continue;
      }

      if (f.cte_expect_name && t.is_name_like()) {
        out_.cte_names.insert(to_lower(t.value));
        f.cte_expect_name = false;
        f.cte_pending_comma = true;
        continue;
      }

      if (f.expect_table && t.is_name_like()) {
        std::size_t name_tok = i;
        if (i + 2 < toks.size() && toks[i + 1].kind == TokenKind::Dot && toks[i + 2].is_name_like()) name_tok = i + 2;
        TableReference ref{name_tok, toks[name_tok].value, std::nullopt, f.scope};
        i = name_tok;
        f.expect_table = false;
        if (i + 1 < toks.size() && toks[i + 1].kind == TokenKind::LParen) {
          // table-valued function such as json_each(...): not a table
          continue;
        }
        if (i + 2 < toks.size() && toks[i + 1].is_keyword("as") && toks[i + 2].is_name_like()) {
          ref.alias = toks[i + 2].value;
          i += 2;
        } else if (i + 1 < toks.size() && toks[i + 1].is_identifier()) {
          ref.alias = toks[i + 1].value;
          i += 1;
        }
        if (ref.alias) out_.aliases.insert(to_lower(*ref.alias));
        out_.tables.push_back(std::move(ref));
        continue;
      }

      if (t.is_identifier()) {
        const bool followed_by_call = i + 1 < toks.size() && toks[i + 1].kind == TokenKind::LParen;
        const bool is_qualifier = i + 1 < toks.size() && toks[i + 1].kind == TokenKind::Dot;
        const bool after_dot = i > 0 && toks[i - 1].kind == TokenKind::Dot;
        if (followed_by_call || is_qualifier) continue;
        if (!after_dot && i > 0 && is_operand_end(toks[i - 1])) {
          // two operands in a row: the second one names the first
          out_.aliases.insert(to_lower(t.value));
          continue;
        }
        ColumnReference col{i, std::nullopt, f.scope};
        if (after_dot && i >= 2 && toks[i - 2].is_name_like()) col.qualifier_token = i - 2;
        out_.columns.push_back(col);
      }
    }
    if (stack.size() != 1) throw ParseError("unbalanced '('", toks.back().offset);
    if (stack.back().expect_table) throw ParseError("FROM clause without a table", toks.back().offset);
    return std::move(out_);
  }

 private:
  QueryStructure out_;
};

}  // namespace

std::vector<const TableReference*> QueryStructure::tables_in_scope(std::size_t scope) const {
  std::vector<const TableReference*> out;
  for (const auto& t : tables)
    if (t.scope == scope) out.push_back(&t);
  return out;
}

const TableReference* QueryStructure::resolve_qualifier(std::string_view qualifier, std::size_t scope) const {
  const std::string q = to_lower(qualifier);
  while (true) {
    for (const auto& t : tables) {
      if (t.scope != scope) continue;
      if (t.alias && to_lower(*t.alias) == q) return &t;
    }
    for (const auto& t : tables) {
      if (t.scope != scope) continue;
      if (!t.alias && to_lower(t.name) == q) return &t;
    }
    if (scope == 0) return nullptr;
    scope = scope_parent[scope];
  }
}

QueryStructure analyze_query(std::string_view sql) { return Analyzer(sql).run(); }

std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::string x = to_lower(a), y = to_lower(b);
  std::vector<std::size_t> prev(y.size() + 1), cur(y.size() + 1);
  for (std::size_t j = 0; j <= y.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= x.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= y.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x[i - 1] == y[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[y.size()];
}

}  // namespace reliasql::sql
