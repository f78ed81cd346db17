#include "reliasql/sql_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "reliasql/core.hpp"
#include "reliasql/error.hpp"

namespace reliasql::sql {

namespace {

// SQLite keyword list, lowercase and sorted.
constexpr std::string_view kKeywords[] = {
    "abort",       "action",     "add",          "after",        "all",         "alter",       "always",
    "analyze",     "and",        "as",           "asc",          "attach",      "autoincrement", "before",
    "begin",       "between",    "by",           "cascade",      "case",        "cast",        "check",
    "collate",     "column",     "commit",       "conflict",     "constraint",  "create",      "cross",
    "current",     "current_date", "current_time", "current_timestamp", "database", "default",  "deferrable",
    "deferred",    "delete",     "desc",         "detach",       "distinct",    "do",          "drop",
    "each",        "else",       "end",          "escape",       "except",      "exclude",     "exclusive",
    "exists",      "explain",    "fail",         "filter",       "first",       "following",   "for",
    "foreign",     "from",       "full",         "generated",    "glob",        "group",       "groups",
    "having",      "if",         "ignore",       "immediate",    "in",          "index",       "indexed",
    "initially",   "inner",      "insert",       "instead",      "intersect",   "into",        "is",
    "isnull",      "join",       "key",          "last",         "left",        "like",        "limit",
    "match",       "materialized", "natural",    "no",           "not",         "nothing",     "notnull",
    "null",        "nulls",      "of",           "offset",       "on",          "or",          "order",
    "others",      "outer",      "over",         "partition",    "plan",        "pragma",      "preceding",
    "primary",     "query",      "raise",        "range",        "recursive",   "references",  "regexp",
    "reindex",     "release",    "rename",       "replace",      "restrict",    "returning",   "right",
    "rollback",    "row",        "rows",         "savepoint",    "select",      "set",         "table",
    "temp",        "temporary",  "then",         "ties",         "to",          "transaction", "trigger",
    "unbounded",   "union",      "update",       "using",        "vacuum",      "values",      "view",
    "virtual",     "when",       "where",        "window",       "with",        "without"};

// Keywords SQLite's grammar lets fall back to identifiers (the %fallback ID list).
constexpr std::string_view kNameKeywords[] = {
    "action", "current", "first", "following", "groups", "key", "last", "no", "nulls",
    "others", "plan", "preceding", "query", "range", "row", "rows", "ties", "unbounded"};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || (c & 0x80); }
bool ident_char(char c) { return ident_start(c) || std::isdigit(static_cast<unsigned char>(c)) || c == '$'; }

}  // namespace

bool is_keyword(std::string_view word) {
  static const std::vector<std::string_view> sorted = [] {
    std::vector<std::string_view> v(std::begin(kKeywords), std::end(kKeywords));
    std::sort(v.begin(), v.end());
    return v;
  }();
  std::string lower = to_lower(word);
  return std::binary_search(sorted.begin(), sorted.end(), std::string_view(lower));
}

bool Token::is_name_like() const {
  if (is_identifier()) return true;
  return kind == TokenKind::Keyword &&
         std::find(std::begin(kNameKeywords), std::end(kNameKeywords), value) != std::end(kNameKeywords);
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = src.size();
  auto push = [&](TokenKind kind, std::size_t start, std::size_t end, std::string value) {
    out.push_back(Token{kind, start, end - start, std::string(src.substr(start, end - start)), std::move(value)});
  };
  while (i < n) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '-' && i + 1 < n && src[i + 1] == '-') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < n && src[i + 1] == '*') {
      std::size_t end = src.find("*/", i + 2);
      if (end == std::string_view::npos) throw ParseError("unterminated comment", i);
      i = end + 2;
      continue;
    }
    const std::size_t start = i;
    if ((c == 'x' || c == 'X') && i + 1 < n && src[i + 1] == '\'') {
      std::size_t end = src.find('\'', i + 2);
      if (end == std::string_view::npos) throw ParseError("unterminated blob literal", i);
      i = end + 1;
      push(TokenKind::Blob, start, i, std::string(src.substr(start + 2, end - start - 2)));
      continue;
    }
    if (ident_start(c)) {
      while (i < n && ident_char(src[i])) ++i;
      std::string word(src.substr(start, i - start));
      if (is_keyword(word))
        push(TokenKind::Keyword, start, i, to_lower(word));
      else
        push(TokenKind::Identifier, start, i, word);
      continue;
    }
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      const char close = c == '[' ? ']' : c;
      std::string value;
      ++i;
      bool closed = false;
      while (i < n) {
        if (src[i] == close) {
          if (close != ']' && i + 1 < n && src[i + 1] == close) {
            value.push_back(close);
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        value.push_back(src[i++]);
      }
      if (!closed) throw ParseError("unterminated quoted text", start);
      push(c == '\'' ? TokenKind::String : TokenKind::QuotedIdentifier, start, i, std::move(value));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
        i += 2;
        while (i < n && std::isxdigit(static_cast<unsigned char>(src[i]))) ++i;
      } else {
        while (i < n && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.' || src[i] == '_')) ++i;
        if (i < n && (src[i] == 'e' || src[i] == 'E')) {
          std::size_t j = i + 1;
          if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
          if (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) {
            i = j;
            while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
          }
        }
      }
      if (i < n && ident_start(src[i])) throw ParseError("unrecognized token", start);
      push(TokenKind::Number, start, i, std::string(src.substr(start, i - start)));
      continue;
    }
    if (c == '?' || c == ':' || c == '@' || c == '$') {
      ++i;
      while (i < n && ident_char(src[i])) ++i;
      if (c != '?' && i == start + 1) throw ParseError("unrecognized token", start);
      push(TokenKind::Parameter, start, i, std::string(src.substr(start, i - start)));
      continue;
    }
    switch (c) {
      case '(': push(TokenKind::LParen, start, ++i, "("); continue;
      case ')': push(TokenKind::RParen, start, ++i, ")"); continue;
      case ',': push(TokenKind::Comma, start, ++i, ","); continue;
      case '.': push(TokenKind::Dot, start, ++i, "."); continue;
      case ';': push(TokenKind::Semicolon, start, ++i, ";"); continue;
      default: break;
    }
    static constexpr std::string_view kTwoChar[] = {"<=", ">=", "<>", "!=", "==", "||", "<<", ">>", "->"};
    for (auto op : kTwoChar) {
      if (src.substr(i, op.size()) == op) {
        i += op.size();
        if (op == "->" && i < n && src[i] == '>') ++i;
        push(TokenKind::Operator, start, i, std::string(src.substr(start, i - start)));
        goto next;
      }
    }
    if (std::string_view("+-*/%<>=&|~").find(c) != std::string_view::npos) {
      push(TokenKind::Operator, start, ++i, std::string(1, c));
      continue;
    }
    throw ParseError(std::string("unrecognized character '") + c + "'", start);
  next:;
  }
  return out;
}

std::size_t matching_paren(const std::vector<Token>& tokens, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < tokens.size(); ++i) {
    if (tokens[i].kind == TokenKind::LParen) ++depth;
    if (tokens[i].kind == TokenKind::RParen && --depth == 0) return i;
  }
  return tokens.size();
}

bool has_top_level_order_by(std::string_view sql) {
  std::vector<Token> tokens;
  try {
    tokens = tokenize(sql);
  } catch (const ParseError&) {
    return false;
  }
  int depth = 0;
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
    const auto& t = tokens[i];
    if (t.kind == TokenKind::LParen) ++depth;
    if (t.kind == TokenKind::RParen) --depth;
    if (t.kind == TokenKind::Semicolon && depth == 0) break;
    if (depth == 0 && t.is_keyword("order") && tokens[i + 1].is_keyword("by")) return true;
  }
  return false;
}

std::string first_statement(std::string_view sql) {
  std::vector<Token> tokens;
  try {
    tokens = tokenize(sql);
  } catch (const ParseError&) {
    return trim(sql);
  }
  int depth = 0;
  for (const auto& t : tokens) {
    if (t.kind == TokenKind::LParen) ++depth;
    if (t.kind == TokenKind::RParen) --depth;
    if (t.kind == TokenKind::Semicolon && depth <= 0) return trim(sql.substr(0, t.offset));
  }
  return trim(sql);
}

}  // namespace reliasql::sql
