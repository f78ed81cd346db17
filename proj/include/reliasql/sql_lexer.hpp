#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace reliasql::sql {

enum class TokenKind {
  Identifier,        // bare word that is not a keyword
  QuotedIdentifier,  // "x", `x` or [x]
  Keyword,
  String,  // '...'
  Number,
  Blob,       // x'...'
  Parameter,  // ?, ?1, :name, @name, $name
  Operator,
  LParen,
  RParen,
  Comma,
  Dot,
  Semicolon,
};

struct Token {
  TokenKind kind;
  std::size_t offset;  // byte offset into the source
  std::size_t length;
  std::string text;    // raw source slice
  std::string value;   // unquoted identifier / string contents; lowercase for keywords

  bool is_keyword(std::string_view lower_kw) const { return kind == TokenKind::Keyword && value == lower_kw; }
  bool is_identifier() const { return kind == TokenKind::Identifier || kind == TokenKind::QuotedIdentifier; }
  /// Identifier, or a keyword SQLite also accepts as a name in most positions.
  bool is_name_like() const;
};

/// Splits SQLite SQL into tokens, skipping whitespace and comments.
/// Throws ParseError on unterminated literals/comments and unknown characters.
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view word);

/// Index of the matching ")" for the "(" at `open`, or tokens.size() if unbalanced.
std::size_t matching_paren(const std::vector<Token>& tokens, std::size_t open);

/// True when the statement's outermost SELECT carries ORDER BY.
bool has_top_level_order_by(std::string_view sql);

/// Text of the first statement (up to a top-level ';'), trimmed.
std::string first_statement(std::string_view sql);

}  // namespace reliasql::sql
