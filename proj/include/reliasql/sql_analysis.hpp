#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "reliasql/sql_lexer.hpp"

namespace reliasql::sql {

/// A table named in a FROM or JOIN clause.
struct TableReference {
  std::size_t token;                 // index of the name token
  std::string name;                  // unquoted, as written
  std::optional<std::string> alias;  // as written
  std::size_t scope;
};

/// An identifier read as a column name, optionally qualified ("t.col").
struct ColumnReference {
  std::size_t token;
  std::optional<std::size_t> qualifier_token;
  std::size_t scope;
};

/// Token-level structure of one SELECT statement. Scopes are SELECT bodies:
/// 0 is the outermost, every parenthesized subquery opens a new one.
struct QueryStructure {
  std::vector<Token> tokens;
  std::vector<TableReference> tables;
  std::vector<ColumnReference> columns;
  std::set<std::string> cte_names;  // lowercase
  std::set<std::string> aliases;    // lowercase, table and column aliases
  std::vector<std::size_t> scope_parent;  // scope_parent[0] == 0

  /// Tables referenced directly in `scope`.
  std::vector<const TableReference*> tables_in_scope(std::size_t scope) const;
  /// Table a qualifier (alias or table name) refers to, searching outward from `scope`.
  const TableReference* resolve_qualifier(std::string_view qualifier, std::size_t scope) const;
};

/// Throws ParseError for text that is not a single SELECT/WITH query or that
/// has unbalanced parentheses or an empty FROM clause.
QueryStructure analyze_query(std::string_view sql);

/// Case-insensitive Levenshtein distance.
std::size_t edit_distance(std::string_view a, std::string_view b);

}  // namespace reliasql::sql
