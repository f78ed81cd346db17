#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace reliasql {

struct ColumnInfo {
  std::string name;
  std::string sql_type;  // SQLite type-affinity name
  std::string description;
  std::vector<std::string> example_values;
};

struct ForeignKey {
  std::string column;
  std::string foreign_table;
  std::string foreign_column;
};

struct TableInfo {
  std::string name;
  std::string description;
  std::vector<ColumnInfo> columns;
  std::optional<std::string> primary_key;
  std::vector<ForeignKey> foreign_keys;

  const ColumnInfo* find_column(std::string_view name) const;  // case-insensitive
};

enum class RenderFormat { NaturalLanguage, Ddl };

RenderFormat render_format_from_string(std::string_view text);  // "natural" | "ddl"
std::string_view to_string(RenderFormat format);

class SchemaCatalog {
 public:
  SchemaCatalog() = default;
  /// Validates name uniqueness and key references; throws ValidationError.
  explicit SchemaCatalog(std::vector<TableInfo> tables);

  const std::vector<TableInfo>& tables() const noexcept { return tables_; }
  std::size_t size() const noexcept { return tables_.size(); }
  static constexpr std::string_view dialect() { return "sqlite"; }

  const TableInfo* find_table(std::string_view name) const;  // case-insensitive
  bool has_column_anywhere(std::string_view column) const;    // case-insensitive

 private:
  std::vector<TableInfo> tables_;
};

SchemaCatalog load_catalog(const std::filesystem::path& path);
SchemaCatalog parse_catalog(const std::string& json_text);

/// Table overview for the first generation pass. NaturalLanguage: per table a
/// "<table>: <description>" line and a "columns: ..." line. Ddl: one CREATE
/// TABLE statement per table with types and key clauses.
std::string render_brief(const SchemaCatalog& catalog, RenderFormat format);

/// Column-level detail for the requested tables only, in catalog order.
/// Throws ValidationError naming any unknown tables.
std::string render_detailed(const SchemaCatalog& catalog, const std::set<std::string>& tables);

/// Quotes an identifier for SQLite when it is not a plain word or collides
/// with a keyword.
std::string quote_identifier(std::string_view name);

}  // namespace reliasql
