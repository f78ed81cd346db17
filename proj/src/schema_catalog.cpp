#include "reliasql/schema_catalog.hpp"

#include <cctype>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reliasql/core.hpp"
#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"
#include "reliasql/sql_lexer.hpp"

namespace reliasql {

using nlohmann::json;

namespace {

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i]))) return false;
  return true;
}

}  // namespace

const ColumnInfo* TableInfo::find_column(std::string_view column) const {
  for (const auto& c : columns)
    if (iequals(c.name, column)) return &c;
  return nullptr;
}

RenderFormat render_format_from_string(std::string_view text) {
  std::string lower = to_lower(text);
  if (lower == "natural" || lower == "natural_language" || lower == "nl") return RenderFormat::NaturalLanguage;
  if (lower == "ddl" || lower == "sql") return RenderFormat::Ddl;
  throw ConfigError("unknown table-info format '" + std::string(text) + "' (expected natural or ddl)");
}

std::string_view to_string(RenderFormat format) {
  return format == RenderFormat::Ddl ? "ddl" : "natural";
}

SchemaCatalog::SchemaCatalog(std::vector<TableInfo> tables) : tables_(std::move(tables)) {
  for (std::size_t i = 0; i < tables_.size(); ++i) {
    const auto& t = tables_[i];
    if (t.name.empty()) throw ValidationError("table with empty name");
    for (std::size_t j = 0; j < i; ++j)
      if (iequals(tables_[j].name, t.name)) throw ValidationError("duplicate table name " + t.name);
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
      if (t.columns[c].name.empty()) throw ValidationError("table " + t.name + " has a column with empty name");
      for (std::size_t d = 0; d < c; ++d)
        if (iequals(t.columns[d].name, t.columns[c].name))
          throw ValidationError("duplicate column " + t.name + "." + t.columns[c].name);
    }
  }
  for (const auto& t : tables_) {
    if (t.primary_key && !t.find_column(*t.primary_key))
      throw ValidationError("primary key " + t.name + "." + *t.primary_key + " is not a column");
    for (const auto& fk : t.foreign_keys) {
      const std::string ref = t.name + "." + fk.column + " -> " + fk.foreign_table + "." + fk.foreign_column;
      if (!t.find_column(fk.column)) throw ValidationError("dangling foreign key " + ref + ": local column missing");
      const TableInfo* target = find_table(fk.foreign_table);
      if (!target) throw ValidationError("dangling foreign key " + ref + ": table missing");
      if (!target->find_column(fk.foreign_column))
        throw ValidationError("dangling foreign key " + ref + ": column missing");
    }
  }
}

const TableInfo* SchemaCatalog::find_table(std::string_view name) const {
  for (const auto& t : tables_)
    if (iequals(t.name, name)) return &t;
  return nullptr;
}

bool SchemaCatalog::has_column_anywhere(std::string_view column) const {
  for (const auto& t : tables_)
    if (t.find_column(column)) return true;
  return false;
}

SchemaCatalog parse_catalog(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed catalog descriptor: ") + e.what(), e.byte);
  }
  if (auto d = doc.find("dialect"); d != doc.end() && d->get<std::string>() != "sqlite")
    throw ValidationError("catalog dialect must be sqlite");
  std::vector<TableInfo> tables;
  try {
    for (const auto& jt : doc.at("tables")) {
      TableInfo t;
      t.name = jt.at("name").get<std::string>();
      t.description = jt.value("description", "");
      for (const auto& jc : jt.at("columns")) {
        ColumnInfo c;
        c.name = jc.at("name").get<std::string>();
        c.sql_type = jc.value("type", "TEXT");
        c.description = jc.value("description", "");
        c.example_values = jc.value("examples", std::vector<std::string>{});
        t.columns.push_back(std::move(c));
      }
      if (auto pk = jt.find("primary_key"); pk != jt.end() && pk->is_string()) t.primary_key = pk->get<std::string>();
      if (auto fks = jt.find("foreign_keys"); fks != jt.end()) {
        for (const auto& jf : *fks)
          t.foreign_keys.push_back({jf.at("column").get<std::string>(), jf.at("ref_table").get<std::string>(),
                                    jf.at("ref_column").get<std::string>()});
      }
      tables.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("catalog descriptor: ") + e.what());
  }
  return SchemaCatalog(std::move(tables));
}

SchemaCatalog load_catalog(const std::filesystem::path& path) { return parse_catalog(read_text_file(path)); }

std::string quote_identifier(std::string_view name) {
  bool plain = !name.empty() && !std::isdigit(static_cast<unsigned char>(name[0]));
  for (char c : name)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') plain = false;
  if (plain && !sql::is_keyword(name)) return std::string(name);
  std::string out = "\"";
  for (char c : name) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string render_brief(const SchemaCatalog& catalog, RenderFormat format) {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : catalog.tables()) {
    if (!first) out << '\n';
    first = false;
    if (format == RenderFormat::NaturalLanguage) {
      out << t.name << ": " << t.description << '\n' << "columns: ";
      for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? ", " : "") << t.columns[i].name;
      out << '\n';
      continue;
    }
    out << "CREATE TABLE " << quote_identifier(t.name) << " (\n";
    std::vector<std::string> lines;
    for (const auto& c : t.columns) lines.push_back("  " + quote_identifier(c.name) + " " + c.sql_type);
    if (t.primary_key) lines.push_back("  PRIMARY KEY (" + quote_identifier(*t.primary_key) + ")");
    for (const auto& fk : t.foreign_keys)
      lines.push_back("  FOREIGN KEY (" + quote_identifier(fk.column) + ") REFERENCES " +
                      quote_identifier(fk.foreign_table) + " (" + quote_identifier(fk.foreign_column) + ")");
    for (std::size_t i = 0; i < lines.size(); ++i) out << lines[i] << (i + 1 < lines.size() ? ",\n" : "\n");
    out << ");\n";
  }
  return out.str();
}

std::string render_detailed(const SchemaCatalog& catalog, const std::set<std::string>& tables) {
  std::string unknown;
  for (const auto& name : tables)
    if (!catalog.find_table(name)) unknown += (unknown.empty() ? "" : ", ") + name;
  if (!unknown.empty()) throw ValidationError("unknown tables: " + unknown);

  std::ostringstream out;
  bool first = true;
  for (const auto& t : catalog.tables()) {
    bool wanted = false;
    for (const auto& name : tables) wanted = wanted || iequals(name, t.name);
    if (!wanted) continue;
    if (!first) out << '\n';
    first = false;
    out << "Table " << t.name << ": " << t.description << '\n';
    for (const auto& c : t.columns) {
      out << "- " << c.name << " (" << c.sql_type << "): " << c.description;
      if (!c.example_values.empty()) {
        out << "; e.g. ";
        for (std::size_t i = 0; i < c.example_values.size(); ++i) out << (i ? ", " : "") << c.example_values[i];
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace reliasql
