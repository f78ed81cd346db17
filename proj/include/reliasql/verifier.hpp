#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/schema_catalog.hpp"
#include "reliasql/sqlite_db.hpp"

namespace reliasql {

inline constexpr int kDefaultTimeoutMs = 30000;

/// Runs `sql` read-only with a time limit; see Database::query.
ExecutionOutcome execute_check(const std::string& sql, const Database& db, int timeout_ms = kDefaultTimeoutMs);

struct ValueLocation {
  std::string table;
  std::string column;
  friend auto operator<=>(const ValueLocation&, const ValueLocation&) = default;
};

/// Where each short text value occurs in the database.
class ValueIndex {
 public:
  static constexpr std::size_t kMaxValueLength = 64;

  /// Scans every text-affinity catalog column present in `db`.
  static ValueIndex build(const Database& db, const SchemaCatalog& catalog);

  void add(std::string value, ValueLocation location);
  const std::set<ValueLocation>* find(const std::string& value) const;
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::map<std::string, std::set<ValueLocation>> values_;
};

/// True when the SQLite type name has TEXT affinity (contains CHAR, CLOB or TEXT).
bool has_text_affinity(std::string_view sql_type);

struct RepairResult {
  std::string sql;
  bool changed = false;
};

/// Replaces table and column names missing from the catalog with the unique
/// catalog name within edit distance 2, or else with the unique location of a
/// string literal compared against them. Names already in the catalog,
/// aliases and CTE names are never touched. Throws ParseError.
RepairResult repair_names(const std::string& sql, const SchemaCatalog& catalog, const ValueIndex& values);

/// True when the text mentions "patient <digits>" with a digit count other than 8.
bool patient_id_gate(std::string_view raw_text);

/// True when `tokens` is non-empty and every token is in `vocab`.
bool vocab_gate(const std::vector<std::string>& tokens, const std::set<std::string>& vocab);

struct GateFlags {
  bool patient_id = true;
  bool vocabulary = false;
};

struct VerifyContext {
  const Database& db;
  const SchemaCatalog& catalog;
  const ValueIndex& values;
  GateFlags gates;
  const std::set<std::string>* unanswerable_vocab = nullptr;  // needed when gates.vocabulary
  int timeout_ms = kDefaultTimeoutMs;
};

/// Candidate after gates, execution and at most one repair. A returned query
/// always executes; everything else becomes the abstention.
SqlOrNull verify(const SqlOrNull& candidate, const QuestionRecord& question, const VerifyContext& ctx);

/// verify() applied to a generated candidate, recording the stage change and
/// the reason in its notes.
Candidate verify_candidate(Candidate candidate, const QuestionRecord& question, const VerifyContext& ctx);

}  // namespace reliasql
