#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/dataset_io.hpp"
#include "reliasql/sqlite_db.hpp"

namespace reliasql {

/// True when both queries execute and give the same rows: compared as a
/// multiset unless the gold query orders its top-level result, numbers equal
/// within 1e-9 relative tolerance. Throws ConfigError if the gold query fails.
bool exec_accuracy(const std::string& pred_sql, const std::string& gold_sql, const Database& db, int timeout_ms = 30000);

bool values_match(const Value& a, const Value& b);

/// A penalty level: a fixed c, or "N" meaning c equals the number of scored questions.
struct Penalty {
  std::string label;
  std::optional<double> value;  // nullopt for "N"

  static Penalty parse(std::string_view text);
  double resolve(std::size_t n_total) const { return value ? *value : static_cast<double>(n_total); }
};

std::vector<Penalty> parse_penalties(std::string_view comma_separated);
std::vector<Penalty> default_penalties();  // 0, 5, 10, N

struct RSReport {
  std::size_t n_total = 0;
  std::size_t n_ans = 0;
  std::size_t n_una = 0;
  std::size_t n_correct = 0;
  std::size_t n_abstain_ans = 0;
  std::size_t n_wrong = 0;
  std::size_t n_attempt_una = 0;
  std::size_t n_abstain_una = 0;
  std::size_t n_missing_predictions = 0;
  std::vector<std::pair<std::string, double>> rs;  // in penalty order

  std::size_t n_penalized() const { return n_wrong + n_attempt_una; }
  double at(const std::string& label) const;
};

/// Reliability score over precomputed outcomes: rs[label] = 100 * sum(phi_c) / n.
RSReport score_outcomes(const std::vector<OutcomeLedger>& outcomes, const std::vector<Penalty>& penalties);

/// Scores predictions against gold labels on `db`. Missing predictions count
/// as abstentions; prediction ids absent from the gold set are rejected.
RSReport score(const PredictionMap& predictions, const std::map<std::string, GoldLabel>& golds, const Database& db,
               const std::vector<Penalty>& penalties, int timeout_ms = 30000);

/// JSON report; rs values rounded to 2 decimals.
std::string report_json(const RSReport& report);
/// Human-readable counts and scores.
std::string report_table(const RSReport& report);

struct TableSetMetrics {
  double inclusion = 0.0;
  double jaccard = 0.0;
  double exact = 0.0;
};

using TableSetPair = std::pair<std::set<std::string>, std::set<std::string>>;  // (gold, predicted)

TableSetMetrics table_metrics_one(const std::set<std::string>& gold, const std::set<std::string>& pred);
/// Means over pairs; all zero for an empty input.
TableSetMetrics table_metrics(const std::vector<TableSetPair>& pairs);

}  // namespace reliasql
