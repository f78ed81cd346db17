#include "reliasql/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reliasql/error.hpp"
#include "reliasql/sql_lexer.hpp"

namespace reliasql {

using nlohmann::json;

bool values_match(const Value& a, const Value& b) {
  const bool a_num = a.index() == 1 || a.index() == 2;
  const bool b_num = b.index() == 1 || b.index() == 2;
  if (a_num && b_num) {
    if (a.index() == 1 && b.index() == 1) return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    const double x = a.index() == 1 ? static_cast<double>(std::get<std::int64_t>(a)) : std::get<double>(a);
    const double y = b.index() == 1 ? static_cast<double>(std::get<std::int64_t>(b)) : std::get<double>(b);
    if (x == y) return true;
    return std::fabs(x - y) <= 1e-9 * std::max(std::fabs(x), std::fabs(y));
  }
  return a == b;
}

namespace {

bool rows_match(const std::vector<Row>& a, const std::vector<Row>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (std::size_t j = 0; j < a[i].size(); ++j)
      if (!values_match(a[i][j], b[i][j])) return false;
  }
  return true;
}

}  // namespace

bool exec_accuracy(const std::string& pred_sql, const std::string& gold_sql, const Database& db, int timeout_ms) {
  auto gold = db.query(gold_sql, timeout_ms);
  if (!gold.ok()) throw ConfigError("gold query failed to execute: " + gold.failure().message);
  auto pred = db.query(pred_sql, timeout_ms);
  if (!pred.ok()) return false;
  if (sql::has_top_level_order_by(gold_sql)) return rows_match(pred.rows(), gold.rows());
  return rows_match(canonical_rows(pred.rows()), canonical_rows(gold.rows()));
}

Penalty Penalty::parse(std::string_view text) {
  std::string t = trim(text);
  if (t == "N" || t == "n") return Penalty{"N", std::nullopt};
  try {
    std::size_t used = 0;
    double c = std::stod(t, &used);
    if (used != t.size() || c < 0 || !std::isfinite(c)) throw std::invalid_argument(t);
    return Penalty{t, c};
  } catch (const std::exception&) {
    throw ConfigError("invalid penalty '" + t + "' (expected a non-negative number or N)");
  }
}

std::vector<Penalty> parse_penalties(std::string_view comma_separated) {
  std::vector<Penalty> out;
  std::size_t pos = 0;
  while (pos <= comma_separated.size()) {
    auto comma = comma_separated.find(',', pos);
    auto piece = comma_separated.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    if (!trim(piece).empty()) out.push_back(Penalty::parse(piece));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("no penalties given");
  return out;
}

std::vector<Penalty> default_penalties() { return parse_penalties("0,5,10,N"); }

double RSReport::at(const std::string& label) const {
  for (const auto& [l, v] : rs)
    if (l == label) return v;
  throw std::out_of_range("no RS value for penalty " + label);
}

RSReport score_outcomes(const std::vector<OutcomeLedger>& outcomes, const std::vector<Penalty>& penalties) {
  RSReport r;
  r.n_total = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.answerable()) {
      ++r.n_ans;
      if (!o.attempted())
        ++r.n_abstain_ans;
      else if (*o.correct())
        ++r.n_correct;
      else
        ++r.n_wrong;
    } else {
      ++r.n_una;
      if (o.attempted())
        ++r.n_attempt_una;
      else
        ++r.n_abstain_una;
    }
  }
  for (const auto& p : penalties) {
    const double c = p.resolve(r.n_total);
    double sum = 0.0;
    for (const auto& o : outcomes) sum += phi(o, c);
    r.rs.emplace_back(p.label, r.n_total ? 100.0 * sum / static_cast<double>(r.n_total) : 0.0);
  }
  return r;
}

RSReport score(const PredictionMap& predictions, const std::map<std::string, GoldLabel>& golds, const Database& db,
               const std::vector<Penalty>& penalties, int timeout_ms) {
  for (const auto& [id, _] : predictions)
    if (!golds.count(id)) throw ValidationError("prediction id " + id + " has no gold label");

  std::vector<OutcomeLedger> outcomes;
  outcomes.reserve(golds.size());
  std::size_t missing = 0;
  for (const auto& [id, gold] : golds) {
    auto it = predictions.find(id);
    if (it == predictions.end()) ++missing;
    const bool attempted = it != predictions.end() && it->second.is_query();
    if (!gold.answerable()) {
      outcomes.emplace_back(id, false, attempted, std::nullopt);
    } else if (!attempted) {
      outcomes.push_back(OutcomeLedger::abstained(id, true));
    } else {
      outcomes.push_back(OutcomeLedger::answered(id, exec_accuracy(it->second.sql(), gold.answer.sql(), db, timeout_ms)));
    }
  }
  if (missing) std::cerr << "warning: " << missing << " question(s) have no prediction; scored as abstentions\n";
  RSReport r = score_outcomes(outcomes, penalties);
  r.n_missing_predictions = missing;
  return r;
}

namespace {

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string report_json(const RSReport& r) {
  json doc = {{"n_total", r.n_total},
              {"n_ans", r.n_ans},
              {"n_una", r.n_una},
              {"n_correct", r.n_correct},
              {"n_abstain_ans", r.n_abstain_ans},
              {"n_wrong", r.n_wrong},
              {"n_attempt_una", r.n_attempt_una},
              {"n_abstain_una", r.n_abstain_una},
              {"n_missing_predictions", r.n_missing_predictions}};
  json rs = json::object();
  for (const auto& [label, value] : r.rs) rs[label] = round2(value);
  doc["rs"] = rs;
  return doc.dump(2) + "\n";
}

std::string report_table(const RSReport& r) {
  std::ostringstream out;
  out << "questions " << r.n_total << " (answerable " << r.n_ans << ", unanswerable " << r.n_una << ")\n";
  out << "  correct " << r.n_correct << "  wrong " << r.n_wrong << "  abstained(ans) " << r.n_abstain_ans
      << "  attempted(una) " << r.n_attempt_una << "  abstained(una) " << r.n_abstain_una << '\n';
  for (const auto& [label, value] : r.rs) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "  RS(%s) = %.2f\n", label.c_str(), value);
    out << buf;
  }
  return out.str();
}

TableSetMetrics table_metrics_one(const std::set<std::string>& gold, const std::set<std::string>& pred) {
  TableSetMetrics m;
  std::size_t inter = 0;
  for (const auto& g : gold) inter += pred.count(g);
  const std::size_t uni = gold.size() + pred.size() - inter;
  m.inclusion = inter == gold.size() ? 1.0 : 0.0;
  m.jaccard = uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  m.exact = gold == pred ? 1.0 : 0.0;
  return m;
}

TableSetMetrics table_metrics(const std::vector<TableSetPair>& pairs) {
  TableSetMetrics sum;
  if (pairs.empty()) return sum;
  for (const auto& [gold, pred] : pairs) {
    auto m = table_metrics_one(gold, pred);
    sum.inclusion += m.inclusion;
    sum.jaccard += m.jaccard;
    sum.exact += m.exact;
  }
  const double n = static_cast<double>(pairs.size());
  return {sum.inclusion / n, sum.jaccard / n, sum.exact / n};
}

}  // namespace reliasql
