#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <numeric>

#include <sqlite3.h>

namespace reliasql::testkit {

std::set<std::string> explain_tables(const Database& db, const std::string& sql) {
  std::map<std::int64_t, std::string> roots;
  auto master = db.query("SELECT rootpage, tbl_name FROM sqlite_master WHERE rootpage > 0", 10000);
  for (const auto& row : master.rows()) roots[std::get<std::int64_t>(row[0])] = std::get<std::string>(row[1]);

  std::set<std::string> out;
  sqlite3_stmt* stmt = nullptr;
  std::string text = "EXPLAIN " + sql;
  if (sqlite3_prepare_v2(db.handle(), text.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
    sqlite3_finalize(stmt);
    throw std::runtime_error("EXPLAIN failed: " + sql);
  }
  while (sqlite3_step(stmt) == SQLITE_ROW) {
    std::string opcode = reinterpret_cast<const char*>(sqlite3_column_text(stmt, 1));
    if (opcode != "OpenRead") continue;
    auto it = roots.find(sqlite3_column_int64(stmt, 3));
    if (it != roots.end()) out.insert(it->second);
  }
  sqlite3_finalize(stmt);
  return out;
}

std::vector<std::size_t> brute_force_knn(const std::vector<double>& query, const std::vector<TemplateEntry>& entries,
                                         std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < query.size(); ++d) {
      double diff = query[d] - entries[i].vector.values[d];
      s += diff * diff;
    }
    all.emplace_back(std::sqrt(s), i);
  }
  std::sort(all.begin(), all.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return entries[a.second].text < entries[b.second].text;
  });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
  return out;
}

std::map<std::vector<std::string>, std::size_t> naive_ngrams(const std::vector<std::vector<std::string>>& corpus,
                                                             std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (const auto& q : corpus) {
    for (std::size_t start = 0; start + n <= q.size(); ++start) {
      std::vector<std::string> gram;
      for (std::size_t j = 0; j < n; ++j) gram.push_back(q[start + j]);
      ++counts[gram];
    }
  }
  return counts;
}

namespace {
std::string squash(const std::string& s) {
  std::string out;
  bool space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}
bool same(const SqlOrNull& a, const SqlOrNull& b) {
  if (a.is_null() || b.is_null()) return a.is_null() && b.is_null();
  return squash(a.sql()) == squash(b.sql());
}
}  // namespace

SqlOrNull vote_oracle(const std::vector<SqlOrNull>& c) {
  std::size_t best = 0;
  std::size_t best_support = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    std::size_t first = i;
    for (std::size_t j = 0; j < i; ++j)
      if (same(c[j], c[i])) {
        first = j;
        break;
      }
    if (first != i) continue;  // group already considered at its first member
    std::size_t support = 0;
    for (const auto& other : c) support += same(other, c[i]);
    bool better = support > best_support ||
                  (support == best_support && c[best].is_null() && !c[i].is_null());
    if (i == 0 || better) {
      best = i;
      best_support = support;
    }
  }
  return c[best];
}

BitsetMetrics bitset_metrics(std::uint32_t gold, std::uint32_t pred) {
  int inter = std::popcount(gold & pred);
  int uni = std::popcount(gold | pred);
  return {(gold & ~pred) == 0 ? 1.0 : 0.0, uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni),
          gold == pred ? 1.0 : 0.0};
}

double hand_rs(const std::vector<OutcomeLedger>& outcomes, double c) {
  double total = 0;
  for (const auto& o : outcomes) {
    if (o.answerable() && o.attempted()) total += *o.correct() ? 1.0 : -c;
    else if (o.answerable()) total += 0.0;
    else if (o.attempted()) total += -c;
    else total += 1.0;
  }
  return 100.0 * total / static_cast<double>(outcomes.size());
}

}  // namespace reliasql::testkit
