#pragma once

// Independent reference implementations used to cross-check the library.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/sqlite_db.hpp"
#include "reliasql/templatizer.hpp"

namespace reliasql::testkit {

/// Tables the engine opens for `sql`: rootpages of OpenRead ops in its
/// EXPLAIN listing, mapped back through sqlite_master.
std::set<std::string> explain_tables(const Database& db, const std::string& sql);

/// Exhaustive scan: indices of the k entries closest to `query`, ties by text.
std::vector<std::size_t> brute_force_knn(const std::vector<double>& query, const std::vector<TemplateEntry>& entries,
                                         std::size_t k);

/// Nested-loop n-gram counts.
std::map<std::vector<std::string>, std::size_t> naive_ngrams(const std::vector<std::vector<std::string>>& corpus,
                                                             std::size_t n);

/// Vote by pairwise counting: each candidate's support is the number of
/// equal candidates; best (support, non-null, earliest first occurrence).
SqlOrNull vote_oracle(const std::vector<SqlOrNull>& candidates);

struct BitsetMetrics {
  double inclusion;
  double jaccard;
  double exact;
};
/// Table metrics over bitmask-encoded sets.
BitsetMetrics bitset_metrics(std::uint32_t gold, std::uint32_t pred);

/// RS by summing the case table directly.
double hand_rs(const std::vector<OutcomeLedger>& outcomes, double c);

}  // namespace reliasql::testkit
