#include "sql_gen.hpp"

#include <algorithm>

#include "reliasql/core.hpp"
#include "reliasql/dataset_io.hpp"

namespace reliasql::testkit {

namespace {

const std::vector<std::string> kStrings = {"aspirin", "duloxetine", "m", "f", "urine", "home", "creatinine",
                                           "heart rate", "i10", "emergency room", "it's", "none"};

struct DictionaryLink {
  const char* dictionary;
  const char* events;
  const char* key;
};
const DictionaryLink kLinks[] = {
    {"d_icd_diagnoses", "diagnoses_icd", "icd_code"}, {"d_icd_procedures", "procedures_icd", "icd_code"},
    {"d_labitems", "labevents", "itemid"},            {"d_items", "chartevents", "itemid"},
    {"d_items", "inputevents", "itemid"},             {"d_items", "outputevents", "itemid"},
};

}  // namespace

QueryGenerator::QueryGenerator(const SchemaCatalog& catalog, std::uint64_t seed) : catalog_(catalog), rng_(seed) {
  for (const auto& t : catalog_.tables())
    if (t.find_column("subject_id")) subject_tables_.push_back(&t);
}

std::size_t QueryGenerator::pick(std::size_t n) { return static_cast<std::size_t>(bounded_draw(rng_, n)); }
bool QueryGenerator::coin(int percent) { return static_cast<int>(pick(100)) < percent; }

const TableInfo& QueryGenerator::random_table() { return catalog_.tables()[pick(catalog_.tables().size())]; }
const TableInfo& QueryGenerator::random_subject_table() { return *subject_tables_[pick(subject_tables_.size())]; }

std::string QueryGenerator::spell(const std::string& table) {
  switch (pick(5)) {
    case 0: {
      std::string up = table;
      std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return std::toupper(c); });
      return up;
    }
    case 1: return "\"" + table + "\"";
    case 2: return "`" + table + "`";
    default: return table;
  }
}

std::string QueryGenerator::column(const TableInfo& t) { return t.columns[pick(t.columns.size())].name; }

std::string QueryGenerator::literal(const TableInfo& t, const std::string& col) {
  const ColumnInfo* info = t.find_column(col);
  std::string type = info ? to_lower(info->sql_type) : "";
  if (type.find("int") != std::string::npos) return std::to_string(pick(30000000));
  if (type.find("double") != std::string::npos) return std::to_string(pick(500)) + ".5";
  std::string s = kStrings[pick(kStrings.size())];
  std::string quoted;
  for (char c : s) quoted += c == '\'' ? std::string("''") : std::string(1, c);
  return "'" + quoted + "'";
}

std::string QueryGenerator::condition(const TableInfo& t, const std::string& prefix) {
  std::string col = column(t);
  static const char* ops[] = {"=", "<>", "<", ">=", "!="};
  std::string c = prefix + col + " " + ops[pick(5)] + " " + literal(t, col);
  if (coin(25)) c += " AND " + prefix + column(t) + " IS NOT NULL";
  if (coin(15)) c = "(" + c + ") OR " + prefix + col + " IN (" + literal(t, col) + ", " + literal(t, col) + ")";
  return c;
}

GeneratedQuery QueryGenerator::next() {
  GeneratedQuery q;
  switch (pick(10)) {
    case 0: {
      const auto& t = random_table();
      bool alias = coin();
      std::string a = alias ? "t0." : "";
      q.sql = "SELECT " + a + column(t) + ", " + a + column(t) + " FROM " + spell(t.name) + (alias ? " AS t0" : "");
      if (coin(70)) q.sql += " WHERE " + condition(t, a);
      if (coin(40)) q.sql += " ORDER BY " + a + column(t) + (coin() ? " DESC" : "");
      if (coin(30)) q.sql += " LIMIT " + std::to_string(1 + pick(5));
      q.tables = {t.name};
      break;
    }
    case 1: {
      const auto& t1 = random_subject_table();
      const auto& t2 = random_subject_table();
      std::string join = coin() ? " JOIN " : (coin() ? " LEFT JOIN " : " INNER JOIN ");
      q.sql = "SELECT a." + column(t1) + ", b." + column(t2) + " FROM " + spell(t1.name) + " a" + join + spell(t2.name) +
              " b ON a.subject_id = b.subject_id";
      if (coin()) q.sql += " WHERE " + condition(t2, "b.");
      q.tables = {t1.name, t2.name};
      break;
    }
    case 2: {
      const auto& link = kLinks[pick(std::size(kLinks))];
      const TableInfo& d = *catalog_.find_table(link.dictionary);
      const TableInfo& e = *catalog_.find_table(link.events);
      q.sql = std::string("SELECT d.") + column(d) + ", COUNT(*) FROM " + spell(e.name) + " AS e JOIN " + spell(d.name) +
              " AS d ON e." + link.key + " = d." + link.key + " WHERE " + condition(e, "e.") + " GROUP BY d." + column(d);
      q.tables = {d.name, e.name};
      break;
    }
    case 3: {
      const auto& t1 = random_subject_table();
      const auto& t2 = random_subject_table();
      q.sql = "SELECT " + column(t1) + " FROM " + spell(t1.name) + " WHERE subject_id IN (SELECT subject_id FROM " +
              spell(t2.name) + " WHERE " + condition(t2, "") + ")";
      q.tables = {t1.name, t2.name};
      break;
    }
    case 4: {
      const auto& t1 = random_subject_table();
      const auto& t2 = random_subject_table();
      q.sql = "WITH recent AS (SELECT subject_id, " + column(t1) + " FROM " + spell(t1.name) +
              ") SELECT COUNT(*) FROM recent JOIN " + spell(t2.name) + " ON recent.subject_id = " + t2.name +
              ".subject_id";
      q.tables = {t1.name, t2.name};
      break;
    }
    case 5: {
      const auto& t = random_table();
      q.sql = "SELECT COUNT(*) FROM (SELECT " + column(t) + " FROM " + spell(t.name) + " WHERE " + condition(t, "") +
              ") AS sub";
      q.tables = {t.name};
      break;
    }
    case 6: {
      const auto& t1 = random_subject_table();
      const TableInfo* t2 = &random_subject_table();
      while (t2 == &t1) t2 = &random_subject_table();
      q.sql = "SELECT " + t1.name + ".subject_id FROM " + t1.name + ", " + t2->name + " WHERE " + t1.name +
              ".subject_id = " + t2->name + ".subject_id";
      q.tables = {t1.name, t2->name};
      break;
    }
    case 7: {
      const auto& t1 = random_subject_table();
      const auto& t2 = random_subject_table();
      q.sql = "SELECT subject_id FROM " + spell(t1.name) + (coin() ? " UNION " : " UNION ALL ") +
              "SELECT subject_id FROM " + spell(t2.name);
      q.tables = {t1.name, t2.name};
      break;
    }
    case 8: {
      const auto& t1 = random_table();
      const auto& t2 = random_table();
      q.sql = "SELECT (SELECT COUNT(*) FROM " + spell(t2.name) + ") AS n, " + column(t1) + " FROM " + spell(t1.name);
      q.tables = {t1.name, t2.name};
      break;
    }
    default: {
      const auto& t1 = random_subject_table();
      const auto& t2 = random_subject_table();
      q.sql = "SELECT x." + column(t1) + " FROM " + spell(t1.name) + " x WHERE " + (coin() ? "NOT " : "") +
              "EXISTS (SELECT 1 FROM " + spell(t2.name) + " y WHERE y.subject_id = x.subject_id)";
      q.tables = {t1.name, t2.name};
      break;
    }
  }
  if (coin(10) && q.sql.rfind("SELECT", 0) == 0) q.sql = "select" + q.sql.substr(6);
  return q;
}

std::vector<std::string> fuzz_corpus(const SchemaCatalog& catalog, std::uint64_t seed, std::size_t n) {
  QueryGenerator gen(catalog, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  auto pick = [&](std::size_t k) { return static_cast<std::size_t>(bounded_draw(rng, k)); };

  static const std::vector<std::string> non_sql = {
      "",
      "null",
      "   ",
      "SELECT",
      "How many patients are there?",
      "DELETE FROM patients",
      "DROP TABLE admissions",
      "INSERT INTO patients VALUES (9, 9, 'm', NULL, NULL)",
      "UPDATE prescriptions SET drug = 'x'",
      "CREATE TABLE scratch (a INTEGER)",
      "PRAGMA writable_schema = 1",
      "ATTACH DATABASE 'other.db' AS other",
      "SELECT 1; DROP TABLE patients",
      "BEGIN",
      "VACUUM",
      "-- only a comment",
      "/* unterminated",
      "SELECT 'unterminated",
      "SELECT load_extension('libx')",
      "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c",
      "SELECT * FROM patients WHERE",
      "```sql\nSELECT 1\n```",
      "I cannot answer that question.",
      "SELECT (((1)",
      "SELECT 1 FROM sqlite_master",
      "SELECT abs(-9223372036854775808)",
      "SELECT 1 UNION SELECT 1, 2",
      "SELECT subject_id FROM patients GROUP BY",
  };
  static const std::vector<std::string> words = {"select", "from", "where", "patient", "(", ")", ",", "'", "\"",
                                                 "*", "=", "join", "on", "admissions", "drug", ";", "count", "?"};

  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    switch (i % 3) {
      case 0: out.push_back(gen.next().sql); break;
      case 1: {
        std::string s = gen.next().sql;
        switch (pick(6)) {
          case 0: s.erase(pick(s.size()), 1); break;
          case 1: s.insert(pick(s.size()), 1, "(),'\"*;x"[pick(8)]); break;
          case 2: s = s.substr(0, pick(s.size())); break;
          case 3: {
            auto pos = s.find("FROM ");
            if (pos != std::string::npos && pos + 6 < s.size()) s.erase(pos + 6, 1);
            break;
          }
          case 4: {
            auto pos = s.find(" = ");
            if (pos != std::string::npos) s.replace(pos, 3, " == == ");
            else s += " WHERE";
            break;
          }
          default: s.insert(pick(s.size()), " " + words[pick(words.size())] + " "); break;
        }
        out.push_back(s);
        break;
      }
      default: {
        if (pick(2) == 0) {
          out.push_back(non_sql[pick(non_sql.size())]);
        } else {
          std::string s;
          std::size_t len = 1 + pick(12);
          for (std::size_t w = 0; w < len; ++w) s += words[pick(words.size())] + " ";
          out.push_back(s);
        }
        break;
      }
    }
  }
  return out;
}

}  // namespace reliasql::testkit
