#include <gtest/gtest.h>

#include <chrono>

#include "reliasql/error.hpp"
#include "reliasql/sqlite_db.hpp"
#include "toy_db.hpp"

using namespace reliasql;

namespace {
const Database& toy() {
  static Database db = Database::open(testkit::toy_database());
  return db;
}
}  // namespace

TEST(Database, SelectOne) {
  auto r = toy().query("SELECT 1", 1000);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.rows().size(), 1u);
  EXPECT_EQ(r.rows()[0][0], Value(std::int64_t{1}));
}

TEST(Database, FailureKinds) {
  EXPECT_EQ(toy().query("SELEC 1", 1000).failure().kind, FailureKind::Syntax);
  EXPECT_EQ(toy().query("SELECT * FROM no_such_table", 1000).failure().kind, FailureKind::MissingObject);
  EXPECT_EQ(toy().query("SELECT no_such_column FROM patients", 1000).failure().kind, FailureKind::MissingObject);
  EXPECT_EQ(toy().query("SELECT 1; SELECT 2", 1000).failure().kind, FailureKind::Runtime);
  EXPECT_EQ(toy().query("DELETE FROM patients", 1000).failure().kind, FailureKind::Runtime);
  EXPECT_EQ(toy().query("PRAGMA table_info(patients)", 1000).failure().kind, FailureKind::Runtime);
}

TEST(Database, WritesNeverLand) {
  for (const char* sql : {"DELETE FROM patients", "DROP TABLE admissions", "UPDATE patients SET gender = 'x'",
                          "INSERT INTO patients VALUES (9, 9, 'm', NULL, NULL)", "SELECT 1; DELETE FROM patients"})
    EXPECT_FALSE(toy().query(sql, 1000).ok()) << sql;
  auto n = toy().query("SELECT COUNT(*) FROM patients", 1000);
  EXPECT_EQ(n.rows()[0][0], Value(std::int64_t{3}));
}

TEST(Database, TimeoutInterrupts) {
  auto start = std::chrono::steady_clock::now();
  auto r = toy().query("WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x + 1 FROM c) SELECT COUNT(*) FROM c", 100);
  auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  ASSERT_FALSE(r.ok());
  EXPECT_EQ(r.failure().kind, FailureKind::Timeout);
  EXPECT_LT(ms, 2000);
}

TEST(Database, RowOrderIsEngineOrder) {
  auto asc = toy().query("SELECT subject_id FROM patients ORDER BY subject_id", 1000);
  auto desc = toy().query("SELECT subject_id FROM patients ORDER BY subject_id DESC", 1000);
  ASSERT_TRUE(asc.ok() && desc.ok());
  EXPECT_EQ(asc.rows().front()[0], desc.rows().back()[0]);
  EXPECT_EQ(canonical_rows(asc.rows()), canonical_rows(desc.rows()));
}

TEST(Database, ValueTypes) {
  auto r = toy().query("SELECT NULL, 2, 2.5, 'x', X'00ff'", 1000);
  ASSERT_TRUE(r.ok());
  const Row& row = r.rows()[0];
  EXPECT_TRUE(std::holds_alternative<std::monostate>(row[0]));
  EXPECT_EQ(row[1], Value(std::int64_t{2}));
  EXPECT_EQ(row[2], Value(2.5));
  EXPECT_EQ(row[3], Value(std::string("x")));
  EXPECT_EQ(std::get<Blob>(row[4]).bytes, (std::vector<std::uint8_t>{0x00, 0xff}));
}

TEST(Database, OpenMissingFileIsConfigError) {
  EXPECT_THROW(Database::open("/nonexistent/dir/x.db"), ConfigError);
}

TEST(ValueOrder, NullNumbersTextBlob) {
  EXPECT_TRUE(value_less(Value{}, Value(std::int64_t{-5})));
  EXPECT_TRUE(value_less(Value(std::int64_t{2}), Value(2.5)));
  EXPECT_TRUE(value_less(Value(2.5), Value(std::int64_t{3})));
  EXPECT_TRUE(value_less(Value(std::int64_t{99}), Value(std::string("a"))));
  EXPECT_TRUE(value_less(Value(std::string("z")), Value(Blob{{0}})));
  EXPECT_FALSE(value_less(Value(std::string("a")), Value(std::string("a"))));
}
