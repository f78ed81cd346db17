#include <gtest/gtest.h>

#include "reliasql/error.hpp"
#include "reliasql/schema_catalog.hpp"
#include "reliasql/sqlite_db.hpp"
#include "toy_db.hpp"

using namespace reliasql;

namespace {

const char* kSmall = R"J({"dialect":"sqlite","tables":[
  {"name":"patients","description":"people","columns":[
     {"name":"subject_id","type":"INTEGER","description":"id","examples":["1"]},
     {"name":"gender","type":"VARCHAR(5)","description":"sex","examples":["m","f"]}],
   "primary_key":"subject_id"},
  {"name":"admissions","description":"stays","columns":[
     {"name":"hadm_id","type":"INTEGER","description":"stay id"},
     {"name":"subject_id","type":"INTEGER","description":"patient"},
     {"name":"order","type":"TEXT","description":"keyword-named column"}],
   "primary_key":"hadm_id",
   "foreign_keys":[{"column":"subject_id","ref_table":"patients","ref_column":"subject_id"}]}]})J";

}  // namespace

TEST(Catalog, ParsesAndLooksUpCaseInsensitively) {
  auto c = parse_catalog(kSmall);
  EXPECT_EQ(c.size(), 2u);
  ASSERT_NE(c.find_table("ADMISSIONS"), nullptr);
  EXPECT_NE(c.find_table("admissions")->find_column("Subject_ID"), nullptr);
  EXPECT_TRUE(c.has_column_anywhere("gender"));
  EXPECT_FALSE(c.has_column_anywhere("drug"));
}

TEST(Catalog, RejectsDanglingForeignKey) {
  std::string bad = kSmall;
  bad.replace(bad.find("\"ref_table\":\"patients\""), 22, "\"ref_table\":\"people\"  ");
  try {
    parse_catalog(bad);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("dangling foreign key"), std::string::npos);
  }
}

TEST(Catalog, RejectsDuplicatesAndBadPrimaryKey) {
  EXPECT_THROW(SchemaCatalog({TableInfo{"t", "", {}, std::nullopt, {}}, TableInfo{"T", "", {}, std::nullopt, {}}}),
               ValidationError);
  EXPECT_THROW(SchemaCatalog({TableInfo{"t", "", {ColumnInfo{"a", "INT", "", {}}}, std::string("b"), {}}}),
               ValidationError);
  EXPECT_THROW(parse_catalog("{\"tables\": ["), ParseError);
  EXPECT_THROW(parse_catalog(R"({"dialect":"postgres","tables":[]})"), ValidationError);
}

TEST(Render, NaturalLanguageListsEveryTable) {
  auto c = parse_catalog(kSmall);
  EXPECT_EQ(render_brief(c, RenderFormat::NaturalLanguage),
            "patients: people\ncolumns: subject_id, gender\n\nadmissions: stays\ncolumns: hadm_id, subject_id, order\n");
}

TEST(Render, DdlIsExecutable) {
  auto c = parse_catalog(kSmall);
  std::string ddl = render_brief(c, RenderFormat::Ddl);
  EXPECT_NE(ddl.find("CREATE TABLE"), std::string::npos);
  EXPECT_NE(ddl.find("\"order\" TEXT"), std::string::npos);
  Database db = Database::open_memory();
  EXPECT_NO_THROW(db.exec_script(ddl));
  auto tables = db.query("SELECT name FROM sqlite_master WHERE type = 'table' ORDER BY name", 1000);
  ASSERT_TRUE(tables.ok());
  EXPECT_EQ(tables.rows().size(), 2u);
}

TEST(Render, ShippedCatalogDdlIsExecutable) {
  auto c = testkit::load_toy_catalog();
  EXPECT_EQ(c.size(), 17u);
  Database db = Database::open_memory();
  db.exec_script(render_brief(c, RenderFormat::Ddl));
  auto n = db.query("SELECT COUNT(*) FROM sqlite_master WHERE type = 'table'", 1000);
  EXPECT_EQ(std::get<std::int64_t>(n.rows()[0][0]), 17);
}

TEST(Render, DetailedCoversOnlyRequestedTables) {
  auto c = parse_catalog(kSmall);
  std::string d = render_detailed(c, {"Admissions"});
  EXPECT_EQ(d,
            "Table admissions: stays\n- hadm_id (INTEGER): stay id\n- subject_id (INTEGER): patient\n"
            "- order (TEXT): keyword-named column\n");
  EXPECT_NE(render_detailed(c, {"patients"}).find("e.g. m, f"), std::string::npos);
  EXPECT_EQ(render_detailed(c, {}), "");
  EXPECT_THROW(render_detailed(c, {"meds"}), ValidationError);
}

TEST(Render, FormatNames) {
  EXPECT_EQ(render_format_from_string("DDL"), RenderFormat::Ddl);
  EXPECT_EQ(render_format_from_string("natural"), RenderFormat::NaturalLanguage);
  EXPECT_THROW(render_format_from_string("yaml"), ConfigError);
}

TEST(QuoteIdentifier, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(quote_identifier("admissions"), "admissions");
  EXPECT_EQ(quote_identifier("order"), "\"order\"");
  EXPECT_EQ(quote_identifier("a b"), "\"a b\"");
  EXPECT_EQ(quote_identifier("1x"), "\"1x\"");
  EXPECT_EQ(quote_identifier("we\"ird"), "\"we\"\"ird\"");
}
