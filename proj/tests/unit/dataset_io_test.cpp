#include <gtest/gtest.h>

#include <map>
#include <nlohmann/json.hpp>
#include <random>

#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"
#include "toy_db.hpp"

using namespace reliasql;

TEST(Dataset, ParsesBareArrayAndDataObject) {
  auto a = parse_dataset(R"([{"id":"1","question":"How many patients?"}])", std::nullopt, "dev");
  auto b = parse_dataset(R"({"version":"x","data":[{"id":"1","question":"How many patients?"}]})", std::nullopt);
  ASSERT_EQ(a.questions.size(), 1u);
  EXPECT_EQ(a.questions[0], b.questions[0]);
  EXPECT_EQ(a.split_name, "dev");
  EXPECT_FALSE(a.labels);
}

TEST(Dataset, LabelsAttach) {
  auto ds = parse_dataset(R"([{"id":"1","question":"q1"},{"id":"2","question":"q2"}])",
                          std::string(R"({"1":"SELECT 1","2":"null"})"));
  ASSERT_TRUE(ds.labels);
  EXPECT_TRUE(ds.labels->at("1").answerable());
  EXPECT_FALSE(ds.labels->at("2").answerable());
  EXPECT_EQ(ds.find("2")->raw_text, "q2");
  EXPECT_EQ(ds.find("3"), nullptr);
}

TEST(Dataset, Errors) {
  EXPECT_THROW(parse_dataset(R"([{"id":"1","question":"a"},{"id":"1","question":"b"}])", std::nullopt),
               ValidationError);
  EXPECT_THROW(parse_dataset(R"([{"id":"1","question":"a"}])", std::string(R"({"2":"SELECT 1"})")), ValidationError);
  EXPECT_THROW(parse_dataset(R"([{"id":"1"}])", std::nullopt), ValidationError);
  try {
    parse_dataset("[{\"id\": \"1\",", std::nullopt);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_GT(e.offset(), 0u);
  }
}

TEST(Dataset, StageFileRoundTrip) {
  QuestionRecord r{"q1", "how old is patient 10004457?", "how old is patient <patient number>?",
                   "what is the age of patient 10004457?", {{"<patient number>", "10004457"}}};
  QuestionRecord plain{"q2", "List the single rooms that are available now?", std::nullopt, std::nullopt, {}};
  auto dir = testkit::scratch_dir("stage");
  write_questions(dir / "q.json", {r, plain});
  auto ds = load_dataset(dir / "q.json");
  ASSERT_EQ(ds.questions.size(), 2u);
  EXPECT_EQ(ds.questions[0], r);
  EXPECT_EQ(ds.questions[1], plain);
}

TEST(Predictions, SerializationIsSortedAndCompact) {
  PredictionMap p{{"b", SqlOrNull::null()}, {"a", SqlOrNull::query("SELECT 1")}};
  EXPECT_EQ(serialize_predictions(p), R"({"a":"SELECT 1","b":"null"})");
  EXPECT_EQ(parse_predictions(serialize_predictions(p)), p);
  EXPECT_THROW(parse_predictions(R"({"a": 3})"), ValidationError);
  EXPECT_THROW(parse_predictions("[]"), ValidationError);
}

TEST(BoundedDraw, StaysInRangeAndIsReproducible) {
  std::mt19937_64 a(5), b(5);
  for (std::uint64_t bound : {1ull, 2ull, 3ull, 7ull, 1000ull, (1ull << 63) + 5}) {
    for (int i = 0; i < 200; ++i) {
      auto x = bounded_draw(a, bound);
      EXPECT_LT(x, bound);
      EXPECT_EQ(x, bounded_draw(b, bound));
    }
  }
}

TEST(PortableShuffle, IsAPermutation) {
  std::mt19937_64 rng(3);
  std::vector<int> v(50);
  for (int i = 0; i < 50; ++i) v[i] = i;
  auto w = v;
  portable_shuffle(w, rng);
  EXPECT_NE(w, v);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(w, v);
}

namespace {

Dataset seven_items() {
  // Two strata: 4 answerable, 3 unanswerable.
  return parse_dataset(
      R"([{"id":"a1","question":"x"},{"id":"a2","question":"x"},{"id":"a3","question":"x"},{"id":"a4","question":"x"},
          {"id":"u1","question":"x"},{"id":"u2","question":"x"},{"id":"u3","question":"x"}])",
      std::string(R"({"a1":"SELECT 1","a2":"SELECT 1","a3":"SELECT 1","a4":"SELECT 1","u1":"null","u2":"null","u3":"null"})"));
}

Categorizer by_answerability(const Dataset& ds) {
  return [&ds](const std::string& id) { return ds.labels->at(id).answerable() ? "ans" : "una"; };
}

}  // namespace

// 7 items, 2 strata, k = 3: among all assignments a balanced splitter could
// make, fold sizes are {3,2,2} and each stratum is spread with per-fold
// counts differing by at most one. Checked over many seeds.
TEST(StratifiedKFold, SevenItemsTwoStrataThreeFolds) {
  Dataset ds = seven_items();
  auto cat = by_answerability(ds);
  std::set<std::map<std::string, int>> distinct;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    FoldAssignment f = stratified_kfold(ds, 3, cat, seed);
    ASSERT_EQ(f.assignment.size(), 7u);
    std::map<int, int> sizes;
    std::map<std::pair<std::string, int>, int> per;
    for (const auto& [id, fold] : f.assignment) {
      ASSERT_GE(fold, 0);
      ASSERT_LT(fold, 3);
      ++sizes[fold];
      ++per[{cat(id), fold}];
    }
    std::vector<int> s;
    for (int i = 0; i < 3; ++i) s.push_back(sizes[i]);
    std::sort(s.begin(), s.end());
    EXPECT_EQ(s, (std::vector<int>{2, 2, 3}));
    for (std::string stratum : {"ans", "una"}) {
      int lo = 99, hi = -1;
      for (int i = 0; i < 3; ++i) {
        lo = std::min(lo, per[{stratum, i}]);
        hi = std::max(hi, per[{stratum, i}]);
      }
      EXPECT_LE(hi - lo, 1) << stratum << " seed " << seed;
    }
    distinct.insert(f.assignment);
    EXPECT_EQ(stratified_kfold(ds, 3, cat, seed).assignment, f.assignment);
  }
  EXPECT_GT(distinct.size(), 10u);
}

TEST(StratifiedKFold, FoldsPartitionTheIds) {
  Dataset ds = seven_items();
  FoldAssignment f = stratified_kfold(ds, 3, by_answerability(ds), 7);
  std::set<std::string> seen;
  for (int i = 0; i < 3; ++i)
    for (const auto& id : f.fold(i)) EXPECT_TRUE(seen.insert(id).second);
  EXPECT_EQ(seen.size(), 7u);
}

TEST(StratifiedKFold, Errors) {
  Dataset ds = seven_items();
  auto cat = by_answerability(ds);
  EXPECT_THROW(stratified_kfold(ds, 1, cat, 0), ValidationError);
  EXPECT_THROW(stratified_kfold(ds, 8, cat, 0), ValidationError);
  Dataset unlabeled = parse_dataset(R"([{"id":"a","question":"x"},{"id":"b","question":"y"}])", std::nullopt);
  EXPECT_THROW(stratified_kfold(unlabeled, 2, cat, 0), ValidationError);
}

TEST(StratifiedKFold, SerializationShape) {
  Dataset ds = seven_items();
  auto text = serialize_folds(stratified_kfold(ds, 3, by_answerability(ds), 7), 7);
  auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j["k"], 3);
  EXPECT_EQ(j["seed"], 7);
  EXPECT_EQ(j["assignment"].size(), 7u);
}
