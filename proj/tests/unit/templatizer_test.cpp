#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reliasql/error.hpp"
#include "reliasql/prompts.hpp"
#include "reliasql/templatizer.hpp"
#include "toy_db.hpp"

using namespace reliasql;

namespace {

Lexicons with_procedures() {
  return parse_lexicons(R"J({
    "<patient number>": "\\bpatient (\\d+)",
    "<procedure>": ["coronary arteriography using two catheters", "hemodialysis", "venous catheterization"],
    "<drug>": ["duloxetine", "aspirin"]
  })J");
}

QuestionRecord masked_record(const std::string& id, const std::string& raw, const Lexicons& lex) {
  auto m = mask_values(raw, lex);
  return QuestionRecord{id, raw, m.masked_text, std::nullopt, m.bindings};
}

EmbeddingVector random_vector(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingVector v;
  for (std::size_t i = 0; i < dim; ++i) v.values.push_back(n(rng));
  return v;
}

}  // namespace

TEST(Mask, PatientNumberAndProcedure) {
  auto m = mask_values(
      "Count how many times in the first hospital visit patient 10004457 had coronary arteriography using two "
      "catheters.",
      with_procedures());
  EXPECT_NE(m.masked_text.find("patient <patient number>"), std::string::npos);
  EXPECT_NE(m.masked_text.find("<procedure>"), std::string::npos);
  EXPECT_EQ(m.masked_text.find("10004457"), std::string::npos);
  ASSERT_EQ(m.bindings.size(), 2u);
  EXPECT_EQ(m.bindings[0], (Binding{"<patient number>", "10004457"}));
  EXPECT_EQ(m.bindings[1], (Binding{"<procedure>", "coronary arteriography using two catheters"}));
}

TEST(Mask, NoLexiconsLeavesTextAlone) {
  auto m = mask_values("List the single rooms that are available now?", Lexicons{});
  EXPECT_EQ(m.masked_text, "List the single rooms that are available now?");
  EXPECT_TRUE(m.bindings.empty());
}

TEST(Mask, TermsAreWordBoundedAndCaseInsensitive) {
  auto m = mask_values("Was Aspirin given? aspirinate is not a drug.", with_procedures());
  EXPECT_EQ(m.masked_text, "Was <drug> given? aspirinate is not a drug.");
  EXPECT_EQ(m.bindings[0].original, "Aspirin");
}

TEST(Mask, RestorationReproducesRawText) {
  auto r = masked_record("q", "Did patient 10014729 get hemodialysis after patient 10004457 got aspirin?",
                         with_procedures());
  EXPECT_NO_THROW(validate(r));
  EXPECT_EQ(restore_bindings(*r.masked_text, r.bindings), r.raw_text);
}

// mask(mask(x)) == mask(x) on a generated corpus.
TEST(Mask, IdempotentOnGeneratedCorpus) {
  const std::vector<std::string> words = {"what",   "is",         "the",         "patient",  "had",     "hemodialysis",
                                          "aspirin", "duloxetine", "since",       "last",     "visit",   "count",
                                          "<unk>",  "coronary",   "arteriography", "using",  "two",     "catheters",
                                          "venous", "catheterization", "patient's", "?",       "Patient", "first"};
  Lexicons lex = with_procedures();
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 1000; ++i) {
    std::string q;
    int len = 3 + static_cast<int>(rng() % 15);
    for (int w = 0; w < len; ++w) {
      if (rng() % 6 == 0) q += "patient " + std::to_string(rng() % 100000000) + " ";
      else q += words[rng() % words.size()] + " ";
    }
    auto once = mask_values(q, lex);
    auto twice = mask_values(once.masked_text, lex);
    ASSERT_EQ(twice.masked_text, once.masked_text) << q;
    ASSERT_TRUE(twice.bindings.empty()) << q;
    ASSERT_EQ(restore_bindings(once.masked_text, once.bindings), q);
  }
}

TEST(Lexicons, Errors) {
  EXPECT_THROW(parse_lexicons(R"({"<x>": 3})"), ValidationError);
  EXPECT_THROW(parse_lexicons(R"({"<x>": "("})"), ValidationError);
  EXPECT_THROW(parse_lexicons("[1"), ParseError);
}

TEST(HashingEmbedder, DeterministicUnitVectors) {
  HashingEmbedder e(512);
  auto a = e.embed("How many patients were admitted");
  auto b = e.embed("how   many PATIENTS were admitted");
  EXPECT_EQ(a.dim(), 512u);
  EXPECT_EQ(a.values, b.values);
  double norm = 0;
  for (double v : a.values) norm += v * v;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  auto empty = e.embed("");
  for (double v : empty.values) EXPECT_EQ(v, 0.0);
  EXPECT_NE(e.embed("aspirin").values, e.embed("insulin").values);
}

TEST(TemplateIndex, DedupAndValidation) {
  TemplateIndex idx;
  HashingEmbedder e(8);
  EXPECT_TRUE(idx.add({"a b", e.embed("a b"), "1"}));
  EXPECT_FALSE(idx.add({"a b", e.embed("a b"), "2"}));
  EXPECT_EQ(idx.size(), 1u);
  EXPECT_THROW(idx.add({"c", HashingEmbedder(4).embed("c"), "3"}), ValidationError);
  EmbeddingVector bad{std::vector<double>(8, 0.0)};
  bad.values[3] = std::nan("");
  EXPECT_THROW(idx.add({"d", bad, "4"}), ValidationError);
}

TEST(TemplateIndex, SaveLoadRoundTrip) {
  TemplateIndex idx;
  HashingEmbedder e(16);
  for (std::string t : {"what is <patient number>'s age", "count the visits", "list drugs"}) idx.add({t, e.embed(t), t});
  auto path = testkit::scratch_dir("idx") / "index.jsonl";
  idx.save(path);
  auto back = TemplateIndex::load(path);
  ASSERT_EQ(back.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    EXPECT_EQ(back.entries()[i].text, idx.entries()[i].text);
    EXPECT_EQ(back.entries()[i].vector.values, idx.entries()[i].vector.values);
  }
}

TEST(Nearest, ExactMatchFirstAtDistanceZero) {
  TemplateIndex idx;
  HashingEmbedder e(64);
  for (std::string t : {"count visits", "list the drugs", "when was the last visit"}) idx.add({t, e.embed(t), t});
  auto n = nearest_templates(e.embed("list the drugs"), idx, 1);
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].text, "list the drugs");
  EXPECT_EQ(n[0].distance, 0.0);
}

TEST(Nearest, FullIndexIsSortedByDistance) {
  std::mt19937_64 rng(1);
  TemplateIndex idx;
  for (int i = 0; i < 20; ++i) idx.add({"t" + std::to_string(i), random_vector(rng, 16), ""});
  auto all = nearest_templates(random_vector(rng, 16), idx, idx.size());
  ASSERT_EQ(all.size(), idx.size());
  for (std::size_t i = 1; i < all.size(); ++i) EXPECT_LE(all[i - 1].distance, all[i].distance);
}

TEST(Nearest, MatchesExhaustiveScan) {
  std::mt19937_64 rng(50);
  for (int round = 0; round < 20; ++round) {
    TemplateIndex idx;
    for (int i = 0; i < 50; ++i) idx.add({"t" + std::to_string(i), random_vector(rng, 32), ""});
    auto q = random_vector(rng, 32);
    auto got = nearest_templates(q, idx, 3);
    auto expect = testkit::brute_force_knn(q.values, idx.entries(), 3);
    ASSERT_EQ(got.size(), expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].entry_index, expect[i]);
  }
}

TEST(Nearest, Errors) {
  TemplateIndex idx;
  EXPECT_THROW(nearest_templates(EmbeddingVector{{1.0}}, idx, 1), ValidationError);
  idx.add({"a", EmbeddingVector{{1.0, 0.0}}, ""});
  EXPECT_THROW(nearest_templates(EmbeddingVector{{1.0}}, idx, 1), ValidationError);
  EXPECT_THROW(nearest_templates(EmbeddingVector{{1.0, 0.0}}, idx, 0), ValidationError);
}

TEST(FinalizeRewrite, FallsBackToRawText) {
  Lexicons lex = Lexicons::defaults();
  auto r = masked_record("q", "When does patient 8016's influenza quarantine end?", lex);
  EXPECT_EQ(finalize_rewrite(r, ""), r.raw_text);
  EXPECT_EQ(finalize_rewrite(r, "When does the quarantine end?"), r.raw_text);
  EXPECT_EQ(finalize_rewrite(r, "  \"When is the end date of patient <patient number>'s influenza quarantine?\" "),
            "When is the end date of patient 8016's influenza quarantine?");
}

TEST(TemplatizeRequest, ListsNeighborsAndUsesMaskedText) {
  auto prompts = load_prompt_templates(testkit::data_dir() / "prompts");
  auto r = masked_record("q", "When does patient 8016's influenza quarantine end?", Lexicons::defaults());
  auto req = build_templatize_request(r, {"first template", "second template"}, prompts, {});
  EXPECT_NE(req.user_text.find("1. first template\n2. second template\n"), std::string::npos);
  EXPECT_NE(req.user_text.find("patient <patient number>'s influenza"), std::string::npos);
  EXPECT_EQ(req.user_text.find("8016"), std::string::npos);
  EXPECT_EQ(req.temperature, 0.0);
}

// Two rewrites recorded in a replay cache; the gateway runs offline.
TEST(Templatize, RecordedRewritesReplay) {
  auto prompts = load_prompt_templates(testkit::data_dir() / "prompts");
  GatewayConfig c;
  c.mode = GatewayMode::Replay;
  c.cache_path = testkit::fixtures_dir() / "templatize_cache.jsonl";
  LlmGateway g(c);

  auto quarantine = masked_record("e1", "When does patient 8016's influenza quarantine end?", Lexicons::defaults());
  std::vector<std::string> n1 = {
      "What was the time of <patient number>'s last influenza a/b by dfa microbiology test since 03/2100?",
      "Can you tell me when <patient number> had their first rapid respiratory viral screen & culture microbiology "
      "test in 08/this year?",
      "When did <patient number> depart hospital during this year for the last time?"};
  EXPECT_EQ(templatize(quarantine, n1, g, prompts), "When is the end date of patient 8016's influenza quarantine?");

  auto duloxetine =
      masked_record("e3", "How many duloxetine prescription cases were there since 1 year ago?", Lexicons::defaults());
  std::vector<std::string> n3 = {"How much duloxetine has been prescribed to <patient number> in 05/2100 in total?",
                                 "How many drugs have been prescribed to <patient number> since 2 months ago?",
                                 "What is the number of drugs <patient number> was prescribed since 1 year ago?"};
  EXPECT_EQ(templatize(duloxetine, n3, g, prompts),
            "What is the number of duloxetine prescription cases since 1 year ago?");
  EXPECT_EQ(g.stats().cache_hits, 2u);
  EXPECT_THROW(templatize(duloxetine, {}, g, prompts), ValidationError);
}
