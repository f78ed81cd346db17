#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "reliasql/core.hpp"

namespace reliasql {

struct Dataset {
  std::string split_name;
  std::vector<QuestionRecord> questions;
  std::optional<std::map<std::string, GoldLabel>> labels;

  const QuestionRecord* find(const std::string& id) const;
};

using PredictionMap = std::map<std::string, SqlOrNull>;

/// Reads an EHRSQL-style questions file (bare array or {"data": [...]}) and
/// an optional labels file (object id -> SQL or "null").
///
/// Stage files written by write_questions() carry "raw_question",
/// "masked_question" and "bindings" next to "question"; when present, the
/// record's raw text is "raw_question" and "question" becomes the templated form.
Dataset load_dataset(const std::filesystem::path& questions_path,
                     const std::optional<std::filesystem::path>& labels_path = std::nullopt,
                     std::string split_name = {});

Dataset parse_dataset(const std::string& questions_json, const std::optional<std::string>& labels_json,
                      std::string split_name = {});

/// Reads an id -> SQL/"null" object (labels and predictions share the format).
PredictionMap load_predictions(const std::filesystem::path& path);
PredictionMap parse_predictions(const std::string& json_text);

/// Compact JSON object, keys in lexicographic order, no trailing newline.
std::string serialize_predictions(const PredictionMap& predictions);
void write_predictions(const std::filesystem::path& path, const PredictionMap& predictions);

void write_questions(const std::filesystem::path& path, const std::vector<QuestionRecord>& questions);

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> assignment;

  std::vector<std::string> fold(int index) const;
};

using Categorizer = std::function<std::string(const std::string& id)>;

/// Shuffles ids inside each stratum with a seeded generator and deals them
/// round-robin into `k` folds; the dealing position carries over between
/// strata so overall fold sizes also differ by at most one.
FoldAssignment stratified_kfold(const Dataset& dataset, int k, const Categorizer& categorizer, std::uint64_t seed);

std::string serialize_folds(const FoldAssignment& folds, std::uint64_t seed);
void write_folds(const std::filesystem::path& path, const FoldAssignment& folds, std::uint64_t seed);

/// Uniform draw in [0, bound) from raw mt19937_64 output. The standard
/// distributions are implementation-defined, which would make shuffles differ
/// across standard libraries.
std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound);

template <typename T>
void portable_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_draw(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace reliasql
