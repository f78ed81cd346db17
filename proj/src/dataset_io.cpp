#include "reliasql/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reliasql/error.hpp"

namespace reliasql {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("malformed JSON in " + what + ": " + e.what(), e.byte);
  }
}

const json& require_string(const json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw ValidationError(context + ": missing string field \"" + key + "\"");
  return *it;
}

}  // namespace

const QuestionRecord* Dataset::find(const std::string& id) const {
  auto it = std::find_if(questions.begin(), questions.end(), [&](const auto& q) { return q.id == id; });
  return it == questions.end() ? nullptr : &*it;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out.flush()) throw IoError("write failed for " + path.string());
}

PredictionMap parse_predictions(const std::string& json_text) {
  json doc = parse_json(json_text, "prediction/label file");
  if (!doc.is_object()) throw ValidationError("prediction/label file must hold a JSON object");
  PredictionMap out;
  for (const auto& [id, value] : doc.items()) {
    if (id.empty()) throw ValidationError("empty id in prediction/label file");
    if (!value.is_string()) throw ValidationError("value for " + id + " must be a string");
    try {
      out.emplace(id, SqlOrNull::from_text(value.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw ValidationError("value for " + id + ": " + e.what());
    }
  }
  return out;
}

PredictionMap load_predictions(const std::filesystem::path& path) {
  return parse_predictions(read_text_file(path));
}

Dataset parse_dataset(const std::string& questions_json, const std::optional<std::string>& labels_json,
                      std::string split_name) {
  json doc = parse_json(questions_json, "questions file");
  const json* items = &doc;
  if (doc.is_object()) {
    auto it = doc.find("data");
    if (it == doc.end()) throw ValidationError("questions object has no \"data\" array");
    items = &*it;
  }
  if (!items->is_array()) throw ValidationError("questions file must hold an array of question objects");

  Dataset ds;
  ds.split_name = std::move(split_name);
  std::set<std::string> seen;
  for (const auto& item : *items) {
    if (!item.is_object()) throw ValidationError("question entries must be objects");
    QuestionRecord rec;
    rec.id = require_string(item, "id", "question entry").get<std::string>();
    if (rec.id.empty()) throw ValidationError("question entry has an empty id");
    std::string question = require_string(item, "question", "question " + rec.id).get<std::string>();
    if (auto raw = item.find("raw_question"); raw != item.end() && raw->is_string()) {
      rec.raw_text = raw->get<std::string>();
      rec.templated_text = question;
    } else {
      rec.raw_text = question;
    }
    if (auto m = item.find("masked_question"); m != item.end() && m->is_string()) rec.masked_text = m->get<std::string>();
    if (auto b = item.find("bindings"); b != item.end() && b->is_array()) {
      for (const auto& entry : *b)
        rec.bindings.push_back({entry.at("placeholder").get<std::string>(), entry.at("original").get<std::string>()});
    }
    if (!seen.insert(rec.id).second) throw ValidationError("duplicate question id " + rec.id);
    validate(rec);
    ds.questions.push_back(std::move(rec));
  }

  if (labels_json) {
    std::map<std::string, GoldLabel> labels;
    for (auto& [id, answer] : parse_predictions(*labels_json)) {
      if (!seen.count(id)) throw ValidationError("label id " + id + " does not exist among the questions");
      labels.emplace(id, GoldLabel{id, std::move(answer)});
    }
    ds.labels = std::move(labels);
  }
  return ds;
}

Dataset load_dataset(const std::filesystem::path& questions_path,
                     const std::optional<std::filesystem::path>& labels_path, std::string split_name) {
  std::optional<std::string> labels;
  if (labels_path) labels = read_text_file(*labels_path);
  return parse_dataset(read_text_file(questions_path), labels, std::move(split_name));
}

std::string serialize_predictions(const PredictionMap& predictions) {
  json doc = json::object();
  for (const auto& [id, pred] : predictions) {
    if (id.empty()) throw ValidationError("prediction id is empty");
    doc[id] = pred.to_text();
  }
  return doc.dump();
}

void write_predictions(const std::filesystem::path& path, const PredictionMap& predictions) {
  write_text_file(path, serialize_predictions(predictions));
}

void write_questions(const std::filesystem::path& path, const std::vector<QuestionRecord>& questions) {
  json arr = json::array();
  for (const auto& q : questions) {
    json item = {{"id", q.id}, {"question", q.working_text()}};
    if (q.templated_text) item["raw_question"] = q.raw_text;
    if (q.masked_text) item["masked_question"] = *q.masked_text;
    if (!q.bindings.empty()) {
      json b = json::array();
      for (const auto& binding : q.bindings) b.push_back({{"placeholder", binding.placeholder}, {"original", binding.original}});
      item["bindings"] = std::move(b);
    }
    arr.push_back(std::move(item));
  }
  write_text_file(path, arr.dump(2) + "\n");
}

std::vector<std::string> FoldAssignment::fold(int index) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : assignment)
    if (f == index) ids.push_back(id);
  return ids;
}

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("bounded_draw needs a positive bound");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

FoldAssignment stratified_kfold(const Dataset& dataset, int k, const Categorizer& categorizer, std::uint64_t seed) {
  if (!dataset.labels) throw ValidationError("stratified split needs gold labels");
  if (k < 2) throw ValidationError("k must be at least 2");
  if (static_cast<std::size_t>(k) > dataset.questions.size())
    throw ValidationError("k = " + std::to_string(k) + " exceeds dataset size " +
                          std::to_string(dataset.questions.size()));

  std::map<std::string, std::vector<std::string>> strata;
  for (const auto& q : dataset.questions) strata[categorizer(q.id)].push_back(q.id);

  std::mt19937_64 rng(seed);
  FoldAssignment out;
  out.k = k;
  std::size_t next = 0;
  for (auto& [label, ids] : strata) {
    std::sort(ids.begin(), ids.end());
    portable_shuffle(ids, rng);
    for (const auto& id : ids) out.assignment[id] = static_cast<int>(next++ % static_cast<std::size_t>(k));
  }
  return out;
}

std::string serialize_folds(const FoldAssignment& folds, std::uint64_t seed) {
  json doc = {{"k", folds.k}, {"seed", seed}, {"assignment", json::object()}};
  for (const auto& [id, f] : folds.assignment) doc["assignment"][id] = f;
  return doc.dump(2) + "\n";
}

void write_folds(const std::filesystem::path& path, const FoldAssignment& folds, std::uint64_t seed) {
  write_text_file(path, serialize_folds(folds, seed));
}

}  // namespace reliasql
