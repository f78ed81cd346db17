#include "reliasql/templatizer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "reliasql/dataset_io.hpp"
#include "reliasql/error.hpp"

namespace reliasql {

using nlohmann::json;

Lexicons Lexicons::defaults() {
  Lexicons lex;
  lex.entries.push_back({"<patient number>", std::string(R"(\bpatient (\d+))"), {}});
  return lex;
}

Lexicons parse_lexicons(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed lexicon file: ") + e.what(), e.byte);
  }
  if (!doc.is_object()) throw ValidationError("lexicon file must hold a JSON object");
  Lexicons lex;
  for (const auto& [placeholder, value] : doc.items()) {
    LexiconEntry entry{placeholder, std::nullopt, {}};
    if (value.is_string()) {
      entry.pattern = value.get<std::string>();
      try {
        std::regex probe(*entry.pattern);
      } catch (const std::regex_error& e) {
        throw ValidationError("lexicon " + placeholder + ": bad pattern: " + e.what());
      }
    } else if (value.is_array()) {
      entry.terms = value.get<std::vector<std::string>>();
    } else {
      throw ValidationError("lexicon " + placeholder + " must be a pattern string or a term array");
    }
    lex.entries.push_back(std::move(entry));
  }
  return lex;
}

Lexicons load_lexicons(const std::filesystem::path& path) { return parse_lexicons(read_text_file(path)); }

namespace {

struct Span {
  std::size_t begin;
  std::size_t end;
  std::size_t entry;
};

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<std::pair<std::size_t, std::size_t>> placeholder_spans(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '<') continue;
    std::size_t j = i + 1;
    while (j < text.size() && (std::islower(static_cast<unsigned char>(text[j])) || text[j] == ' ' || text[j] == '_')) ++j;
    if (j < text.size() && text[j] == '>' && j > i + 1) {
      spans.emplace_back(i, j + 1);
      i = j;
    }
  }
  return spans;
}

}  // namespace

MaskResult mask_values(std::string_view raw_text, const Lexicons& lexicons) {
  const std::string text(raw_text);
  const std::string lower = to_lower(text);
  std::vector<Span> found;
  for (std::size_t e = 0; e < lexicons.entries.size(); ++e) {
    const auto& entry = lexicons.entries[e];
    if (entry.pattern) {
      std::regex re(*entry.pattern, std::regex::icase);
      for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
        const auto& m = *it;
        std::size_t group = m.size() > 1 && m[1].matched ? 1 : 0;
        auto b = static_cast<std::size_t>(m.position(group));
        if (m.length(group) > 0) found.push_back({b, b + static_cast<std::size_t>(m.length(group)), e});
      }
    }
    for (const auto& term : entry.terms) {
      if (term.empty()) continue;
      const std::string needle = to_lower(term);
      for (std::size_t at = lower.find(needle); at != std::string::npos; at = lower.find(needle, at + 1)) {
        std::size_t end = at + needle.size();
        bool left_ok = at == 0 || !word_char(needle.front()) || !word_char(lower[at - 1]);
        bool right_ok = end == lower.size() || !word_char(needle.back()) || !word_char(lower[end]);
        if (left_ok && right_ok) found.push_back({at, end, e});
      }
    }
  }
  std::sort(found.begin(), found.end(), [](const Span& a, const Span& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;
    return a.entry < b.entry;
  });

  const auto protected_spans = placeholder_spans(text);
  auto overlaps_protected = [&](const Span& s) {
    return std::any_of(protected_spans.begin(), protected_spans.end(),
                       [&](const auto& p) { return s.begin < p.second && p.first < s.end; });
  };

  MaskResult out;
  std::size_t pos = 0;
  for (const auto& s : found) {
    if (s.begin < pos || overlaps_protected(s)) continue;
    const auto& placeholder = lexicons.entries[s.entry].placeholder;
    out.masked_text.append(text, pos, s.begin - pos);
    out.masked_text.append(placeholder);
    out.bindings.push_back({placeholder, text.substr(s.begin, s.end - s.begin)});
    pos = s.end;
  }
  out.masked_text.append(text, pos, std::string::npos);
  return out;
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) {
  EmbeddingVector v;
  v.values.assign(dim_, 0.0);
  std::istringstream words{to_lower(text)};
  std::string token;
  while (words >> token) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : token) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    v.values[h % dim_] += 1.0;
  }
  double norm = 0.0;
  for (double x : v.values) norm += x * x;
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (double& x : v.values) x /= norm;
  }
  return v;
}

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<Transport> transport, std::string endpoint, std::string model,
                               std::string credential_env)
    : transport_(std::move(transport)), endpoint_(std::move(endpoint)), model_(std::move(model)) {
  const char* key = std::getenv(credential_env.c_str());
  if (!key || !*key) throw ConfigError("remote embedder needs a credential in $" + credential_env);
  credential_ = key;
  if (!transport_) transport_ = std::make_shared<HttpTransport>();
}

EmbeddingVector RemoteEmbedder::embed(std::string_view text) {
  json body = {{"model", model_}, {"input", std::string(text)}};
  HttpResponse res = transport_->post(endpoint_, {{"Authorization", "Bearer " + credential_}}, body.dump());
  if (res.status != 200) throw TransportError("embedding endpoint returned HTTP " + std::to_string(res.status));
  EmbeddingVector v;
  try {
    v.values = json::parse(res.body).at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("unexpected embedding response: ") + e.what());
  }
  return v;
}

bool TemplateIndex::add(TemplateEntry entry) {
  if (!entries_.empty() && entry.vector.dim() != dim())
    throw ValidationError("template vector has dimension " + std::to_string(entry.vector.dim()) + ", index uses " +
                          std::to_string(dim()));
  for (double x : entry.vector.values)
    if (!std::isfinite(x)) throw ValidationError("template vector has a non-finite entry");
  for (const auto& e : entries_)
    if (e.text == entry.text) return false;
  entries_.push_back(std::move(entry));
  return true;
}

void TemplateIndex::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (const auto& e : entries_)
    out << json{{"template", e.text}, {"vector", e.vector.values}, {"source_id", e.source_id}}.dump() << '\n';
  write_text_file(path, out.str());
}

TemplateIndex TemplateIndex::load(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  TemplateIndex index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      json rec = json::parse(line);
      index.add({rec.at("template").get<std::string>(), {rec.at("vector").get<std::vector<double>>()},
                 rec.value("source_id", "")});
    } catch (const json::exception& e) {
      throw ParseError("template index line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return index;
}

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw ValidationError("embedding dimensions differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    double d = a.values[i] - b.values[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::vector<Neighbor> nearest_templates(const EmbeddingVector& query, const TemplateIndex& index, std::size_t k) {
  if (k < 1) throw ValidationError("k must be at least 1");
  if (index.empty()) throw ValidationError("template index is empty");
  if (query.dim() != index.dim())
    throw ValidationError("query dimension " + std::to_string(query.dim()) + " does not match index dimension " +
                          std::to_string(index.dim()));
  std::vector<Neighbor> all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i)
    all.push_back({index.entries()[i].text, euclidean_distance(query, index.entries()[i].vector), i});
  k = std::min(k, all.size());
  auto closer = [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.text < b.text;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), closer);
  all.resize(k);
  return all;
}

ChatRequest build_templatize_request(const QuestionRecord& record, const std::vector<std::string>& neighbors,
                                     const PromptTemplates& prompts, const TemplatizeOptions& options) {
  std::string listing;
  for (std::size_t i = 0; i < neighbors.size(); ++i)
    listing += std::to_string(i + 1) + ". " + neighbors[i] + "\n";
  ChatRequest req;
  req.system_text = prompts.templatize_system;
  req.user_text = fill_template(prompts.templatize_user,
                                {{"templates", listing}, {"question", record.masked_text.value_or(record.raw_text)}});
  req.temperature = options.temperature;
  req.max_output_tokens = options.max_output_tokens;
  req.model_tag = options.model_tag;
  return req;
}

std::string finalize_rewrite(const QuestionRecord& record, std::string_view rewrite) {
  std::string text = trim(rewrite);
  if (text.size() >= 2 && text.front() == '"' && text.back() == '"') text = trim(text.substr(1, text.size() - 2));
  if (text.empty()) return record.raw_text;
  std::string restored = restore_bindings(text, record.bindings);
  for (const auto& b : record.bindings)
    if (restored.find(b.original) == std::string::npos) return record.raw_text;
  return restored;
}

std::string templatize(const QuestionRecord& record, const std::vector<std::string>& neighbors, LlmGateway& gateway,
                       const PromptTemplates& prompts, const TemplatizeOptions& options) {
  if (neighbors.empty()) throw ValidationError("templatize needs at least one neighbor template");
  ChatResponse res = gateway.complete(build_templatize_request(record, neighbors, prompts, options));
  return finalize_rewrite(record, res.text);
}

}  // namespace reliasql
