#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "reliasql/core.hpp"
#include "reliasql/llm_gateway.hpp"
#include "reliasql/prompts.hpp"

namespace reliasql {

/// Value lexicon for one placeholder: either a regular expression (the first
/// capture group, or the whole match, is masked) or a list of literal terms
/// matched case-insensitively on word boundaries.
struct LexiconEntry {
  std::string placeholder;
  std::optional<std::string> pattern;
  std::vector<std::string> terms;
};

struct Lexicons {
  std::vector<LexiconEntry> entries;

  /// Only the patient-number pattern "patient <digits>".
  static Lexicons defaults();
};

/// JSON object placeholder -> pattern string or array of terms.
Lexicons load_lexicons(const std::filesystem::path& path);
Lexicons parse_lexicons(const std::string& json_text);

struct MaskResult {
  std::string masked_text;
  std::vector<Binding> bindings;
};

/// Replaces identifying values with placeholders. Idempotent: spans inside
/// existing "<...>" placeholders are never matched.
MaskResult mask_values(std::string_view raw_text, const Lexicons& lexicons);

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const noexcept { return values.size(); }
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual EmbeddingVector embed(std::string_view text) = 0;
};

/// Lowercased whitespace tokens hashed (FNV-1a) into `dim` buckets, counted,
/// then L2-normalized. The empty text maps to the zero vector.
class HashingEmbedder : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dim = 512) : dim_(dim) {}
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::size_t dim_;
};

/// OpenAI-style embeddings endpoint: POST {model, input} -> data[0].embedding.
class RemoteEmbedder : public Embedder {
 public:
  RemoteEmbedder(std::shared_ptr<Transport> transport, std::string endpoint, std::string model,
                 std::string credential_env = "LLM_API_KEY");
  EmbeddingVector embed(std::string_view text) override;

 private:
  std::shared_ptr<Transport> transport_;
  std::string endpoint_;
  std::string model_;
  std::string credential_;
};

struct TemplateEntry {
  std::string text;
  EmbeddingVector vector;
  std::string source_id;
};

class TemplateIndex {
 public:
  /// Adds unless an entry with the same text exists; throws ValidationError on
  /// a dimension mismatch or a non-finite value.
  bool add(TemplateEntry entry);
  const std::vector<TemplateEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t dim() const noexcept { return entries_.empty() ? 0 : entries_.front().vector.dim(); }

  /// JSON-lines of {"template", "vector", "source_id"}.
  void save(const std::filesystem::path& path) const;
  static TemplateIndex load(const std::filesystem::path& path);

 private:
  std::vector<TemplateEntry> entries_;
};

struct Neighbor {
  std::string text;
  double distance = 0.0;
  std::size_t entry_index = 0;
};

/// The k entries closest in Euclidean distance, ascending; ties by text.
std::vector<Neighbor> nearest_templates(const EmbeddingVector& query, const TemplateIndex& index, std::size_t k);

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b);

struct TemplatizeOptions {
  std::string model_tag = "gpt-4-turbo";
  double temperature = 0.0;
  int max_output_tokens = 256;
};

/// Builds the rewrite request for `record` (its masked text when present).
ChatRequest build_templatize_request(const QuestionRecord& record, const std::vector<std::string>& neighbors,
                                     const PromptTemplates& prompts, const TemplatizeOptions& options);

/// Restores bound values into `rewrite`; falls back to the raw text when the
/// rewrite is empty or lost a bound value.
std::string finalize_rewrite(const QuestionRecord& record, std::string_view rewrite);

/// Asks the model to rephrase `record` in the style of `neighbors`.
std::string templatize(const QuestionRecord& record, const std::vector<std::string>& neighbors, LlmGateway& gateway,
                       const PromptTemplates& prompts, const TemplatizeOptions& options = {});

}  // namespace reliasql
