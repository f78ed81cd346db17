#pragma once

// Domain vocabulary shared by every pipeline stage.

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace reliasql {

/// A SQL query or an abstention. Serialized forms use the lowercase
/// string "null" for the abstention.
class SqlOrNull {
 public:
  SqlOrNull() = default;

  /// Throws std::invalid_argument if `sql` is blank or is the literal "null".
  static SqlOrNull query(std::string sql);
  static SqlOrNull null() { return {}; }
  /// Inverse of to_text(): "null" maps to the abstention, anything else to a query.
  static SqlOrNull from_text(std::string text);

  bool is_null() const noexcept { return !sql_.has_value(); }
  bool is_query() const noexcept { return sql_.has_value(); }
  /// Precondition: is_query().
  const std::string& sql() const { return sql_.value(); }
  std::string to_text() const { return sql_ ? *sql_ : std::string(kNullText); }

  friend bool operator==(const SqlOrNull&, const SqlOrNull&) = default;

  static constexpr std::string_view kNullText = "null";

 private:
  std::optional<std::string> sql_;
};

/// One value substitution made while masking a question.
struct Binding {
  std::string placeholder;  // e.g. "<patient number>"
  std::string original;     // e.g. "10004457"
  friend bool operator==(const Binding&, const Binding&) = default;
};

struct QuestionRecord {
  std::string id;
  std::string raw_text;
  std::optional<std::string> masked_text;
  std::optional<std::string> templated_text;
  /// In order of occurrence in masked_text.
  std::vector<Binding> bindings;

  /// Text the generator should see: the templated form when present.
  const std::string& working_text() const { return templated_text ? *templated_text : raw_text; }

  friend bool operator==(const QuestionRecord&, const QuestionRecord&) = default;
};

/// Replaces placeholders in `masked` with their bound originals, i-th
/// occurrence of a placeholder taking the i-th binding for it.
std::string restore_bindings(std::string_view masked, const std::vector<Binding>& bindings);

/// Checks the QuestionRecord invariants; throws ValidationError.
void validate(const QuestionRecord& record);

enum class Stage { Stage1 = 0, Reflected = 1, Repaired = 2, Gated = 3 };

std::string_view to_string(Stage stage);
Stage stage_from_string(std::string_view text);

struct Candidate {
  SqlOrNull prediction;
  Stage stage = Stage::Stage1;
  int member_index = 0;
  std::string notes;

  /// Moves to `next`; throws std::logic_error on a backwards transition.
  void advance(Stage next);
  void add_note(std::string_view note);

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct GoldLabel {
  std::string id;
  SqlOrNull answer;
  bool answerable() const noexcept { return answer.is_query(); }
};

/// Per-question scoring outcome. `correct` is present iff the question is
/// answerable and was attempted.
class OutcomeLedger {
 public:
  /// Throws std::invalid_argument when the invariant is violated.
  OutcomeLedger(std::string id, bool answerable, bool attempted, std::optional<bool> correct);

  static OutcomeLedger answered(std::string id, bool correct) {
    return OutcomeLedger(std::move(id), true, true, correct);
  }
  static OutcomeLedger abstained(std::string id, bool answerable) {
    return OutcomeLedger(std::move(id), answerable, false, std::nullopt);
  }
  static OutcomeLedger attempted_unanswerable(std::string id) {
    return OutcomeLedger(std::move(id), false, true, std::nullopt);
  }

  const std::string& id() const noexcept { return id_; }
  bool answerable() const noexcept { return answerable_; }
  bool attempted() const noexcept { return attempted_; }
  std::optional<bool> correct() const noexcept { return correct_; }

 private:
  std::string id_;
  bool answerable_;
  bool attempted_;
  std::optional<bool> correct_;
};

/// Reliability reward for one outcome at penalty `c`: 1 for a correct answer
/// or a correct abstention, 0 for abstaining on an answerable question, -c
/// for a wrong answer or any attempt on an unanswerable question.
double phi(const OutcomeLedger& outcome, double c);

/// Trim ASCII whitespace on both ends.
std::string trim(std::string_view text);
std::string to_lower(std::string_view text);

}  // namespace reliasql
