#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

struct sqlite3;

namespace reliasql {

struct Blob {
  std::vector<std::uint8_t> bytes;
  friend bool operator==(const Blob&, const Blob&) = default;
  friend auto operator<=>(const Blob&, const Blob&) = default;
};

/// One SQLite scalar: NULL, INTEGER, REAL, TEXT or BLOB.
using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Value>;

enum class FailureKind { Syntax, MissingObject, Runtime, Timeout };
std::string_view to_string(FailureKind kind);

struct Failure {
  FailureKind kind;
  std::string message;
};

/// Rows in engine order, or a classified failure.
class ExecutionOutcome {
 public:
  static ExecutionOutcome rows(std::vector<Row> rows) { return ExecutionOutcome(std::move(rows)); }
  static ExecutionOutcome failure(FailureKind kind, std::string message) {
    return ExecutionOutcome(Failure{kind, std::move(message)});
  }

  bool ok() const noexcept { return std::holds_alternative<std::vector<Row>>(data_); }
  const std::vector<Row>& rows() const { return std::get<std::vector<Row>>(data_); }
  const Failure& failure() const { return std::get<Failure>(data_); }

 private:
  explicit ExecutionOutcome(std::variant<std::vector<Row>, Failure> d) : data_(std::move(d)) {}
  std::variant<std::vector<Row>, Failure> data_;
};

/// Owning SQLite connection.
class Database {
 public:
  enum class Mode { ReadOnly, ReadWriteCreate };

  static Database open(const std::filesystem::path& path, Mode mode = Mode::ReadOnly);
  static Database open_memory();

  Database(Database&&) noexcept = default;
  Database& operator=(Database&&) noexcept = default;

  sqlite3* handle() const noexcept { return db_.get(); }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Runs a multi-statement script; throws Error with SQLite's message.
  void exec_script(std::string_view sql);

  /// Executes one read-only SELECT with a wall-clock limit. Never throws for
  /// bad SQL: failures come back classified.
  ExecutionOutcome query(std::string_view sql, int timeout_ms) const;

 private:
  struct Closer {
    void operator()(sqlite3* db) const noexcept;
  };
  Database(sqlite3* db, std::filesystem::path path) : db_(db), path_(std::move(path)) {}

  std::unique_ptr<sqlite3, Closer> db_;
  std::filesystem::path path_;
};

/// Sorted copy of `rows`, the canonical form for multiset comparison.
std::vector<Row> canonical_rows(std::vector<Row> rows);

/// Total order used by canonical_rows: NULL < numbers < text < blob, numbers by value.
bool value_less(const Value& a, const Value& b);

std::string render_value(const Value& v);

/// Version string of the linked SQLite library.
std::string sqlite_library_version();

}  // namespace reliasql
