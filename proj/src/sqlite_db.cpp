#include "reliasql/sqlite_db.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include <sqlite3.h>

#include "reliasql/core.hpp"
#include "reliasql/error.hpp"
#include "reliasql/sql_lexer.hpp"

namespace reliasql {

std::string_view to_string(FailureKind kind) {
  switch (kind) {
    case FailureKind::Syntax: return "syntax";
    case FailureKind::MissingObject: return "missing_object";
    case FailureKind::Runtime: return "runtime";
    case FailureKind::Timeout: return "timeout";
  }
  return "runtime";
}

void Database::Closer::operator()(sqlite3* db) const noexcept { sqlite3_close_v2(db); }

Database Database::open(const std::filesystem::path& path, Mode mode) {
  if (mode == Mode::ReadOnly && !std::filesystem::exists(path))
    throw ConfigError("database file " + path.string() + " does not exist");
  sqlite3* raw = nullptr;
  int flags = mode == Mode::ReadOnly ? SQLITE_OPEN_READONLY : (SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE);
  flags |= SQLITE_OPEN_NOMUTEX;
  int rc = sqlite3_open_v2(path.string().c_str(), &raw, flags, nullptr);
  Database db(raw, path);
  if (rc != SQLITE_OK)
    throw IoError("cannot open database " + path.string() + ": " + (raw ? sqlite3_errmsg(raw) : "out of memory"));
  return db;
}

Database Database::open_memory() {
  sqlite3* raw = nullptr;
  int rc = sqlite3_open_v2(":memory:", &raw, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX, nullptr);
  Database db(raw, ":memory:");
  if (rc != SQLITE_OK) throw IoError("cannot open in-memory database");
  return db;
}

void Database::exec_script(std::string_view sql) {
  char* err = nullptr;
  std::string text(sql);
  if (sqlite3_exec(db_.get(), text.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::string message = err ? err : "unknown error";
    sqlite3_free(err);
    throw Error("sqlite: " + message);
  }
}

namespace {

struct Deadline {
  std::chrono::steady_clock::time_point at;
};

int progress_check(void* arg) {
  auto* d = static_cast<Deadline*>(arg);
  return std::chrono::steady_clock::now() >= d->at ? 1 : 0;
}

FailureKind classify_prepare_error(const std::string& msg) {
  if (msg.find("syntax error") != std::string::npos || msg.find("incomplete input") != std::string::npos ||
      msg.find("unrecognized token") != std::string::npos)
    return FailureKind::Syntax;
  if (msg.find("no such") != std::string::npos) return FailureKind::MissingObject;
  return FailureKind::Runtime;
}

struct StmtFinalizer {
  void operator()(sqlite3_stmt* s) const noexcept { sqlite3_finalize(s); }
};

bool only_trivia(const char* tail) {
  if (!tail) return true;
  try {
    for (const auto& t : sql::tokenize(tail))
      if (t.kind != sql::TokenKind::Semicolon) return false;
  } catch (const ParseError&) {
    return false;
  }
  return true;
}

}  // namespace

ExecutionOutcome Database::query(std::string_view sql_text, int timeout_ms) const {
  sqlite3* db = db_.get();
  std::string text(sql_text);
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db, text.c_str(), static_cast<int>(text.size() + 1), &raw, &tail);
  std::unique_ptr<sqlite3_stmt, StmtFinalizer> stmt(raw);
  if (rc != SQLITE_OK) {
    std::string msg = sqlite3_errmsg(db);
    return ExecutionOutcome::failure(classify_prepare_error(msg), msg);
  }
  if (!stmt) return ExecutionOutcome::failure(FailureKind::Syntax, "empty statement");
  if (!only_trivia(tail)) return ExecutionOutcome::failure(FailureKind::Runtime, "multiple statements are not allowed");

  std::vector<sql::Token> tokens;
  try {
    tokens = sql::tokenize(text);
  } catch (const ParseError& e) {
    return ExecutionOutcome::failure(FailureKind::Syntax, e.what());
  }
  const bool select_like = !tokens.empty() && (tokens[0].is_keyword("select") || tokens[0].is_keyword("with"));
  if (!select_like || !sqlite3_stmt_readonly(stmt.get()))
    return ExecutionOutcome::failure(FailureKind::Runtime, "only SELECT statements are executed");

  Deadline deadline{std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms)};
  sqlite3_progress_handler(db, 1000, &progress_check, &deadline);
  std::vector<Row> rows;
  const int ncol = sqlite3_column_count(stmt.get());
  while ((rc = sqlite3_step(stmt.get())) == SQLITE_ROW) {
    Row row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int c = 0; c < ncol; ++c) {
      switch (sqlite3_column_type(stmt.get(), c)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt.get(), c))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt.get(), c)); break;
        case SQLITE_TEXT: {
          const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), c));
          row.emplace_back(std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt.get(), c))));
          break;
        }
        case SQLITE_BLOB: {
          const auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt.get(), c));
          Blob b;
          b.bytes.assign(p, p + sqlite3_column_bytes(stmt.get(), c));
          row.emplace_back(std::move(b));
          break;
        }
        default: row.emplace_back(std::monostate{}); break;
      }
    }
    rows.push_back(std::move(row));
  }
  sqlite3_progress_handler(db, 0, nullptr, nullptr);
  if (rc == SQLITE_INTERRUPT) return ExecutionOutcome::failure(FailureKind::Timeout, "query exceeded " + std::to_string(timeout_ms) + " ms");
  if (rc != SQLITE_DONE) return ExecutionOutcome::failure(FailureKind::Runtime, sqlite3_errmsg(db));
  return ExecutionOutcome::rows(std::move(rows));
}

namespace {

int type_rank(const Value& v) {
  switch (v.index()) {
    case 0: return 0;
    case 1:
    case 2: return 1;
    case 3: return 2;
    default: return 3;
  }
}

double as_double(const Value& v) {
  return v.index() == 1 ? static_cast<double>(std::get<std::int64_t>(v)) : std::get<double>(v);
}

}  // namespace

bool value_less(const Value& a, const Value& b) {
  int ra = type_rank(a), rb = type_rank(b);
  if (ra != rb) return ra < rb;
  switch (ra) {
    case 0: return false;
    case 1:
      if (a.index() == 1 && b.index() == 1) return std::get<std::int64_t>(a) < std::get<std::int64_t>(b);
      return as_double(a) < as_double(b);
    case 2: return std::get<std::string>(a) < std::get<std::string>(b);
    default: return std::get<Blob>(a) < std::get<Blob>(b);
  }
}

std::vector<Row> canonical_rows(std::vector<Row> rows) {
  std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), value_less);
  });
  return rows;
}

std::string render_value(const Value& v) {
  switch (v.index()) {
    case 0: return "NULL";
    case 1: return std::to_string(std::get<std::int64_t>(v));
    case 2: {
      std::ostringstream out;
      out.precision(17);
      out << std::get<double>(v);
      return out.str();
    }
    case 3: return std::get<std::string>(v);
    default: return "<blob " + std::to_string(std::get<Blob>(v).bytes.size()) + " bytes>";
  }
}

}  // namespace reliasql

namespace reliasql {

std::string sqlite_library_version() { return sqlite3_libversion(); }

}  // namespace reliasql
