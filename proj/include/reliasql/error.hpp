#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace reliasql {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON documents, SQL). `offset` is the byte offset
/// of the failure when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit ParseError(const std::string& what) : Error(what) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_ = 0;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class CacheMissError : public Error {
 public:
  explicit CacheMissError(std::string key)
      : Error("replay cache miss for request " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace reliasql
