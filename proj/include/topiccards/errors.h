#pragma once

#include <stdexcept>
#include <string>

namespace topiccards {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or inconsistent run configuration, including corpus files that fail to load.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class CorpusError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class BudgetError : public ConfigError {
 public:
  BudgetError(const std::string& what, std::size_t minimum_budget)
      : ConfigError(what), minimum_budget_(minimum_budget) {}
  std::size_t minimum_budget() const noexcept { return minimum_budget_; }

 private:
  std::size_t minimum_budget_;
};

// Model output that could not be turned into the expected structure.
class ParseFailure : public Error {
 public:
  ParseFailure(const std::string& what, std::string excerpt)
      : Error(what), excerpt_(std::move(excerpt)) {}
  const std::string& excerpt() const noexcept { return excerpt_; }

 private:
  std::string excerpt_;
};

class LlmError : public Error {
 public:
  using Error::Error;
};

class HttpStatusError : public LlmError {
 public:
  HttpStatusError(int status, std::string body_excerpt)
      : LlmError("HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

// Retryable failure: 429, 5xx, timeouts and dropped connections.
class TransientError : public LlmError {
 public:
  TransientError(const std::string& what, int status = 0) : LlmError(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class RetriesExhausted : public LlmError {
 public:
  RetriesExhausted(int attempts, const std::string& last_cause)
      : LlmError("gave up after " + std::to_string(attempts) + " attempt(s): " + last_cause),
        attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

class UnscriptedRequest : public LlmError {
 public:
  explicit UnscriptedRequest(std::string fingerprint)
      : LlmError("mock backend has no response for fingerprint " + fingerprint),
        fingerprint_(std::move(fingerprint)) {}
  const std::string& fingerprint() const noexcept { return fingerprint_; }

 private:
  std::string fingerprint_;
};

// Fewer usable topic cards than the generation prompt demands.
class ValidationFatal : public Error {
 public:
  using Error::Error;
};

}  // namespace topiccards
