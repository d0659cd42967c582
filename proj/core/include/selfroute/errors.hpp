#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selfroute {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- corpus ----------------------------------------------------------------

class MalformedJsonError : public Error {
 public:
  MalformedJsonError(std::size_t line, const std::string& detail)
      : Error("malformed JSON on line " + std::to_string(line) + ": " + detail),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingFieldError : public Error {
 public:
  MissingFieldError(std::size_t line, const std::string& field)
      : Error("line " + std::to_string(line) + ": missing field \"" + field + "\""),
        line_(line),
        field_(field) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class InvalidFieldError : public Error {
 public:
  InvalidFieldError(std::size_t line, const std::string& field, const std::string& detail)
      : Error("line " + std::to_string(line) + ": invalid field \"" + field + "\": " + detail),
        line_(line),
        field_(field) {}
  std::size_t line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& path)
      : Error("dataset file has no records: " + path) {}
};

class MixedTaskKindsError : public Error {
 public:
  explicit MixedTaskKindsError(const std::string& name)
      : Error("dataset \"" + name + "\" mixes task kinds; one metric per dataset") {}
};

// --- retrieval --------------------------------------------------------------

class EmptyContextError : public Error {
 public:
  EmptyContextError() : Error("context is empty after trimming") {}
};

class DimensionMismatchError : public Error {
 public:
  DimensionMismatchError(std::size_t lhs, std::size_t rhs)
      : Error("embedding dimension mismatch: " + std::to_string(lhs) + " vs " +
              std::to_string(rhs)) {}
};

class ZeroVectorError : public Error {
 public:
  ZeroVectorError() : Error("cosine undefined for an all-zero vector") {}
};

class EmptyChunksError : public Error {
 public:
  EmptyChunksError() : Error("chunk list is empty") {}
};

class EmptySelectionError : public Error {
 public:
  EmptySelectionError() : Error("no chunks selected to render") {}
};

// --- llm ---------------------------------------------------------------------

class RateLimitedError : public Error {
 public:
  explicit RateLimitedError(int attempts)
      : Error("rate limited; retries exhausted after " + std::to_string(attempts) +
              " attempts") {}
};

class BackendError : public Error {
 public:
  BackendError(int status, const std::string& body)
      : Error("backend error, HTTP " + std::to_string(status) + ": " + body),
        status_(status),
        body_(body) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class TimeoutError : public Error {
 public:
  TimeoutError() : Error("request timed out") {}
  explicit TimeoutError(const std::string& detail) : Error(detail) {}
};

/// The backend signalled that the prompt exceeds its context window.
/// Surfaced to the caller, never silently truncated.
class ContextOverflowError : public Error {
 public:
  explicit ContextOverflowError(const std::string& detail)
      : Error("prompt exceeds the model context window: " + detail) {}
};

class AmbiguousMatchError : public Error {
 public:
  explicit AmbiguousMatchError(std::size_t n)
      : Error(std::to_string(n) + " substring matchers match the same prompt") {}
};

// --- prompts -----------------------------------------------------------------

class MissingChoicesError : public Error {
 public:
  explicit MissingChoicesError(const std::string& template_id)
      : Error("template \"" + template_id + "\" requires choices but none were given") {}
};

class UnknownPlaceholderError : public Error {
 public:
  explicit UnknownPlaceholderError(const std::string& placeholder)
      : Error("unknown placeholder {" + placeholder + "}"), placeholder_(placeholder) {}
  UnknownPlaceholderError(const std::string& template_id, const std::string& placeholder)
      : Error("template \"" + template_id + "\" contains unknown placeholder {" +
              placeholder + "}"),
        placeholder_(placeholder) {}
  const std::string& placeholder() const { return placeholder_; }

 private:
  std::string placeholder_;
};

class InvalidTemplateError : public Error {
 public:
  explicit InvalidTemplateError(const std::string& detail) : Error(detail) {}
  InvalidTemplateError(const std::string& template_id, const std::string& detail)
      : Error("template \"" + template_id + "\": " + detail) {}
};

class InvalidQuestionError : public Error {
 public:
  InvalidQuestionError() : Error("question is empty") {}
  explicit InvalidQuestionError(const std::string& detail) : Error(detail) {}
};

// --- metrics -----------------------------------------------------------------

class MismatchedQuerySetsError : public Error {
 public:
  MismatchedQuerySetsError() : Error("record sets cover different query ids") {}
};

class MixedCountingMethodsError : public Error {
 public:
  MixedCountingMethodsError()
      : Error("token counts mix provider_reported and word_approx methods") {}
};

// --- synthetic ---------------------------------------------------------------

class InvalidSpecError : public Error {
 public:
  explicit InvalidSpecError(const std::string& detail)
      : Error("invalid passkey spec: " + detail) {}
};

// --- io / config -------------------------------------------------------------

class IoError : public Error {
 public:
  explicit IoError(const std::string& detail) : Error(detail) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& detail) : Error(detail) {}
};

}  // namespace selfroute
