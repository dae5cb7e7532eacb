#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace trajsem {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// File missing, unreadable or unwritable.
struct IoError : Error {
  using Error::Error;
};

/// Malformed input data (CSV row, JSON document, timestamp, template).
struct ParseError : Error {
  using Error::Error;
};

/// Invalid configuration: bad key, missing env var, inconsistent values.
struct ConfigError : Error {
  using Error::Error;
};

/// Region referenced by id that the registry does not contain.
struct UnknownRegion : Error {
  using Error::Error;
};

/// Region with zero POIs; has no TF-IDF profile.
struct EmptyRegion : Error {
  using Error::Error;
};

/// Softmax requested over a group with no categories.
struct EmptyGroup : Error {
  using Error::Error;
};

/// No stay overlaps the requested calendar day.
struct EmptyDay : Error {
  using Error::Error;
};

/// HTTP backend still failing after the retry budget is spent.
struct BackendUnavailable : Error {
  using Error::Error;
};

/// Replay backend has no fixture for the request key.
struct FixtureMissing : Error {
  using Error::Error;
};

/// LLM output with zero recognizable scenarios. Keeps the raw text.
struct ParseFailure : Error {
  std::string raw_text;
  ParseFailure(const std::string& message, std::string raw)
      : Error(message), raw_text(std::move(raw)) {}
};

}  // namespace trajsem
