#pragma once

#include <stdexcept>
#include <string>

namespace selfalign {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Invalid or inconsistent run configuration (bad flag value, missing file).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A data file failed to load; the message names the path and line.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Malformed UTF-8 input.
class Utf8Error : public Error {
 public:
  using Error::Error;
};

/// Likert aggregation produced no majority.
class TieError : public Error {
 public:
  using Error::Error;
};

/// A probe language has no entry in the language-to-country map.
class UnmappedLanguageError : public Error {
 public:
  using Error::Error;
};

/// Text is empty after normalization; similarity is undefined.
class EmptyTextError : public Error {
 public:
  using Error::Error;
};

/// The demonstration pool has fewer members than requested.
class InsufficientPoolError : public Error {
 public:
  using Error::Error;
};

/// The instruction catalog has no entry for the requested language.
class MissingInstructionError : public Error {
 public:
  using Error::Error;
};

/// The backend could not be reached after the configured retries.
class BackendUnavailableError : public Error {
 public:
  using Error::Error;
};

/// The backend answered with a payload the adapter cannot interpret.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

/// The response cache store contains an unreadable record.
class CacheCorruptError : public Error {
 public:
  using Error::Error;
};

/// An operation was called outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

}  // namespace selfalign
