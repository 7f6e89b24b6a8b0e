#pragma once

#include <stdexcept>
#include <string>

namespace gistgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input record (corpus line, dataset line, config field).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A contract on an argument was violated by the caller.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// LLM or embedding provider failed, or returned unusable output after retries.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& what, std::string raw_response = {})
      : Error(what), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

/// Persisted artifact is truncated, corrupt, or written by an incompatible version.
class CorruptFileError : public Error {
 public:
  using Error::Error;
};

/// The knowledge graph violates one of its structural invariants.
class GraphError : public Error {
 public:
  using Error::Error;
};

/// Attempted network access while the network guard is engaged.
class NetworkForbidden : public Error {
 public:
  using Error::Error;
};

}  // namespace gistgraph
