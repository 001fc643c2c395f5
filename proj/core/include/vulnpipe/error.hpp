#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnpipe {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Usage,      // bad arguments or configuration
  Data,       // malformed or inconsistent input data
  Io,         // filesystem failures
  Transport,  // scorer backend unreachable
  Scoring,    // scorer backend reported a failure
  Protocol,   // scorer backend replied with a malformed document
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

struct UsageError : Error {
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct DataError : Error {
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct IoError : Error {
  explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

struct TransportError : Error {
  explicit TransportError(const std::string& what) : Error(ErrorKind::Transport, what) {}
};

struct ScoringError : Error {
  explicit ScoringError(const std::string& what) : Error(ErrorKind::Scoring, what) {}
};

struct ProtocolError : Error {
  explicit ProtocolError(const std::string& what) : Error(ErrorKind::Protocol, what) {}
};

/// Non-fatal problem attached to a file (skipped input, dropped finding, ...).
struct Diagnostic {
  std::string path;
  std::string message;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

}  // namespace vulnpipe
