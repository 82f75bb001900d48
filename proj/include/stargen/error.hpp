#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stargen {

enum class ErrorCode {
  // taxonomy
  EmptyDelta,
  NoOpInstruction,
  InvalidDelta,
  UnknownAxis,
  CategoryMismatch,
  RegistryCorrupt,
  InvalidBaseTask,
  CompositionError,
  // manifest
  SyntaxError,
  SchemaError,
  ReferenceError,
  DuplicateId,
  // campaign
  DuplicateCampaignId,
  ManifestHashMismatch,
  InvalidConfig,
  QuotaExceeded,
  UnknownModel,
  UnknownCondition,
  CellExcluded,
  ProtocolViolation,
  CorruptLine,
  MissingCreationEvent,
  LockFailed,
  UnknownCampaign,
  // aggregate
  UnsupportedFormat,
  // proposer
  UnsupportedAxis,
  Timeout,
  AuthFailure,
  TransportError,
  AllRejected,
  // general
  IoError,
};

/// Stable machine-readable name, e.g. "CategoryMismatch".
std::string_view to_string(ErrorCode code);

/// A single validation finding. `subject` is the offending id (condition,
/// base task, campaign, ...) and `where` a location: a JSON pointer for
/// manifest fields, "line N" for logs, "offset N (line L, column C)" for
/// syntax errors.
struct Diagnostic {
  ErrorCode code;
  std::string subject;
  std::string where;
  std::string message;

  std::string to_string() const;
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, std::string message, std::string subject = {},
        std::string where = {});
  explicit Error(Diagnostic diagnostic);

  ErrorCode code() const noexcept { return diag_.code; }
  const std::string& subject() const noexcept { return diag_.subject; }
  const std::string& where() const noexcept { return diag_.where; }
  const Diagnostic& diagnostic() const noexcept { return diag_; }

private:
  Diagnostic diag_;
};

/// Raised when a document fails validation; carries every finding, not
/// only the first. code() is the code of the first diagnostic.
class ValidationError : public Error {
public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);

  const std::vector<Diagnostic>& diagnostics() const noexcept { return all_; }

private:
  std::vector<Diagnostic> all_;
};

/// Raised by replay with the 1-based line number of the bad line.
class CorruptLineError : public Error {
public:
  CorruptLineError(std::size_t line, std::string reason);

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace stargen
