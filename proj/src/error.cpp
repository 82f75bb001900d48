#include "stargen/error.hpp"

#include <utility>

namespace stargen {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyDelta: return "EmptyDelta";
    case ErrorCode::NoOpInstruction: return "NoOpInstruction";
    case ErrorCode::InvalidDelta: return "InvalidDelta";
    case ErrorCode::UnknownAxis: return "UnknownAxis";
    case ErrorCode::CategoryMismatch: return "CategoryMismatch";
    case ErrorCode::RegistryCorrupt: return "RegistryCorrupt";
    case ErrorCode::InvalidBaseTask: return "InvalidBaseTask";
    case ErrorCode::CompositionError: return "CompositionError";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ReferenceError: return "ReferenceError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::DuplicateCampaignId: return "DuplicateCampaignId";
    case ErrorCode::ManifestHashMismatch: return "ManifestHashMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::QuotaExceeded: return "QuotaExceeded";
    case ErrorCode::UnknownModel: return "UnknownModel";
    case ErrorCode::UnknownCondition: return "UnknownCondition";
    case ErrorCode::CellExcluded: return "CellExcluded";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::CorruptLine: return "CorruptLine";
    case ErrorCode::MissingCreationEvent: return "MissingCreationEvent";
    case ErrorCode::LockFailed: return "LockFailed";
    case ErrorCode::UnknownCampaign: return "UnknownCampaign";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::UnsupportedAxis: return "UnsupportedAxis";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::AuthFailure: return "AuthFailure";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::AllRejected: return "AllRejected";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string Diagnostic::to_string() const {
  std::string out(stargen::to_string(code));
  if (!subject.empty()) out += " [" + subject + "]";
  if (!where.empty()) out += " at " + where;
  out += ": " + message;
  return out;
}

Error::Error(ErrorCode code, std::string message, std::string subject, std::string where)
    : Error(Diagnostic{code, std::move(subject), std::move(where), std::move(message)}) {}

Error::Error(Diagnostic diagnostic)
    : std::runtime_error(diagnostic.to_string()), diag_(std::move(diagnostic)) {}

namespace {
Diagnostic first_or_placeholder(const std::vector<Diagnostic>& all) {
  if (all.empty()) return {ErrorCode::SchemaError, {}, {}, "validation failed"};
  return all.front();
}
}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(first_or_placeholder(diagnostics)), all_(std::move(diagnostics)) {}

CorruptLineError::CorruptLineError(std::size_t line, std::string reason)
    : Error(ErrorCode::CorruptLine, std::move(reason), {}, "line " + std::to_string(line)),
      line_(line) {}

}  // namespace stargen
