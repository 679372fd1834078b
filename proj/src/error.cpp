#include "toporag/error.hpp"

namespace toporag {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::MalformedJson: return "MalformedJson";
    case Errc::UnknownLinkEndpoint: return "UnknownLinkEndpoint";
    case Errc::DuplicateInterface: return "DuplicateInterface";
    case Errc::InfeasibleSizes: return "InfeasibleSizes";
    case Errc::EmptyGraph: return "EmptyGraph";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::NonPositiveTau: return "NonPositiveTau";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::ParseFailure: return "ParseFailure";
    case Errc::EncodeFailure: return "EncodeFailure";
    case Errc::MissingDriver: return "MissingDriver";
    case Errc::EmptyIndex: return "EmptyIndex";
    case Errc::FingerprintMismatch: return "FingerprintMismatch";
    case Errc::MissingKnowledgeFile: return "MissingKnowledgeFile";
    case Errc::UnknownReference: return "UnknownReference";
    case Errc::BadCalibration: return "BadCalibration";
    case Errc::CursorOutOfRange: return "CursorOutOfRange";
    case Errc::EmptyPermittedSet: return "EmptyPermittedSet";
    case Errc::EmptyConstraint: return "EmptyConstraint";
    case Errc::TokenCapExceeded: return "TokenCapExceeded";
    case Errc::CalledOnPass: return "CalledOnPass";
    case Errc::EmptyTrace: return "EmptyTrace";
    case Errc::ContractViolation: return "ContractViolation";
    case Errc::AllReplicasFailed: return "AllReplicasFailed";
    case Errc::BackendError: return "BackendError";
    case Errc::EmptyRecords: return "EmptyRecords";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(errc_name(code)) + ": " + message),
      code_(code),
      detail_(message) {}

}  // namespace toporag
