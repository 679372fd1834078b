#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace toporag {

// One code per failure named in the module contracts.
enum class Errc {
  InvalidArgument,
  Io,
  MalformedJson,
  UnknownLinkEndpoint,
  DuplicateInterface,
  InfeasibleSizes,
  EmptyGraph,
  ZeroVector,
  NonPositiveTau,
  DegenerateBatch,
  EmptyCorpus,
  ParseFailure,
  EncodeFailure,
  MissingDriver,
  EmptyIndex,
  FingerprintMismatch,
  MissingKnowledgeFile,
  UnknownReference,
  BadCalibration,
  CursorOutOfRange,
  EmptyPermittedSet,
  EmptyConstraint,
  TokenCapExceeded,
  CalledOnPass,
  EmptyTrace,
  ContractViolation,
  AllReplicasFailed,
  BackendError,
  EmptyRecords,
};

std::string_view errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace toporag
