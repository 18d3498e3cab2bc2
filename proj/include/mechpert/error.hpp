#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mechpert {

enum class ErrorCode {
  MissingFile,
  MalformedRow,
  NonFiniteValue,
  DuplicatePerturbation,
  ScoreOutOfRange,
  DimensionMismatch,
  PoincareNormViolation,
  NTooLarge,
  EmptyGraph,
  SeedNotInGraph,
  NodeNotInGraph,
  NoConvergence,
  ZeroKernelMass,
  OutsideBall,
  EmptyInput,
  EmptyPool,
  UnparseableResponse,
  ProviderTransport,
  ProviderUnavailable,
  CacheCorrupt,
  NoChains,
  EmptyNeighborhood,
  MissingProfile,
  NoValidNeighbors,
  SeedCountNot3,
  InsufficientEmbeddedCandidates,
  ZeroTotalWeight,
  BudgetExceedsPool,
  AnchorMissingProfile,
  AnchorNotInGraph,
  ConstantInput,
  LengthMismatch,
  EmptyScores,
  InvalidConfig,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicatePerturbation: return "DuplicatePerturbation";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PoincareNormViolation: return "PoincareNormViolation";
    case ErrorCode::NTooLarge: return "NTooLarge";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::SeedNotInGraph: return "SeedNotInGraph";
    case ErrorCode::NodeNotInGraph: return "NodeNotInGraph";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ZeroKernelMass: return "ZeroKernelMass";
    case ErrorCode::OutsideBall: return "OutsideBall";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::UnparseableResponse: return "UnparseableResponse";
    case ErrorCode::ProviderTransport: return "ProviderTransport";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::CacheCorrupt: return "CacheCorrupt";
    case ErrorCode::NoChains: return "NoChains";
    case ErrorCode::EmptyNeighborhood: return "EmptyNeighborhood";
    case ErrorCode::MissingProfile: return "MissingProfile";
    case ErrorCode::NoValidNeighbors: return "NoValidNeighbors";
    case ErrorCode::SeedCountNot3: return "SeedCountNot3";
    case ErrorCode::InsufficientEmbeddedCandidates: return "InsufficientEmbeddedCandidates";
    case ErrorCode::ZeroTotalWeight: return "ZeroTotalWeight";
    case ErrorCode::BudgetExceedsPool: return "BudgetExceedsPool";
    case ErrorCode::AnchorMissingProfile: return "AnchorMissingProfile";
    case ErrorCode::AnchorNotInGraph: return "AnchorNotInGraph";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mechpert
