#include "sectorllm/error.hpp"

namespace sectorllm {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingTicker: return "MissingTicker";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::InsufficientOverlap: return "InsufficientOverlap";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::UniverseTooSmall: return "UniverseTooSmall";
    case ErrorCode::MissingPlaceholder: return "MissingPlaceholder";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::ReplayMiss: return "ReplayMiss";
    case ErrorCode::CassetteCorrupt: return "CassetteCorrupt";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::DegenerateUniverse: return "DegenerateUniverse";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::ZeroVolatility: return "ZeroVolatility";
    case ErrorCode::ZeroIndexVolatility: return "ZeroIndexVolatility";
    case ErrorCode::IncompleteSet: return "IncompleteSet";
    case ErrorCode::ZeroTotalVariance: return "ZeroTotalVariance";
    case ErrorCode::ZeroMatrix: return "ZeroMatrix";
    case ErrorCode::TooFewRuns: return "TooFewRuns";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DataError: return "DataError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace sectorllm
