#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sectorllm {

enum class ErrorCode {
  // marketdata
  MissingTicker,
  MalformedRow,
  NonPositivePrice,
  InsufficientOverlap,
  MissingData,
  EmptyWindow,
  // universe
  UniverseTooSmall,
  // llm gateway
  MissingPlaceholder,
  ProviderError,
  ParseError,
  NegativeWeight,
  ReplayMiss,
  CassetteCorrupt,
  // portfolio builder
  AllZero,
  DegenerateUniverse,
  // optimizer
  TooFewRows,
  Infeasible,
  NumericalFailure,
  // backtest
  MissingColumn,
  ZeroVolatility,
  ZeroIndexVolatility,
  IncompleteSet,
  // diagnostics
  ZeroTotalVariance,
  ZeroMatrix,
  TooFewRuns,
  // orchestration
  ConfigError,
  DataError,
  IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a machine-checkable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sectorllm
