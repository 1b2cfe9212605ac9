#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pushlearn {

enum class ErrorCode {
  // graph
  SelfLoop,
  NotStronglyConnected,
  DuplicateEdge,
  NodeOutOfRange,
  TooFewNodes,
  // stats
  InvalidDistribution,
  OutOfSupport,
  SupportMismatch,
  QuadratureFailure,
  InvalidModel,
  // schedule
  InvalidParams,
  DimensionMismatch,
  TraceFormat,
  // protocol
  NonpositiveWeight,
  StaleTick,
  UnknownSender,
  SizeMismatch,
  // engine
  ObservationTapeExhausted,
  // analysis
  DegenerateBound,
  WindowTooShort,
  HistoryMissing,
  // cli
  ConfigError,
  EmptySweep,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace pushlearn
