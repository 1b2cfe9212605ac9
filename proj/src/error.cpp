#include "pushlearn/error.hpp"

namespace pushlearn {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::NotStronglyConnected: return "NotStronglyConnected";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::NodeOutOfRange: return "NodeOutOfRange";
    case ErrorCode::TooFewNodes: return "TooFewNodes";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::OutOfSupport: return "OutOfSupport";
    case ErrorCode::SupportMismatch: return "SupportMismatch";
    case ErrorCode::QuadratureFailure: return "QuadratureFailure";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::InvalidParams: return "InvalidParams";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TraceFormat: return "TraceFormat";
    case ErrorCode::NonpositiveWeight: return "NonpositiveWeight";
    case ErrorCode::StaleTick: return "StaleTick";
    case ErrorCode::UnknownSender: return "UnknownSender";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::ObservationTapeExhausted: return "ObservationTapeExhausted";
    case ErrorCode::DegenerateBound: return "DegenerateBound";
    case ErrorCode::WindowTooShort: return "WindowTooShort";
    case ErrorCode::HistoryMissing: return "HistoryMissing";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::EmptySweep: return "EmptySweep";
  }
  return "Unknown";
}

}  // namespace pushlearn
