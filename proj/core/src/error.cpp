#include "onealign/error.hpp"

namespace onealign {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyId: return "EmptyId";
    case ErrorCode::OffsetOverlap: return "OffsetOverlap";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::BadMask: return "BadMask";
    case ErrorCode::UnknownModality: return "UnknownModality";
    case ErrorCode::MissingId: return "MissingId";
    case ErrorCode::NoAnchorModality: return "NoAnchorModality";
    case ErrorCode::MissingCluster: return "MissingCluster";
    case ErrorCode::BadFractions: return "BadFractions";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::MissingForwardCache: return "MissingForwardCache";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::BadCheckpoint: return "BadCheckpoint";
    case ErrorCode::NoAnchor: return "NoAnchor";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::SplitLeak: return "SplitLeak";
    case ErrorCode::ParamBudgetExceeded: return "ParamBudgetExceeded";
    case ErrorCode::LabelMismatch: return "LabelMismatch";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyLabelMatrix: return "EmptyLabelMatrix";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptySample: return "EmptySample";
    case ErrorCode::NonPositivePerf: return "NonPositivePerf";
    case ErrorCode::RaggedAlignment: return "RaggedAlignment";
    case ErrorCode::TooFewSequences: return "TooFewSequences";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

void fail(ErrorCode code, const std::string& what, std::optional<std::size_t> index) {
  throw Error(code, what, index);
}

}  // namespace onealign
