#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace onealign {

enum class ErrorCode {
  // embstore
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  CountMismatch,
  NonFiniteValue,
  DuplicateId,
  EmptyId,
  OffsetOverlap,
  EmptyMask,
  BadMask,
  UnknownModality,
  MissingId,
  NoAnchorModality,
  MissingCluster,
  BadFractions,
  BadLabel,
  ParseError,
  IoError,
  // numcore
  ShapeMismatch,
  ZeroVector,
  MissingForwardCache,
  InvalidArgument,
  // align
  NotNormalized,
  EmptyBatch,
  TooFewPairs,
  NumericFailure,
  BadCheckpoint,
  // retrieval
  NoAnchor,
  KTooLarge,
  SplitLeak,
  // downstream
  ParamBudgetExceeded,
  LabelMismatch,
  ConstantInput,
  SingleClass,
  EmptyLabelMatrix,
  LengthMismatch,
  // stats
  EmptySample,
  NonPositivePerf,
  RaggedAlignment,
  TooFewSequences,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library. `index` carries the offending row or
/// step when the error is positional.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::size_t> index = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what,
                       std::optional<std::size_t> index = std::nullopt);

}  // namespace onealign
