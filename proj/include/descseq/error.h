#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace descseq {

/// Machine-readable error classes. The CLI prints the class name verbatim.
enum class ErrorCode {
  kMalformedFile,
  kUnsupportedFormat,
  kUnsupportedTimeSignature,
  kEmptyScore,
  kOutOfBar,
  kVocabularyOverflow,
  kGrammarError,
  kUnknownToken,
  kCodeOutOfRange,
  kBarCountMismatch,
  kTooShort,
  kDimensionMismatch,
  kIndexOutOfTable,
  kContextOverflow,
  kNonFiniteLoss,
  kLengthMismatch,
  kZeroMean,
  kEmptyCorpus,
  kConfigMismatch,
  kCheckpointError,
  kIoError,
  kUsage,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by the token decoder and grammar validator; carries the offending
/// token position.
class GrammarError : public Error {
 public:
  GrammarError(std::size_t token_index, const std::string& message);

  std::size_t token_index() const noexcept { return token_index_; }

 private:
  std::size_t token_index_;
};

}  // namespace descseq
