#include "descseq/error.h"

namespace descseq {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedFile: return "MalformedFile";
    case ErrorCode::kUnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::kUnsupportedTimeSignature: return "UnsupportedTimeSignature";
    case ErrorCode::kEmptyScore: return "EmptyScore";
    case ErrorCode::kOutOfBar: return "OutOfBar";
    case ErrorCode::kVocabularyOverflow: return "VocabularyOverflow";
    case ErrorCode::kGrammarError: return "GrammarError";
    case ErrorCode::kUnknownToken: return "UnknownToken";
    case ErrorCode::kCodeOutOfRange: return "CodeOutOfRange";
    case ErrorCode::kBarCountMismatch: return "BarCountMismatch";
    case ErrorCode::kTooShort: return "TooShort";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kIndexOutOfTable: return "IndexOutOfTable";
    case ErrorCode::kContextOverflow: return "ContextOverflow";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kZeroMean: return "ZeroMean";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kCheckpointError: return "CheckpointError";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kUsage: return "UsageError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

GrammarError::GrammarError(std::size_t token_index, const std::string& message)
    : Error(ErrorCode::kGrammarError,
            "token " + std::to_string(token_index) + ": " + message),
      token_index_(token_index) {}

}  // namespace descseq
