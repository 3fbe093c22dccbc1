#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vocbench {

enum class ErrorCode {
  // audio-io
  UnsupportedFormat,
  CorruptHeader,
  EmptyAudio,
  IoFailure,
  // spectral
  RateMismatch,
  TooShort,
  DegenerateRange,
  MissingNormStats,
  InvalidConfig,
  // metrics
  ConfigMismatch,
  LengthMismatch,
  TooSmall,
  UnknownProvider,
  TooFewEmbeddings,
  DimensionMismatch,
  ProviderMismatch,
  // corpus
  EmptyCorpus,
  MissingFiles,
  UnknownLayout,
  // bench
  CommandFailed,
  Timeout,
  NoOutput,
  BadOutputRate,
  // mos
  MissingAudio,
  DuplicateEntry,
  NoTestLoaded,
  UnknownSession,
  UnknownStimulus,
  ScoreOutOfRange,
  NoRatings,
  // cli
  MissingSynth,
  SchemaMismatch,
  Usage,
};

std::string_view to_string(ErrorCode code);

/// Every recoverable failure in the toolkit is reported as an Error carrying
/// one of the codes above. The message names the offending file or value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vocbench
