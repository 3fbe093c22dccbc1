#include "vocbench/error.hpp"

namespace vocbench {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::MissingNormStats: return "MissingNormStats";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::UnknownProvider: return "UnknownProvider";
    case ErrorCode::TooFewEmbeddings: return "TooFewEmbeddings";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ProviderMismatch: return "ProviderMismatch";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::MissingFiles: return "MissingFiles";
    case ErrorCode::UnknownLayout: return "UnknownLayout";
    case ErrorCode::CommandFailed: return "CommandFailed";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::NoOutput: return "NoOutput";
    case ErrorCode::BadOutputRate: return "BadOutputRate";
    case ErrorCode::MissingAudio: return "MissingAudio";
    case ErrorCode::DuplicateEntry: return "DuplicateEntry";
    case ErrorCode::NoTestLoaded: return "NoTestLoaded";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownStimulus: return "UnknownStimulus";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::NoRatings: return "NoRatings";
    case ErrorCode::MissingSynth: return "MissingSynth";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace vocbench
