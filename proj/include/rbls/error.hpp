#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rbls {

enum class ErrorCode {
    InvalidInput,
    ShapeMismatch,
    RankDeficient,
    NoConvergence,
    NotPowerOfTwo,
    InvalidCounts,
    LeverageOne,
    SketchRankDeficient,
    DegenerateRange,
    InvalidParams,
    ParseError,
    SchemaError,
    MissingTruth,
    MissingCorrupted,
    ConfigError,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidInput:        return "InvalidInput";
    case ErrorCode::ShapeMismatch:       return "ShapeMismatch";
    case ErrorCode::RankDeficient:       return "RankDeficient";
    case ErrorCode::NoConvergence:       return "NoConvergence";
    case ErrorCode::NotPowerOfTwo:       return "NotPowerOfTwo";
    case ErrorCode::InvalidCounts:       return "InvalidCounts";
    case ErrorCode::LeverageOne:         return "LeverageOne";
    case ErrorCode::SketchRankDeficient: return "SketchRankDeficient";
    case ErrorCode::DegenerateRange:     return "DegenerateRange";
    case ErrorCode::InvalidParams:       return "InvalidParams";
    case ErrorCode::ParseError:          return "ParseError";
    case ErrorCode::SchemaError:         return "SchemaError";
    case ErrorCode::MissingTruth:        return "MissingTruth";
    case ErrorCode::MissingCorrupted:    return "MissingCorrupted";
    case ErrorCode::ConfigError:         return "ConfigError";
    case ErrorCode::IoError:             return "IoError";
    }
    return "Unknown";
}

// Every failure raised by the library carries a code so callers (the CLI,
// the experiment runner) can map it to an exit status or a CSV error column.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace rbls
