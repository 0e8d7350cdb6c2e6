#pragma once

#include <stdexcept>
#include <string>

namespace hwcl {

enum class ErrorCode {
    ZeroVector,
    ShapeMismatch,
    InvalidTemperature,
    IndexOutOfRange,
    RewardShapeMismatch,
    WrongVariant,
    DimensionMismatch,
    DuplicateDeviceId,
    NonFiniteGradient,
    NoNegatives,
    InvalidK,
    OutOfRangeValue,
    InvalidSpec,
    IoError,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace hwcl
