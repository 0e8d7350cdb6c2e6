#include "hwcl/error.hpp"

namespace hwcl {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::ZeroVector: return "ZeroVector";
        case ErrorCode::ShapeMismatch: return "ShapeMismatch";
        case ErrorCode::InvalidTemperature: return "InvalidTemperature";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::RewardShapeMismatch: return "RewardShapeMismatch";
        case ErrorCode::WrongVariant: return "WrongVariant";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::DuplicateDeviceId: return "DuplicateDeviceId";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::NoNegatives: return "NoNegatives";
        case ErrorCode::InvalidK: return "InvalidK";
        case ErrorCode::OutOfRangeValue: return "OutOfRangeValue";
        case ErrorCode::InvalidSpec: return "InvalidSpec";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

} // namespace hwcl
