#include "stratus/error.hpp"

namespace stratus {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::SchemaError: return "SchemaError";
        case ErrorCode::ConstraintError: return "ConstraintError";
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::InsufficientLevels: return "InsufficientLevels";
        case ErrorCode::UnbalancedDesign: return "UnbalancedDesign";
        case ErrorCode::NonNumericResponse: return "NonNumericResponse";
        case ErrorCode::NoResidualDf: return "NoResidualDf";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::MissingCell: return "MissingCell";
        case ErrorCode::UnknownDataset: return "UnknownDataset";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ConvergenceError: return "ConvergenceError";
        case ErrorCode::NotApplicable: return "NotApplicable";
        case ErrorCode::DegenerateShrinkage: return "DegenerateShrinkage";
        case ErrorCode::SampleTooSmall: return "SampleTooSmall";
        case ErrorCode::SampleTooLarge: return "SampleTooLarge";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::InsufficientGroups: return "InsufficientGroups";
        case ErrorCode::DegenerateMatrix: return "DegenerateMatrix";
        case ErrorCode::ConstantEnvironmentIndex: return "ConstantEnvironmentIndex";
        case ErrorCode::IoError: return "IoError";
    }
    return "UnknownError";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace stratus
