#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stratus {

// Every structured failure the engine can report. The CLI prints the name
// verbatim, so renaming an enumerator is a breaking change.
enum class ErrorCode {
    SchemaError,
    ConstraintError,
    MissingColumn,
    InsufficientLevels,
    UnbalancedDesign,
    NonNumericResponse,
    NoResidualDf,
    ParseError,
    EmptyTable,
    MissingCell,
    UnknownDataset,
    DomainError,
    ConvergenceError,
    NotApplicable,
    DegenerateShrinkage,
    SampleTooSmall,
    SampleTooLarge,
    ZeroVariance,
    InsufficientGroups,
    DegenerateMatrix,
    ConstantEnvironmentIndex,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }
    [[nodiscard]] std::string_view name() const noexcept { return to_string(code_); }

private:
    ErrorCode code_;
};

}  // namespace stratus
