#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace texec {

/// Error classes surfaced by the library. The CLI maps each class to a
/// distinct process exit code (see exit_code()).
enum class ErrorKind {
    InvalidArgument,
    MalformedInput,
    SchemaMismatch,
    Io,
    DegenerateBins,
    FitDiverged,
    SingularDesign,
    InsufficientData,
    NonConvexImpactMatrix,
    InfeasibleParticipation,
    ZeroTotalVolume,
    SingularSystem,
    NonConvex,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Process exit code for an error class. 0 is reserved for success and 2 for
/// command-line usage errors.
int exit_code(ErrorKind kind) noexcept;

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw Error(ErrorKind::InvalidArgument, message);
    }
}

}  // namespace texec
