#include "texec/errors.hpp"

namespace texec {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::MalformedInput: return "MalformedInput";
        case ErrorKind::SchemaMismatch: return "SchemaMismatch";
        case ErrorKind::Io: return "Io";
        case ErrorKind::DegenerateBins: return "DegenerateBins";
        case ErrorKind::FitDiverged: return "FitDiverged";
        case ErrorKind::SingularDesign: return "SingularDesign";
        case ErrorKind::InsufficientData: return "InsufficientData";
        case ErrorKind::NonConvexImpactMatrix: return "NonConvexImpactMatrix";
        case ErrorKind::InfeasibleParticipation: return "InfeasibleParticipation";
        case ErrorKind::ZeroTotalVolume: return "ZeroTotalVolume";
        case ErrorKind::SingularSystem: return "SingularSystem";
        case ErrorKind::NonConvex: return "NonConvex";
    }
    return "Unknown";
}

int exit_code(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return 3;
        case ErrorKind::MalformedInput:
        case ErrorKind::SchemaMismatch: return 4;
        case ErrorKind::Io: return 5;
        case ErrorKind::DegenerateBins:
        case ErrorKind::FitDiverged:
        case ErrorKind::SingularDesign:
        case ErrorKind::InsufficientData: return 6;
        case ErrorKind::NonConvexImpactMatrix:
        case ErrorKind::InfeasibleParticipation:
        case ErrorKind::ZeroTotalVolume: return 7;
        case ErrorKind::SingularSystem:
        case ErrorKind::NonConvex: return 8;
    }
    return 1;
}

}  // namespace texec
