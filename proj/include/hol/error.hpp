#pragma once

#include <stdexcept>
#include <string>

namespace hol {

enum class ErrorKind {
    InvalidArgument,
    OutsideDisc,
    DegenerateIdentity,
    EllipticInput,
    FixedPointSingularity,
    TargetsInfeasible,
    CandidatesExhausted,
    SeedOutsideFundamentalDomain,
    IllConditionedBasis,
    InadmissibleLambda,
    QuadratureTailTooLarge,
    NumericalUnderflow,
    ReferencePointNearZero,
    AtomOutsideJ,
    HyperbolicFixedAtomNotEigen,
    AllFactorsAbsent,
    ConfigInvalid,
    UnknownReportKind,
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::OutsideDisc: return "OutsideDisc";
        case ErrorKind::DegenerateIdentity: return "DegenerateIdentity";
        case ErrorKind::EllipticInput: return "EllipticInput";
        case ErrorKind::FixedPointSingularity: return "FixedPointSingularity";
        case ErrorKind::TargetsInfeasible: return "TargetsInfeasible";
        case ErrorKind::CandidatesExhausted: return "CandidatesExhausted";
        case ErrorKind::SeedOutsideFundamentalDomain: return "SeedOutsideFundamentalDomain";
        case ErrorKind::IllConditionedBasis: return "IllConditionedBasis";
        case ErrorKind::InadmissibleLambda: return "InadmissibleLambda";
        case ErrorKind::QuadratureTailTooLarge: return "QuadratureTailTooLarge";
        case ErrorKind::NumericalUnderflow: return "NumericalUnderflow";
        case ErrorKind::ReferencePointNearZero: return "ReferencePointNearZero";
        case ErrorKind::AtomOutsideJ: return "AtomOutsideJ";
        case ErrorKind::HyperbolicFixedAtomNotEigen: return "HyperbolicFixedAtomNotEigen";
        case ErrorKind::AllFactorsAbsent: return "AllFactorsAbsent";
        case ErrorKind::ConfigInvalid: return "ConfigInvalid";
        case ErrorKind::UnknownReportKind: return "UnknownReportKind";
    }
    return "Unknown";
}

// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace hol
