#ifndef BMR_ERRORS_HPP
#define BMR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bmr {

enum class ErrorCode {
    NonHurwitz = 1,
    SingularOperator,
    SpectraOverlap,
    TooLarge,
    Indefinite,
    NoConvergence,
    BadDimension,
    NotPurelyBilinear,
    RowSumViolation,
    NoNullVector,
    NonSimpleNull,
    NotStabilizing,
    RankDeficientGramian,
    SingularFastBlock,
    IllConditionedProjector,
    UnstableIterate,
    ConfigInvalid,
    IoError,
    GridMismatch,
    StepSizeUnderflow,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace bmr

#endif
