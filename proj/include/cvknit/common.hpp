#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace cvknit {

using cxd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Default tolerances used across the toolkit. Callers can override most of
// them per call; these are the fail-loud defaults.
inline constexpr double kTailTol = 1e-10;        // truncation tail mass
inline constexpr double kHermTol = 1e-12;        // Hermiticity defect
inline constexpr double kDegeneracyFloor = 1e-12; // cat / branch normalization floor
inline constexpr double kPruneRel = 1e-14;       // |q| < kPruneRel * gamma_bar is pruned

// Error taxonomy. The CLI maps these onto exit codes: InputError -> 2,
// NumericError (and subclasses) -> 3, IoError -> 4.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TruncationError : NumericError {
    TruncationError(const std::string& what, int suggested)
        : NumericError(what), suggested_cutoff(suggested) {}
    int suggested_cutoff = 0;
};

struct DegeneracyError : NumericError {
    using NumericError::NumericError;
};

struct DimensionError : InputError {
    using InputError::InputError;
};

struct ResourceError : InputError {
    using InputError::InputError;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Principal-valued angle in (-pi, pi].
inline double principal_angle(double theta) {
    double t = std::remainder(theta, 2.0 * kPi);
    if (t <= -kPi) t += 2.0 * kPi;
    return t;
}

}  // namespace cvknit
