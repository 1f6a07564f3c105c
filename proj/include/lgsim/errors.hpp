#pragma once

#include <stdexcept>
#include <string>

namespace lgsim {

// Every error the library raises derives from one of the std exception
// families so callers can catch coarsely (std::exception) or precisely.

struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Conditioning on an outcome whose probability is below the degeneracy threshold.
struct DegenerateConditioning : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An estimator that divides by the measurement strength K was asked to run at K ~ 0.
struct ZeroStrength : std::domain_error {
    using std::domain_error::domain_error;
};

struct EmptyCountTable : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InsufficientPostselection : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UndefinedSignificance : std::domain_error {
    using std::domain_error::domain_error;
};

/// A root/fit target outside the range the model can reach.
struct NoSolution : std::runtime_error {
    NoSolution(const std::string& what, double lo, double hi)
        : std::runtime_error(what), reachable_lo(lo), reachable_hi(hi) {}
    double reachable_lo;
    double reachable_hi;
};

}  // namespace lgsim
