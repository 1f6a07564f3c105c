#pragma once

#include <cmath>
#include <sstream>

#include "lgsim/errors.hpp"
#include "lgsim/experiment.hpp"

namespace lgsim::optics {

inline constexpr double kFitTolerance = 1e-6;

/// Mode overlap xi for which the gate model's peak B equals `target_bmax` at strength K.
/// Relies on b_max being nondecreasing in xi.
inline double fit_visibility(double target_bmax, double k) {
    using experiment::PpbsGate;
    auto peak = [k](double xi) { return experiment::b_max(k, PpbsGate{xi}).b_star; };
    const double lo = peak(0.0);
    const double hi = peak(1.0);
    if (!std::isfinite(target_bmax) || target_bmax < lo - kFitTolerance || target_bmax > hi + kFitTolerance) {
        std::ostringstream msg;
        msg.precision(10);
        msg << "fit_visibility: target B_max " << target_bmax << " outside reachable range [" << lo << ", " << hi
            << "] for K=" << k;
        throw NoSolution(msg.str(), lo, hi);
    }
    if (std::abs(target_bmax - hi) <= kFitTolerance / 10) return 1.0;
    if (std::abs(target_bmax - lo) <= kFitTolerance / 10) return 0.0;

    double a = 0.0, b = 1.0;
    while (b - a > 1e-12) {
        const double mid = 0.5 * (a + b);
        const double value = peak(mid);
        if (std::abs(value - target_bmax) < kFitTolerance / 10) return mid;
        (value < target_bmax ? a : b) = mid;
    }
    return 0.5 * (a + b);
}

}  // namespace lgsim::optics
