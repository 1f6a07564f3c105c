// Peak Leggett-Garg violation and violation window as the measurement weakens.

#include <cstdio>

#include "lgsim/lgsim.hpp"

int main() {
    using namespace lgsim::experiment;
    std::printf("%8s %12s %12s %12s %12s\n", "K", "theta*", "B_max", "sqrt(2-K^2)", "window");
    for (double k : {0.05, 0.1598, 0.3, 0.5445, 0.8, 0.9999, 1.0}) {
        const BMax peak = b_max(k);
        const ViolationInterval iv = violation_interval(k);
        std::printf("%8.4f %12.6f %12.8f %12.8f %12.6f\n", k, peak.theta_star, peak.b_star, closed_form::b_max(k),
                    iv.width());
    }
}
