// How imperfect two-photon interference in the gate erodes the violation, and
// which mode overlap reproduces a given measured peak.

#include <cstdio>

#include "lgsim/lgsim.hpp"

int main() {
    using namespace lgsim;
    const double k = 0.5445;
    std::printf("%6s %12s %12s %12s\n", "xi", "success", "fidelity", "B_max");
    for (double xi : {0.0, 0.25, 0.5, 0.75, 0.9, 1.0}) {
        const auto map = optics::effective_map(xi);
        const auto peak = experiment::b_max(k, experiment::PpbsGate{xi});
        std::printf("%6.2f %12.8f %12.8f %12.8f\n", xi, map.success_probability(), optics::process_fidelity(map),
                    peak.b_star);
    }
    for (double target : {1.25, 1.29}) {
        std::printf("B_max = %.3f at K = %.4f needs xi = %.6f\n", target, k, optics::fit_visibility(target, k));
    }
}
