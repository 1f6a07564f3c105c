#pragma once

// Finite-statistics layer: multinomial coincidence sampling, plug-in
// estimators with Poisson error propagation, and seeded repeated trials.
//
// Seeding contract: trial i of a plan with master seed m draws its counts from
// std::mt19937_64 seeded with derive_seed(m, i) = splitmix64(m + (i + 1) * 0x9E3779B97F4A7C15).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "lgsim/errors.hpp"
#include "lgsim/experiment.hpp"

namespace lgsim::stats {

using experiment::CorrelatorNorm;
using experiment::ProbabilityTable;

struct CountTable {
    std::uint64_t n_dd = 0;
    std::uint64_t n_da = 0;
    std::uint64_t n_ad = 0;
    std::uint64_t n_aa = 0;

    std::uint64_t total() const { return n_dd + n_da + n_ad + n_aa; }
    std::uint64_t postselected() const { return n_dd + n_ad; }
};

struct EstimateWithError {
    double value = 0.0;
    double sigma = 0.0;
};

struct TrialPlan {
    std::uint64_t pairs_per_setting = 100000;
    std::uint64_t master_seed = 0;
    std::uint64_t trials = 1;

    void validate() const {
        if (pairs_per_setting < 1) throw InvalidArgument("TrialPlan: pairs_per_setting must be >= 1");
        if (trials < 1) throw InvalidArgument("TrialPlan: trials must be >= 1");
    }
};

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
    return splitmix64(master_seed + (trial_index + 1) * 0x9E3779B97F4A7C15ULL);
}

/// Multinomial draw of N pairs over the four cells, as a chain of conditional binomials.
inline CountTable sample_counts(const ProbabilityTable& table, std::uint64_t pairs, std::uint64_t seed) {
    if (pairs < 1) throw InvalidArgument("sample_counts: N must be >= 1");
    table.validate();
    std::mt19937_64 rng(seed);
    const double p[4] = {std::max(0.0, table.p_dd), std::max(0.0, table.p_da), std::max(0.0, table.p_ad),
                         std::max(0.0, table.p_aa)};
    std::uint64_t n[4] = {0, 0, 0, 0};
    std::uint64_t remaining = pairs;
    double mass = p[0] + p[1] + p[2] + p[3];
    for (int i = 0; i < 3 && remaining > 0; ++i) {
        const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
        if (q >= 1.0) {
            n[i] = remaining;
        } else if (q > 0.0) {
            std::binomial_distribution<std::uint64_t> draw(remaining, q);
            n[i] = draw(rng);
        }
        remaining -= n[i];
        mass -= p[i];
    }
    n[3] = remaining;
    return {n[0], n[1], n[2], n[3]};
}

/// Counts nearest to N * p, for plug-in consistency checks.
inline CountTable expected_counts(const ProbabilityTable& t, std::uint64_t pairs) {
    auto r = [pairs](double p) { return static_cast<std::uint64_t>(std::llround(p * static_cast<double>(pairs))); };
    return {r(t.p_dd), r(t.p_da), r(t.p_ad), r(t.p_aa)};
}

namespace detail {

// Poisson variance of a cell, floored at 1 so empty cells still carry uncertainty.
inline double poisson_variance(std::uint64_t n) { return n == 0 ? 1.0 : static_cast<double>(n); }

}  // namespace detail

inline ProbabilityTable frequencies(const CountTable& c) {
    const double n = static_cast<double>(c.total());
    return {c.n_dd / n, c.n_da / n, c.n_ad / n, c.n_aa / n};
}

/// B from empirical frequencies. B is a ratio sum_i w_i n_i / N, so
/// dB/dn_j = (w_j - B) / N, propagated with independent Poisson cell variances.
inline EstimateWithError estimate_lg(const CountTable& counts, double k, int mb_sign,
                                     CorrelatorNorm norm = CorrelatorNorm::DivideByK) {
    if (counts.total() == 0) throw EmptyCountTable("estimate_lg: count table is empty");
    if (!(k >= experiment::kMinKnowledge)) throw ZeroStrength("estimate_lg: measurement strength K below 1e-9");
    if (mb_sign != 1 && mb_sign != -1) throw InvalidArgument("estimate_lg: mb_sign must be +1 or -1");

    const double ck = norm == CorrelatorNorm::DivideByK ? 1.0 / k : 1.0;
    const double s = mb_sign;
    // Weights of each cell in  s*(s1 + s1s2) - s2, cells ordered dd, da, ad, aa.
    const double w[4] = {s * (1.0 / k + ck) - 1.0, s * (1.0 / k - ck) + 1.0, s * (-1.0 / k - ck) - 1.0,
                         s * (-1.0 / k + ck) + 1.0};
    const std::uint64_t n[4] = {counts.n_dd, counts.n_da, counts.n_ad, counts.n_aa};
    const double total = static_cast<double>(counts.total());

    const double b = experiment::lg_record(frequencies(counts), k, mb_sign, norm).b;
    double var = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double d = (w[i] - b) / total;
        var += d * d * detail::poisson_variance(n[i]);
    }
    return {b, std::sqrt(var)};
}

/// Weak value from the post-selected (signal D) subsample.
inline EstimateWithError estimate_weak_value(const CountTable& counts, double k) {
    const std::uint64_t m = counts.postselected();
    if (m == 0) throw InsufficientPostselection("estimate_weak_value: no post-selected coincidences");
    if (!(k >= experiment::kMinKnowledge))
        throw ZeroStrength("estimate_weak_value: measurement strength K below 1e-9");
    const double ndd = static_cast<double>(counts.n_dd);
    const double nad = static_cast<double>(counts.n_ad);
    const double md = static_cast<double>(m);
    const double wv = (ndd - nad) / (k * md);
    // d wv / d n_dd = 2 n_ad / (K M^2),  d wv / d n_ad = -2 n_dd / (K M^2)
    const double scale = 2.0 / (k * md * md);
    const double var = scale * scale * (nad * nad * detail::poisson_variance(counts.n_dd) +
                                        ndd * ndd * detail::poisson_variance(counts.n_ad));
    return {wv, std::sqrt(var)};
}

/// Number of standard deviations by which the estimate exceeds `bound`.
inline double significance(const EstimateWithError& e, double bound = 1.0) {
    if (!(e.sigma > 0.0)) throw UndefinedSignificance("significance: sigma must be > 0");
    return (e.value - bound) / e.sigma;
}

struct TrialResult {
    std::uint64_t index = 0;
    std::uint64_t seed = 0;
    CountTable counts;
    EstimateWithError b;
    /// Empty when no coincidence passed post-selection.
    std::optional<EstimateWithError> wv;
};

struct TrialSummary {
    std::vector<TrialResult> trials;
    /// Exact B for the configuration (infinite statistics).
    double b_true = 0.0;
    double mean_b = 0.0;
    double mean_sigma = 0.0;
    /// Sample standard deviation of the per-trial B; 0 for a single trial.
    double spread = 0.0;
    /// Fraction of trials with |B - b_true| < 1.96 sigma.
    double coverage = 0.0;
};

inline constexpr double kCoverageZ = 1.96;

inline TrialSummary run_trials(const TrialPlan& plan, const experiment::ExperimentConfig& config) {
    plan.validate();
    config.validate();
    const double k = config.meter.knowledge();
    const ProbabilityTable table = experiment::run(config);

    TrialSummary summary;
    summary.b_true = experiment::lg_record(table, k, config.mb_sign, config.correlator).b;
    summary.trials.reserve(plan.trials);
    double sum_b = 0.0, sum_sigma = 0.0;
    std::uint64_t covered = 0;
    for (std::uint64_t i = 0; i < plan.trials; ++i) {
        TrialResult r;
        r.index = i;
        r.seed = derive_seed(plan.master_seed, i);
        r.counts = sample_counts(table, plan.pairs_per_setting, r.seed);
        r.b = estimate_lg(r.counts, k, config.mb_sign, config.correlator);
        if (r.counts.postselected() > 0) r.wv = estimate_weak_value(r.counts, k);
        sum_b += r.b.value;
        sum_sigma += r.b.sigma;
        if (std::abs(r.b.value - summary.b_true) < kCoverageZ * r.b.sigma) ++covered;
        summary.trials.push_back(r);
    }
    const double n = static_cast<double>(plan.trials);
    summary.mean_b = sum_b / n;
    summary.mean_sigma = sum_sigma / n;
    summary.coverage = static_cast<double>(covered) / n;
    if (plan.trials > 1) {
        double ss = 0.0;
        for (const auto& r : summary.trials) ss += (r.b.value - summary.mean_b) * (r.b.value - summary.mean_b);
        summary.spread = std::sqrt(ss / (n - 1.0));
    }
    return summary;
}

}  // namespace lgsim::stats
