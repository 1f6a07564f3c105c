#pragma once

// Command-line front end: sweep | fig2 | fig3 | gate | mc | replay.
//
// Every CSV starts with a '#'-prefixed manifest (first line
// "# lgi-weaksim manifest v1", then key=value lines naming every resolved
// parameter). `replay <file>` re-runs a manifest and reproduces the file.

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "lgsim/errors.hpp"
#include "lgsim/experiment.hpp"
#include "lgsim/optics.hpp"
#include "lgsim/stats.hpp"

namespace lgsim::cli {

inline constexpr const char* kToolName = "lgi-weaksim";
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr const char* kManifestMagic = "# lgi-weaksim manifest v1";

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Significant digits for reals in CSV bodies.
inline constexpr int kCsvDigits = 12;

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Locale-independent %.12g-style formatting; "nan" for NaN, no negative zero.
inline std::string format_real(double x, int digits = kCsvDigits) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    if (x == 0.0) x = 0.0;
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, digits);
    return std::string(buf, res.ptr);
}

/// Shortest representation that parses back to the same double.
inline std::string format_exact(double x) {
    if (x == 0.0) x = 0.0;
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

class Manifest {
public:
    void add(std::string key, std::string value) { entries_.emplace_back(std::move(key), std::move(value)); }
    void add(std::string key, double value) { add(std::move(key), format_exact(value)); }

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::optional<std::string> get(const std::string& key) const {
        for (const auto& [k, v] : entries_)
            if (k == key) return v;
        return std::nullopt;
    }

    std::string render() const {
        std::string s = std::string(kManifestMagic) + "\n";
        for (const auto& [k, v] : entries_) s += "# " + k + "=" + v + "\n";
        return s;
    }

    /// Reads the leading comment block of a CSV produced by this tool.
    static Manifest parse(std::istream& in) {
        std::string line;
        if (!std::getline(in, line) || line != kManifestMagic) throw UsageError("replay: file has no lgi-weaksim manifest");
        Manifest m;
        while (std::getline(in, line) && line.rfind("# ", 0) == 0) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) break;
            m.add(line.substr(2, eq - 2), line.substr(eq + 1));
        }
        return m;
    }

private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

/// Writes via a sibling temp file and rename so readers never see a partial file.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot open '" + tmp.string() + "' for writing");
        f << content;
        f.flush();
        if (!f) throw IoError("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into '" + path + "'");
    }
}

struct Options {
    // global
    std::string out;
    std::string out_prefix = "fig2";
    std::uint64_t seed = 1;
    bool quiet = false;
    bool degrees = false;
    // physics
    double k = 0.5445;
    int theta_steps = 256;
    std::string mb_sign = "+";
    std::string gate = "ideal";
    std::optional<double> visibility;
    bool raw_correlator = false;
    std::string k_list = "0.5445,0.1598";
    double theta = 7.0 * std::numbers::pi / 4.0;
    std::uint64_t pairs = 100000;
    std::uint64_t trials = 300;
    std::string replay_file;
};

namespace detail {

inline int parse_sign(const std::string& s) {
    if (s == "+" || s == "+1" || s == "1" || s == "plus") return +1;
    if (s == "-" || s == "-1" || s == "minus") return -1;
    throw UsageError("--mb-sign must be + or -");
}

inline std::string sign_text(int s) { return s > 0 ? "+" : "-"; }

inline double checked_k(double k) {
    if (!std::isfinite(k) || k < experiment::kMinKnowledge || k > 1.0)
        throw UsageError("--k must lie in [1e-9, 1]");
    return k;
}

inline experiment::GateModel gate_model(const Options& o) {
    if (o.gate == "ideal") {
        if (o.visibility) throw UsageError("--visibility only applies to --gate ppbs");
        return experiment::IdealGate{};
    }
    if (o.gate == "ppbs") {
        const double xi = o.visibility.value_or(1.0);
        if (!std::isfinite(xi) || xi < 0.0 || xi > 1.0) throw UsageError("--visibility must lie in [0, 1]");
        return experiment::PpbsGate{xi};
    }
    throw UsageError("--gate must be ideal or ppbs");
}

inline experiment::CorrelatorNorm correlator(const Options& o) {
    return o.raw_correlator ? experiment::CorrelatorNorm::Raw : experiment::CorrelatorNorm::DivideByK;
}

inline void add_model_manifest(Manifest& m, const Options& o) {
    m.add("gate", o.gate);
    if (o.gate == "ppbs") m.add("visibility", o.visibility.value_or(1.0));
    m.add("raw-correlator", o.raw_correlator ? "true" : "false");
}

inline void add_common_manifest(Manifest& m, const Options& o) {
    m.add("degrees", o.degrees ? "true" : "false");
    m.add("seed", std::to_string(o.seed));
    m.add("version", kToolVersion);
}

inline std::string theta_column(const Options& o) { return o.degrees ? "theta_deg" : "theta_rad"; }
inline double theta_out(const Options& o, double theta) { return o.degrees ? theta * 180.0 / std::numbers::pi : theta; }

inline std::vector<double> parse_k_list(const std::string& text) {
    std::vector<double> ks;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double v = 0.0;
        const char* first = item.data();
        const char* last = item.data() + item.size();
        auto res = std::from_chars(first, last, v);
        if (res.ec != std::errc{} || res.ptr != last) throw UsageError("--k-list: cannot parse '" + item + "'");
        ks.push_back(checked_k(v));
    }
    if (ks.empty()) throw UsageError("--k-list must name at least one K");
    return ks;
}

inline void emit(const Options& o, const std::string& path, const std::string& content, std::ostream& out,
                 std::ostream& err) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    write_file_atomic(path, content);
    if (!o.quiet) err << "wrote " << path << "\n";
}

inline const char* kSweepColumns = "k,mb_sign,p_dd,p_da,p_ad,p_aa,s1,s2,s1s2,b,wv,postselect_prob";

inline std::string sweep_body(const Options& o, const std::vector<experiment::SweepRow>& rows) {
    std::string s = theta_column(o) + "," + kSweepColumns + "\n";
    for (const auto& r : rows) {
        s += format_real(theta_out(o, r.theta)) + "," + format_real(r.k) + "," + std::to_string(r.lg.mb_sign);
        for (double v : {r.table.p_dd, r.table.p_da, r.table.p_ad, r.table.p_aa, r.lg.s1_mean, r.lg.s2_mean,
                         r.lg.s1s2_corr, r.lg.b, r.weak.wv, r.weak.postselection_probability})
            s += "," + format_real(v);
        s += "\n";
    }
    return s;
}

inline int sweep_like(const Options& o, const std::string& name, int sign, const std::string& panel,
                      std::string& content) {
    const double k = checked_k(o.k);
    if (o.theta_steps < 2) throw UsageError("--theta-steps must be >= 2");
    const auto gate = gate_model(o);
    Manifest m;
    m.add("subcommand", name);
    if (!panel.empty()) m.add("panel", panel);
    m.add("k", k);
    m.add("theta-steps", std::to_string(o.theta_steps));
    if (panel.empty()) m.add("mb-sign", sign_text(sign));
    add_model_manifest(m, o);
    add_common_manifest(m, o);
    const auto rows = experiment::theta_sweep(k, sign, gate, {0.0, experiment::kTwoPi, o.theta_steps}, correlator(o));
    content = m.render() + sweep_body(o, rows);
    return kExitOk;
}

inline int cmd_sweep(const Options& o, std::ostream& out, std::ostream& err) {
    std::string content;
    sweep_like(o, "sweep", parse_sign(o.mb_sign), "", content);
    emit(o, o.out, content, out, err);
    return kExitOk;
}

inline int cmd_fig2(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.out_prefix.empty()) throw UsageError("--out-prefix must not be empty");
    std::string a, b;
    sweep_like(o, "fig2", +1, "a", a);
    sweep_like(o, "fig2", -1, "b", b);
    emit(o, o.out_prefix + "_a.csv", a, out, err);
    emit(o, o.out_prefix + "_b.csv", b, out, err);
    return kExitOk;
}

inline int cmd_fig3(const Options& o, std::ostream& out, std::ostream& err) {
    const std::vector<double> ks = parse_k_list(o.k_list);
    if (o.theta_steps < 2) throw UsageError("--theta-steps must be >= 2");
    const int sign = parse_sign(o.mb_sign);
    const auto gate = gate_model(o);

    Manifest m;
    m.add("subcommand", "fig3");
    m.add("k-list", o.k_list);
    m.add("theta-steps", std::to_string(o.theta_steps));
    m.add("mb-sign", sign_text(sign));
    add_model_manifest(m, o);
    add_common_manifest(m, o);

    std::vector<experiment::BCurve> curves;
    for (double k : ks) curves.emplace_back(k, gate, sign);
    const experiment::ThetaGrid grid{0.0, experiment::kTwoPi, o.theta_steps};

    std::string s = m.render() + theta_column(o) + ",b_limit";
    for (double k : ks) s += ",b_k" + format_exact(k);
    s += "\n";
    for (int i = 0; i < grid.steps; ++i) {
        const double theta = grid.at(i);
        s += format_real(theta_out(o, theta)) + "," +
             format_real(experiment::closed_form::b_zero_strength(theta, sign));
        for (const auto& c : curves) s += "," + format_real(c(theta));
        s += "\n";
    }
    // Violation summary, always for the +S1 convention (where violations occur in the upper lobe).
    const double half_pi = std::numbers::pi / 2.0;
    s += "# violation k=0 theta_lo=" + format_real(3.0 * half_pi) + " theta_hi=" + format_real(4.0 * half_pi) +
         " width=" + format_real(half_pi) + " b_max=" + format_real(std::numbers::sqrt2) + "\n";
    for (double k : ks) {
        const auto iv = experiment::violation_interval(k, gate);
        const auto peak = experiment::b_max(k, gate);
        s += "# violation k=" + format_exact(k) + " theta_lo=" + format_real(iv.theta_lo) +
             " theta_hi=" + format_real(iv.theta_hi) + " width=" + format_real(iv.width()) +
             " b_max=" + format_real(peak.b_star) + "\n";
    }
    emit(o, o.out, s, out, err);
    return kExitOk;
}

inline int cmd_gate(const Options& o, std::ostream& out, std::ostream& err) {
    const double xi = o.visibility.value_or(1.0);
    if (!std::isfinite(xi) || xi < 0.0 || xi > 1.0) throw UsageError("--visibility must lie in [0, 1]");
    const double k = checked_k(o.k);
    const auto map = optics::effective_map(xi);
    const auto peak = experiment::b_max(k, experiment::PpbsGate{xi});

    Manifest m;
    m.add("subcommand", "gate");
    m.add("visibility", xi);
    m.add("k", k);
    add_common_manifest(m, o);

    std::string s = m.render() + "visibility,success_probability,process_fidelity,k,theta_star,b_max,b_max_ideal\n";
    s += format_real(xi) + "," + format_real(map.success_probability()) + "," +
         format_real(optics::process_fidelity(map)) + "," + format_real(k) + "," +
         format_real(theta_out(o, peak.theta_star)) + "," + format_real(peak.b_star) + "," +
         format_real(experiment::closed_form::b_max(k)) + "\n";
    emit(o, o.out, s, out, err);
    return kExitOk;
}

inline int cmd_mc(const Options& o, std::ostream& out, std::ostream& err) {
    const double k = checked_k(o.k);
    if (!std::isfinite(o.theta)) throw UsageError("--theta must be finite");
    if (o.pairs < 1) throw UsageError("--pairs must be >= 1");
    if (o.trials < 1) throw UsageError("--trials must be >= 1");
    const int sign = parse_sign(o.mb_sign);

    experiment::ExperimentConfig cfg;
    cfg.theta = o.theta;
    cfg.meter = qcore::MeterSetting::from_knowledge(k);
    cfg.mb_sign = sign;
    cfg.gate = gate_model(o);
    cfg.correlator = correlator(o);
    const stats::TrialSummary sum = stats::run_trials({o.pairs, o.seed, o.trials}, cfg);

    Manifest m;
    m.add("subcommand", "mc");
    m.add("k", k);
    m.add("theta", o.theta);
    m.add("pairs", std::to_string(o.pairs));
    m.add("trials", std::to_string(o.trials));
    m.add("mb-sign", sign_text(sign));
    add_model_manifest(m, o);
    add_common_manifest(m, o);

    std::string s = m.render() + "trial,seed,n_dd,n_da,n_ad,n_aa,b,b_sigma,significance,wv,wv_sigma\n";
    for (const auto& t : sum.trials) {
        s += std::to_string(t.index) + "," + std::to_string(t.seed) + "," + std::to_string(t.counts.n_dd) + "," +
             std::to_string(t.counts.n_da) + "," + std::to_string(t.counts.n_ad) + "," +
             std::to_string(t.counts.n_aa) + "," + format_real(t.b.value) + "," + format_real(t.b.sigma) + "," +
             format_real(stats::significance(t.b)) + ",";
        s += t.wv ? format_real(t.wv->value) + "," + format_real(t.wv->sigma) : std::string("nan,nan");
        s += "\n";
    }
    const double se = sum.spread / std::sqrt(static_cast<double>(o.trials));
    s += "# summary b_true=" + format_real(sum.b_true) + " mean_b=" + format_real(sum.mean_b) +
         " mean_sigma=" + format_real(sum.mean_sigma) + " spread=" + format_real(sum.spread) +
         " standard_error=" + format_real(se) + " coverage=" + format_real(sum.coverage) +
         " mean_significance=" + format_real(stats::significance({sum.mean_b, sum.mean_sigma})) + "\n";
    emit(o, o.out, s, out, err);
    return kExitOk;
}

}  // namespace detail

inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err);

namespace detail {

inline std::vector<std::string> replay_args(const Options& o) {
    std::ifstream f(o.replay_file);
    if (!f) throw IoError("cannot read '" + o.replay_file + "'");
    const Manifest m = Manifest::parse(f);
    const auto sub = m.get("subcommand");
    if (!sub) throw UsageError("replay: manifest has no subcommand");
    std::vector<std::string> args{kToolName, *sub};
    for (const auto& [key, value] : m.entries()) {
        if (key == "subcommand" || key == "panel" || key == "version") continue;
        if (value == "true") {
            args.push_back("--" + key);
        } else if (value != "false") {
            args.push_back("--" + key + "=" + value);
        }
    }
    if (*sub == "fig2") {
        args.push_back("--out-prefix=" + o.out_prefix);
    } else if (!o.out.empty()) {
        args.push_back("--out=" + o.out);
    }
    if (o.quiet) args.push_back("--quiet");
    return args;
}

}  // namespace detail

/// Parses and runs one invocation. Returns the process exit code.
inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Leggett-Garg / weak-value simulator for the photonic three-measurement experiment", kToolName};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--out", o.out, "Output CSV path ('-' or empty for stdout)");
    app.add_option("--out-prefix", o.out_prefix, "Prefix for the two fig2 files (<prefix>_a.csv, <prefix>_b.csv)");
    app.add_option("--seed", o.seed, "Master seed");
    app.add_flag("--quiet", o.quiet, "No progress messages");
    app.add_flag("--degrees", o.degrees, "Report theta in degrees");

    auto add_model = [&](CLI::App* sc) {
        sc->add_option("--gate", o.gate, "ideal | ppbs");
        sc->add_option("--visibility", o.visibility, "Photon mode overlap xi for --gate ppbs");
        sc->add_flag("--raw-correlator", o.raw_correlator, "Do not divide <S1 S2> by K");
    };

    auto* sweep = app.add_subcommand("sweep", "B and weak value over theta in [0, 2pi]");
    sweep->add_option("--k", o.k, "Measurement strength K");
    sweep->add_option("--theta-steps", o.theta_steps, "Grid points (>= 2)");
    sweep->add_option("--mb-sign", o.mb_sign, "+ for Mb = S1, - for Mb = -S1");
    add_model(sweep);

    auto* fig2 = app.add_subcommand("fig2", "Both Mb sign conventions at one K");
    fig2->add_option("--k", o.k, "Measurement strength K");
    fig2->add_option("--theta-steps", o.theta_steps, "Grid points (>= 2)");
    add_model(fig2);

    auto* fig3 = app.add_subcommand("fig3", "B(theta) for several K plus the zero-strength limit");
    fig3->add_option("--k-list", o.k_list, "Comma-separated K values");
    fig3->add_option("--theta-steps", o.theta_steps, "Grid points (>= 2)");
    fig3->add_option("--mb-sign", o.mb_sign, "+ or -");
    add_model(fig3);

    auto* gate = app.add_subcommand("gate", "Heralded gate success, process fidelity and B_max");
    gate->add_option("--visibility", o.visibility, "Photon mode overlap xi in [0, 1]");
    gate->add_option("--k", o.k, "Strength at which B_max is reported");

    auto* mc = app.add_subcommand("mc", "Monte Carlo coincidence counting with Poisson error bars");
    mc->add_option("--k", o.k, "Measurement strength K");
    mc->add_option("--theta", o.theta, "Input state angle (radians)");
    mc->add_option("--pairs", o.pairs, "Coincidences per trial");
    mc->add_option("--trials", o.trials, "Number of trials");
    mc->add_option("--mb-sign", o.mb_sign, "+ or -");
    add_model(mc);

    auto* replay = app.add_subcommand("replay", "Re-run the manifest embedded in a CSV");
    replay->add_option("file", o.replay_file, "CSV written by this tool")->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*sweep) return detail::cmd_sweep(o, out, err);
        if (*fig2) return detail::cmd_fig2(o, out, err);
        if (*fig3) return detail::cmd_fig3(o, out, err);
        if (*gate) return detail::cmd_gate(o, out, err);
        if (*mc) return detail::cmd_mc(o, out, err);
        if (*replay) return run(detail::replay_args(o), out, err);
    } catch (const UsageError& e) {
        err << kToolName << ": usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const InvalidArgument& e) {
        err << kToolName << ": usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << kToolName << ": error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    return run(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace lgsim::cli
