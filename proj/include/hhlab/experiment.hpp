#pragma once

#include <openssl/evp.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "json.hpp"

#include "hhlab/asymptotics.hpp"
#include "hhlab/duhamel.hpp"
#include "hhlab/exponents.hpp"
#include "hhlab/heat_kernel.hpp"
#include "hhlab/lorentz.hpp"
#include "hhlab/selfsimilar.hpp"

namespace hhlab {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

/// Raised for anything wrong with a config; `key` names the offending entry.
struct ConfigError : std::runtime_error {
    std::string key;
    ConfigError(std::string k, const std::string& what) : std::runtime_error(k + ": " + what), key(std::move(k)) {}
};

enum ExitCode { exit_ok = 0, exit_inconsistent = 2, exit_divergence = 3, exit_config = 4 };

// ---------------------------------------------------------------------------
// Config: flat `key = value` lines, `#` comments, dotted sections.

struct GridSpec {
    double r_min = 1e-3, r_max = 1e3;
    int nodes = 512;
};

struct DataSpec {
    std::string kind = "homogeneous";  ///< homogeneous | gaussian | mixed_complex | steady_state
    std::optional<Num> sigma, sigma2;
    double amplitude = 0.05, amplitude2 = 0.0;
    double perturbation = 0.0;  ///< amplitude of an added e^{-r^2}
    double width = 1.0;         ///< Gaussian width for kind = gaussian
};

struct ExperimentConfig {
    std::string name = "experiment";
    ModelParams model;
    GridSpec grid;
    SolverConfig solver;
    DataSpec data;
    std::vector<std::string> checks;
    std::string output_dir = "hhlab_out";
    std::map<std::string, std::string> raw;  ///< every key as written, echoed into the manifest

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = raw.find(key);
        return it == raw.end() ? fallback : it->second;
    }
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    Num get_num(const std::string& key, const Num& fallback) const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep))
        if (!trim(cur).empty()) out.push_back(trim(cur));
    return out;
}

inline double to_double(const std::string& key, const std::string& v) {
    try {
        return Num::parse(v).value();
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
}

}  // namespace detail

inline double ExperimentConfig::get_double(const std::string& key, double fallback) const {
    auto it = raw.find(key);
    return it == raw.end() ? fallback : detail::to_double(key, it->second);
}
inline int ExperimentConfig::get_int(const std::string& key, int fallback) const {
    auto it = raw.find(key);
    if (it == raw.end()) return fallback;
    const double v = detail::to_double(key, it->second);
    if (v != std::floor(v)) throw ConfigError(key, "expected an integer");
    return static_cast<int>(v);
}
inline Num ExperimentConfig::get_num(const std::string& key, const Num& fallback) const {
    auto it = raw.find(key);
    if (it == raw.end()) return fallback;
    try {
        return Num::parse(it->second);
    } catch (const std::exception&) {
        throw ConfigError(key, "expected a number, got '" + it->second + "'");
    }
}

/// "s,q,r" (or "k,p" for a weak index) to a SpaceIndex.
inline SpaceIndex parse_space(const std::string& key, const std::string& text, bool weak) {
    auto parts = detail::split(text, ',');
    try {
        if (weak && parts.size() == 2) return SpaceIndex::weak(Num::parse(parts[0]), Exponent::parse(parts[1]));
        if (parts.size() == 3) return SpaceIndex(Num::parse(parts[0]), Exponent::parse(parts[1]), Exponent::parse(parts[2]));
    } catch (const std::exception& e) {
        throw ConfigError(key, std::string("bad space index: ") + e.what());
    }
    throw ConfigError(key, weak ? "expected 'k,p' or 's,q,r'" : "expected 's,q,r'");
}

inline std::map<std::string, std::string> parse_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no), "expected 'key = value'");
        std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("line " + std::to_string(no), "empty key");
        if (kv.count(key)) throw ConfigError(key, "given twice");
        kv[key] = value;
    }
    return kv;
}

/// The check names the runner knows.
inline const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {
        "semigroup",          "smoothing",         "steady_state",  "wellposed_contraction", "blowup",
        "self_similarity",    "upgrade",           "nonlinear_behavior", "linear_behavior", "stability",
        "complex_case3",      "complex_case4",     "nonexistence",  "theta_feasibility"};
    return names;
}

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig c;
    c.raw = parse_key_values(in);
    static const std::set<std::string> top = {"name", "model", "grid", "time", "solver", "data", "checks",
                                              "output_dir", "check"};
    for (auto& [k, v] : c.raw) {
        const std::string head = k.substr(0, k.find('.'));
        if (!top.count(head)) throw ConfigError(k, "unknown key");
    }
    c.name = c.get("name", c.name);
    c.model.d = c.get_int("model.d", c.model.d);
    c.model.gamma = c.get_num("model.gamma", c.model.gamma);
    c.model.alpha = c.get_num("model.alpha", c.model.alpha);
    c.model.a = c.get_int("model.a", c.model.a);
    c.grid.r_min = c.get_double("grid.r_min", c.grid.r_min);
    c.grid.r_max = c.get_double("grid.r_max", c.grid.r_max);
    c.grid.nodes = c.get_int("grid.nodes", c.grid.nodes);
    c.solver.T = c.get_double("time.T", c.solver.T);
    c.solver.n_time = c.get_int("time.n_time", c.solver.n_time);
    c.solver.grading = c.get_double("time.grading", c.solver.grading);
    c.solver.picard_tol = c.get_double("solver.picard_tol", c.solver.picard_tol);
    c.solver.max_iters = c.get_int("solver.max_iters", c.solver.max_iters);
    c.solver.ceiling = c.get_double("solver.ceiling", c.solver.ceiling);
    c.solver.m_multiple = c.get_double("solver.m_multiple", c.solver.m_multiple);
    if (c.raw.count("solver.kato")) c.solver.kato_index = parse_space("solver.kato", c.raw["solver.kato"], true);
    c.data.kind = c.get("data.kind", c.data.kind);
    if (c.raw.count("data.sigma")) c.data.sigma = c.get_num("data.sigma", Num(0));
    if (c.raw.count("data.sigma2")) c.data.sigma2 = c.get_num("data.sigma2", Num(0));
    c.data.amplitude = c.get_double("data.amplitude", c.data.amplitude);
    c.data.amplitude2 = c.get_double("data.amplitude2", c.data.amplitude2);
    c.data.perturbation = c.get_double("data.perturbation", c.data.perturbation);
    c.data.width = c.get_double("data.width", c.data.width);
    c.checks = detail::split(c.get("checks", ""), ',');
    c.output_dir = c.get("output_dir", c.output_dir);
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    return parse_config(in);
}

// ---------------------------------------------------------------------------
// Validation: everything that can be decided before a solve starts.

namespace detail {

inline void require_admissible(const std::string& key, const AdmissibilityReport& rep) {
    if (!rep.admissible()) throw ConfigError(key, "violates " + rep.summary());
}

inline Num data_sigma(const ExperimentConfig& c) { return c.data.sigma.value_or(c.model.critical_decay()); }

}  // namespace detail

inline void validate_config(const ExperimentConfig& c) {
    const auto& m = c.model;
    try {
        m.validate();
    } catch (const std::exception& e) {
        throw ConfigError("model", e.what());
    }
    if (!(c.grid.r_min > 0.0 && c.grid.r_max > c.grid.r_min)) throw ConfigError("grid.r_min", "need 0 < r_min < r_max");
    if (c.grid.nodes < 64) throw ConfigError("grid.nodes", "need at least 64 nodes");
    try {
        c.solver.validate(*RadialGrid::logarithmic(m.d, c.grid.r_min, c.grid.r_max, 8));
    } catch (const std::exception& e) {
        throw ConfigError("time", e.what());
    }
    static const std::set<std::string> kinds = {"homogeneous", "gaussian", "mixed_complex", "steady_state"};
    if (!kinds.count(c.data.kind)) throw ConfigError("data.kind", "unknown data kind '" + c.data.kind + "'");
    for (const auto& name : c.checks)
        if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end())
            throw ConfigError("checks", "unknown check '" + name + "'");

    auto uses = [&](const char* n) { return std::find(c.checks.begin(), c.checks.end(), n) != c.checks.end(); };
    const bool solves = uses("wellposed_contraction") || uses("blowup") || uses("self_similarity") || uses("upgrade") ||
                        uses("nonlinear_behavior") || uses("linear_behavior") || uses("stability") ||
                        uses("complex_case3") || uses("complex_case4");
    if (solves) {
        if (!m.potential_ok()) throw ConfigError("model.gamma", "violates params.gamma_gt_minus_min_2_d");
        if (c.raw.count("data.space"))
            detail::require_admissible("solver.kato",
                                       admissible_wellposed_pair(m, parse_space("data.space", c.raw.at("data.space"), false),
                                                                 c.solver.kato_index));
        else
            detail::require_admissible("solver.kato", source_pair_conditions(m, c.solver.kato_index));
    }
    if (c.data.kind == "homogeneous" || c.data.kind == "mixed_complex") {
        const Num s = detail::data_sigma(c);
        if (!(s > Num(0) && s < Num(m.d))) throw ConfigError("data.sigma", "need 0 < sigma < d");
    }
    if (uses("steady_state") || c.data.kind == "steady_state") {
        try {
            singular_steady_state(m);
        } catch (const std::exception& e) {
            throw ConfigError("model", e.what());
        }
    }
    if (uses("nonlinear_behavior")) {
        const auto t = parse_space("check.nonlinear_behavior.target", c.get("check.nonlinear_behavior.target", "0,inf"), true);
        detail::require_admissible("check.nonlinear_behavior.target", target_pair_conditions(m, c.solver.kato_index, t));
    }
    if (uses("linear_behavior")) {
        const auto t = parse_space("check.linear_behavior.target", c.get("check.linear_behavior.target", "0,inf"), true);
        auto hyp = linear_behavior_conditions(m, detail::data_sigma(c), c.solver.kato_index);
        hyp.merge(target_pair_conditions(m, c.solver.kato_index, t));
        detail::require_admissible("check.linear_behavior", hyp);
    }
    if (uses("upgrade")) {
        const auto to = parse_space("check.upgrade.to", c.get("check.upgrade.to", "0,inf"), true);
        detail::require_admissible("check.upgrade.to", upgrade_pair_conditions(m, c.solver.kato_index, to));
    }
    if (uses("smoothing")) {
        const auto from = parse_space("check.smoothing.from", c.get("check.smoothing.from", "0,1,1"), false);
        const auto to = parse_space("check.smoothing.to", c.get("check.smoothing.to", "0,inf,inf"), false);
        detail::require_admissible("check.smoothing", smoothing_pair_conditions(m.d, from, to));
    }
    if (uses("complex_case3") || uses("complex_case4")) {
        if (c.data.kind != "mixed_complex") throw ConfigError("data.kind", "complex checks need mixed_complex data");
        if (!c.data.sigma2) throw ConfigError("data.sigma2", "complex checks need a second decay rate");
    }
    if (uses("stability")) {
        const auto lq = parse_space("check.stability.space", c.get("check.stability.space", ""), false);
        if (lq.r.is_inf()) throw ConfigError("check.stability.space", "needs r < inf");
    }
    if (uses("nonexistence")) {
        const auto lq = parse_space("check.nonexistence.space", c.get("check.nonexistence.space", ""), false);
        if (!(m.alpha > fujita_exponent(m))) throw ConfigError("model.alpha", "nonexistence needs alpha above the Fujita exponent");
        if (classify_pair(m, lq).cls != Criticality::supercritical)
            throw ConfigError("check.nonexistence.space", "needs a supercritical (l,q)");
        auto [lo, hi] = nonexistence_kappa_window(m, lq);
        const Num kappa = c.get_num("check.nonexistence.kappa", (lo + hi) / Num(2));
        if (kappa < lo || kappa > hi) throw ConfigError("check.nonexistence.kappa", "outside the window (" + lo.str() + ", " + hi.str() + ")");
    }
    if (uses("theta_feasibility")) {
        const Num s = detail::data_sigma(c);
        if (!(Num(m.d) * critical_inverse_q(m) < s && s < Num(m.d)))
            throw ConfigError("data.sigma", "theta feasibility needs d/q_c < sigma < d");
    }
}

// ---------------------------------------------------------------------------
// Check results and bundle output

struct Track {
    std::string name;
    std::vector<double> t, value, predicted;
};

struct CheckResult {
    std::string name;
    FitVerdict verdict = FitVerdict::inconclusive;
    bool diverged = false;  ///< a solve diverged where convergence was expected
    json report;
    std::vector<Track> tracks;
};

namespace detail {

inline json fit_json(const DecayFit& f) {
    return json{{"predicted_slope", f.predicted_slope}, {"measured_slope", f.slope}, {"r2", f.r_squared},
                {"window", {f.t_min, f.t_max}},        {"samples", f.samples},      {"verdict", to_string(f.verdict)}};
}

inline json params_json(const ModelParams& m) {
    return json{{"d", m.d}, {"gamma", m.gamma.str()}, {"alpha", m.alpha.str()}, {"a", m.a}};
}

inline Track power_track(const std::string& name, const std::vector<double>& t, const std::vector<double>& v,
                         double slope, double anchor_t) {
    Track tr{name, t, v, {}};
    double anchor = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j)
        if (std::fabs(t[j] - anchor_t) <= 1e-12 * anchor_t) anchor = v[j] / std::pow(t[j], slope);
    for (double s : t) tr.predicted.push_back(anchor * std::pow(s, slope));
    return tr;
}

inline Track plain_track(const std::string& name, const std::vector<double>& t, const std::vector<double>& v) {
    return Track{name, t, v, std::vector<double>(t.size(), std::nan(""))};
}

inline json comparison_json(const ComparisonReport& r) {
    json j{{"label", r.label},
           {"space", r.idx.str()},
           {"base", fit_json(r.base_fit)},
           {"two_sided_constant", r.two_sided_constant},
           {"identical", r.identical},
           {"delta_min", r.delta_min},
           {"verdict", to_string(r.verdict())}};
    if (r.identical) j["delta"] = "inf";
    else {
        j["delta"] = r.delta;
        j["excess"] = fit_json(r.excess_decay);
    }
    return j;
}

inline std::vector<Track> comparison_tracks(const std::string& prefix, const ComparisonReport& r) {
    return {power_track(prefix + "base", r.times, r.base_track, r.base_fit.predicted_slope, r.t_max),
            plain_track(prefix + "difference", r.times, r.norm_track)};
}

inline json trajectory_json(const Trajectory& tr) {
    return json{{"iterations", tr.iterations_used},         {"converged", tr.converged},
                {"diverged", tr.diverged},                  {"contraction_ratios", tr.contraction_ratios},
                {"relative_increments", tr.distances},      {"linear_auxiliary_norm", tr.linear_kato_norm},
                {"grading_starved", tr.grading_starved}};
}

}  // namespace detail

inline std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 14];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

inline void write_track_csv(const Track& tr, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "t,value,predicted\n";
    for (std::size_t j = 0; j < tr.t.size(); ++j)
        out << format_double(tr.t[j]) << ',' << format_double(tr.value[j]) << ','
            << (std::isnan(tr.predicted[j]) ? std::string("nan") : format_double(tr.predicted[j])) << '\n';
}

/// Directory of snapshot CSVs plus trajectory.json {times, norms, contraction_ratios, converged}.
inline std::vector<std::string> export_trajectory(const Trajectory& tr, const std::string& dir) {
    fs::create_directories(dir);
    std::vector<std::string> files;
    for (std::size_t j = 0; j < tr.size(); ++j) {
        const std::string p = fmt::format("{}/snapshot_{:04d}.csv", dir, j);
        write_snapshot_csv(tr.snapshots[j], p);
        files.push_back(p);
    }
    json norms = json::object();
    for (auto& [k, v] : tr.recorded_norms) norms[k] = v;
    json j{{"times", tr.times}, {"norms", norms}, {"contraction_ratios", tr.contraction_ratios}, {"converged", tr.converged}};
    const std::string p = dir + "/trajectory.json";
    std::ofstream(p) << j.dump(2) << '\n';
    files.push_back(p);
    return files;
}

// ---------------------------------------------------------------------------
// The checks

struct RunContext {
    const ExperimentConfig& cfg;
    GridPtr grid;
    SemigroupCache& cache;
};

namespace detail {

inline RadialField gaussian_bump(const GridPtr& g, double amplitude, double width = 1.0) {
    return RadialField::sample(g, [&](double r) { return amplitude * std::exp(-(r * r) / (width * width)); });
}

/// Initial data from the [data] section (first component for mixed_complex).
inline RadialField build_data(const RunContext& ctx) {
    const auto& c = ctx.cfg;
    const auto& d = c.data;
    if (d.kind == "gaussian") return gaussian_bump(ctx.grid, d.amplitude, d.width);
    if (d.kind == "steady_state") return steady_state_field(c.model, ctx.grid);
    RadialField f = homogeneous_data(d.amplitude, data_sigma(c).value(), ctx.grid);
    if (d.perturbation != 0.0) f += gaussian_bump(ctx.grid, d.perturbation);
    return f;
}

inline CheckResult check_semigroup(const RunContext& ctx) {
    CheckResult res{"semigroup"};
    const int d = ctx.cfg.model.d;
    const double tol = ctx.cfg.get_double("check.semigroup.tol", 1e-6);
    double worst = 0.0;
    json cases = json::array();
    for (double s : {0.1, 1.0})
        for (double t : {0.4, 2.0}) {
            RadialField out = apply_semigroup(gaussian_field(ctx.grid, s), t, ctx.cache);
            RadialField exact = gaussian_field(ctx.grid, s + t);
            const double err = (out - exact).max_abs() / exact.max_abs();
            worst = std::max(worst, err);
            cases.push_back({{"s", s}, {"t", t}, {"relative_error", err}});
        }
    res.verdict = worst <= tol ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "heat semigroup law"}, {"dimension", d}, {"cases", cases},
                  {"max_relative_error", worst}, {"tolerance", tol}, {"verdict", to_string(res.verdict)}};
    return res;
}

inline CheckResult check_smoothing(const RunContext& ctx) {
    CheckResult res{"smoothing"};
    const auto& c = ctx.cfg;
    const auto from = parse_space("check.smoothing.from", c.get("check.smoothing.from", "0,1,1"), false);
    const auto to = parse_space("check.smoothing.to", c.get("check.smoothing.to", "0,inf,inf"), false);
    const double t0 = c.get_double("check.smoothing.t_min", 1.0), t1 = c.get_double("check.smoothing.t_max", 100.0);
    const double tol = c.get_double("check.smoothing.rel_tol", 0.02);
    std::vector<double> ts;
    for (int i = 0; i < 16; ++i) ts.push_back(t0 * std::pow(t1 / t0, i / 15.0));
    auto probe = smoothing_estimate_probe(gaussian_field(ctx.grid, 1.0), from, to, ts, tol, ctx.cache);
    res.verdict = probe.fit.verdict;
    res.report = {{"theorem", "weighted smoothing estimate"}, {"from", from.str()}, {"to", to.str()},
                  {"constant", probe.constant}};
    res.report.update(fit_json(probe.fit));
    res.tracks.push_back(power_track("norm", probe.times, probe.norms, probe.fit.predicted_slope, ts.back()));
    return res;
}

inline CheckResult check_steady_state(const RunContext& ctx) {
    CheckResult res{"steady_state"};
    const auto& c = ctx.cfg;
    const double r_lo = c.get_double("check.steady_state.r_min", 1.0), r_hi = c.get_double("check.steady_state.r_max", 10.0);
    const double res_tol = c.get_double("check.steady_state.residual_tol", 1e-6);
    const double sweep_tol = c.get_double("check.steady_state.sweep_tol", 1e-3);
    const auto U = singular_steady_state(c.model);
    const double residual = steady_state_residual(c.model, ctx.grid, r_lo, r_hi);
    RadialField swept = steady_state_sweep(c.model, ctx.grid, c.solver, ctx.cache);
    RadialField exact = steady_state_field(c.model, ctx.grid);
    double err = 0.0, top = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i) {
        const double r = exact.radius(i);
        if (r < r_lo || r > r_hi) continue;
        err = std::max(err, std::abs(swept[i] - exact[i]));
        top = std::max(top, std::abs(exact[i]));
    }
    const double sweep = err / top;
    res.verdict = (residual <= res_tol && sweep <= sweep_tol) ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "singular steady state"}, {"parameters", params_json(c.model)},
                  {"coefficient", U.coefficient},        {"exponent", U.exponent.str()},
                  {"residual", residual},                {"residual_tol", res_tol},
                  {"sweep_relative_error", sweep},       {"sweep_tol", sweep_tol},
                  {"verdict", to_string(res.verdict)}};
    return res;
}

inline CheckResult check_wellposed(const RunContext& ctx) {
    CheckResult res{"wellposed_contraction"};
    const auto& c = ctx.cfg;
    Trajectory tr = picard_iterate(build_data(ctx), c.model, c.solver, ctx.cache);
    const auto small = smallness_report(tr, c.model, c.solver);
    res.diverged = tr.diverged;
    res.verdict = tr.converged ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "local well-posedness by contraction"},
                  {"parameters", params_json(c.model)},
                  {"kato_index", c.solver.kato_index.str()},
                  {"solver", trajectory_json(tr)},
                  {"rho", small.rho},
                  {"M", small.M},
                  {"C0_estimate", small.c0_hat},
                  {"smallness_feasible", small.feasible},
                  {"verdict", to_string(res.verdict)}};
    if (c.raw.count("data.space")) {
        const auto lq = parse_space("data.space", c.raw.at("data.space"), false);
        auto [b1, b2] = contraction_beta_arguments(c.model, lq, c.solver.kato_index);
        res.report["beta_arguments"] = {b1.str(), b2.str()};
        if (b1 > Num(0) && b2 > Num(0)) res.report["beta_value"] = beta_function(b1.value(), b2.value());
    }
    std::vector<double> it;
    for (std::size_t i = 0; i < tr.contraction_ratios.size(); ++i) it.push_back(double(i + 2));
    res.tracks.push_back(plain_track("contraction_ratio", it, tr.contraction_ratios));
    return res;
}

inline CheckResult check_blowup(const RunContext& ctx) {
    CheckResult res{"blowup"};
    const auto& c = ctx.cfg;
    const bool expect = c.get("check.blowup.expect", "true") == "true";
    Trajectory tr = picard_iterate(build_data(ctx), c.model, c.solver, ctx.cache);
    auto rep = blowup_monitor(tr, c.model, c.solver.kato_index, c.solver.ceiling);
    res.diverged = tr.diverged && !expect;
    res.verdict = rep.blew_up == expect ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "blow-up criterion"},
                  {"parameters", params_json(c.model)},
                  {"expect_blowup", expect},
                  {"blew_up", rep.blew_up},
                  {"crossing_time", rep.blew_up ? json(rep.crossing_time) : json(nullptr)},
                  {"max_weighted_norm", std::isfinite(rep.max_weighted_norm) ? json(rep.max_weighted_norm) : json("inf")},
                  {"solver", trajectory_json(tr)},
                  {"verdict", to_string(res.verdict)}};
    res.tracks.push_back(plain_track("weighted_norm", tr.times, rep.weighted_norms));
    return res;
}

inline CheckResult check_self_similarity(const RunContext& ctx) {
    CheckResult res{"self_similarity"};
    const auto& c = ctx.cfg;
    const auto idx = parse_space("check.self_similarity.space", c.get("check.self_similarity.space", "0,inf,inf"), false);
    const double tol = c.get_double("check.self_similarity.tol", 0.02);
    const double y_lo = c.get_double("check.self_similarity.y_min", 0.1), y_hi = c.get_double("check.self_similarity.y_max", 10.0);
    Trajectory tr;
    try {
        tr = construct_self_similar(c.model, c.data.amplitude, ctx.grid, c.solver, ctx.cache);
    } catch (const std::runtime_error&) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "forward self-similar solution"}, {"error", "solver divergence"}};
        return res;
    }
    const double sigma = c.model.critical_decay().value();
    const double T = c.solver.T;
    const auto p0 = profile_extract(tr, T / 16.0, sigma), p1 = profile_extract(tr, T, sigma);
    const double dev = invariance_deviation(p1, p0, idx, y_lo, y_hi);
    const double last_ratio = tr.contraction_ratios.empty() ? 0.0 : tr.contraction_ratios.back();
    res.verdict = (tr.converged && last_ratio < 1.0 && dev < tol) ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "forward self-similar solution"},
                  {"parameters", params_json(c.model)},
                  {"omega", c.data.amplitude},
                  {"solver", trajectory_json(tr)},
                  {"invariance_deviation", dev},
                  {"tolerance", tol},
                  {"window", {y_lo, y_hi}},
                  {"times", {T / 16.0, T}},
                  {"verdict", to_string(res.verdict)}};
    if (int steps = c.get_int("check.self_similarity.bisect", 0); steps > 0) {
        auto th = smallness_threshold(c.model, ctx.grid, c.solver, c.get_double("check.self_similarity.omega_hi", 2.0),
                                      steps, ctx.cache);
        res.report["threshold"] = {{"converged_omega", th.converged_omega}, {"diverged_omega", th.diverged_omega},
                                   {"solves", th.solves}};
    }
    auto pairings = gaussian_pairings(tr);
    for (std::size_t i = 0; i < pairings.size(); ++i)
        res.tracks.push_back(plain_track(fmt::format("pairing_{}", i), tr.times, pairings[i]));
    return res;
}

inline CheckResult check_upgrade(const RunContext& ctx) {
    CheckResult res{"upgrade"};
    const auto& c = ctx.cfg;
    const auto to = parse_space("check.upgrade.to", c.get("check.upgrade.to", "0,inf"), true);
    const double tol = c.get_double("check.upgrade.slope_tol", 0.02);
    Trajectory tr = picard_iterate(build_data(ctx), c.model, c.solver, ctx.cache);
    if (tr.diverged) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "upgrade of regularity"}, {"error", "solver divergence"}};
        return res;
    }
    auto up = regularity_upgrade_probe(tr, c.model, c.solver.kato_index, to);
    // a scale-invariant solution keeps the weighted norm flat; judge the slope, not r^2
    const double t0 = c.solver.T / 16.0;
    auto fit = decay_slope_fit(tr.times, up.weighted, t0, c.solver.T, 0.0, tol, true);
    const bool flat = std::isfinite(up.sup) && std::fabs(fit.slope) <= tol;
    res.verdict = flat ? FitVerdict::consistent : FitVerdict::inconsistent;
    res.report = {{"theorem", "upgrade of regularity"}, {"from", c.solver.kato_index.str()}, {"to", to.str()},
                  {"sup", up.sup}, {"predicted_slope", 0.0}, {"measured_slope", fit.slope},
                  {"r2", fit.r_squared}, {"slope_tol", tol}, {"verdict", to_string(res.verdict)}};
    res.tracks.push_back(plain_track("weighted", tr.times, up.weighted));
    return res;
}

inline CheckResult check_nonlinear_behavior(const RunContext& ctx) {
    CheckResult res{"nonlinear_behavior"};
    const auto& c = ctx.cfg;
    const auto tkp = parse_space("check.nonlinear_behavior.target", c.get("check.nonlinear_behavior.target", "0,inf"), true);
    const double rel = c.get_double("check.nonlinear_behavior.rel_tol", 0.05);
    const double dmin = c.get_double("check.nonlinear_behavior.delta_min", kDefaultDeltaMin);
    try {
        auto run = nonlinear_behavior_check(c.model, tkp, c.data.amplitude, gaussian_bump(ctx.grid, c.data.perturbation),
                                            c.solver, rel, dmin, ctx.cache);
        res.verdict = run.report.verdict();
        res.report = {{"theorem", "nonlinear large-time behavior"}, {"parameters", params_json(c.model)}};
        res.report.update(comparison_json(run.report));
        res.report["solver"] = trajectory_json(run.solution);
        res.tracks = comparison_tracks("", run.report);
    } catch (const std::runtime_error& e) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "nonlinear large-time behavior"}, {"error", e.what()}};
    }
    return res;
}

inline CheckResult check_linear_behavior(const RunContext& ctx) {
    CheckResult res{"linear_behavior"};
    const auto& c = ctx.cfg;
    const auto tkp = parse_space("check.linear_behavior.target", c.get("check.linear_behavior.target", "0,inf"), true);
    const double rel = c.get_double("check.linear_behavior.rel_tol", 0.05);
    // only a positive excess is asked for here
    const double dmin = c.get_double("check.linear_behavior.delta_min", 0.0);
    try {
        auto run = linear_behavior_check(c.model, data_sigma(c), tkp, c.data.amplitude,
                                         gaussian_bump(ctx.grid, c.data.perturbation), c.solver, rel, dmin, ctx.cache);
        res.verdict = run.report.verdict();
        res.report = {{"theorem", "linear large-time behavior"}, {"parameters", params_json(c.model)},
                      {"sigma", data_sigma(c).str()}};
        res.report.update(comparison_json(run.report));
        res.tracks = comparison_tracks("", run.report);
    } catch (const std::runtime_error& e) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "linear large-time behavior"}, {"error", e.what()}};
    }
    return res;
}

inline CheckResult check_stability(const RunContext& ctx) {
    CheckResult res{"stability"};
    const auto& c = ctx.cfg;
    const auto lq = parse_space("check.stability.space", c.get("check.stability.space", ""), false);
    const double bump = c.get_double("check.stability.bump", 0.02);
    const double radius = c.get_double("check.stability.bump_radius", 1.0);
    const double frac = c.get_double("check.stability.max_fraction", 0.1);
    RadialField phi = build_data(ctx);
    RadialField psi = phi;
    psi += RadialField::sample(ctx.grid, [&](double r) {
        const double x = r / radius;
        return x < 1.0 ? bump * (1 - x * x) * (1 - x * x) : 0.0;
    });
    try {
        auto rep = stability_check(c.model, lq, phi, psi, c.solver, ctx.cache);
        res.verdict = rep.holds(frac) ? FitVerdict::consistent : FitVerdict::inconsistent;
        res.report = {{"theorem", "asymptotic stability"},
                      {"parameters", params_json(c.model)},
                      {"space", lq.str()},
                      {"kato_index", c.solver.kato_index.str()},
                      {"monotone_last_decade", rep.monotone_last_decade},
                      {"final_fraction", rep.final_fraction},
                      {"max_fraction", frac},
                      {"final_plain_difference", rep.plain_track.back()},
                      {"final_data_flow", rep.data_flow_track.back()},
                      {"verdict", to_string(res.verdict)}};
        res.tracks = {plain_track("weighted_difference", rep.times, rep.weighted_track),
                      plain_track("plain_difference", rep.times, rep.plain_track),
                      plain_track("data_flow", rep.times, rep.data_flow_track)};
    } catch (const std::runtime_error& e) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "asymptotic stability"}, {"error", e.what()}};
    }
    return res;
}

inline CheckResult check_complex(const RunContext& ctx, ComplexCase which) {
    const bool c3 = which == ComplexCase::case3;
    CheckResult res{c3 ? "complex_case3" : "complex_case4"};
    const auto& c = ctx.cfg;
    const std::string pre = "check." + res.name + ".";
    const auto tkp = parse_space(pre + "target", c.get(pre + "target", "0,inf"), true);
    const auto tk0 = parse_space(pre + "target_driven", c.get(pre + "target_driven", "0,inf"), true);
    const double dmin = c.get_double(pre + "delta_min", kDefaultDeltaMin);
    const Num s1 = data_sigma(c), s2 = *c.data.sigma2;
    try {
        auto run = complex_combined_check(c.model, s1, s2, c.data.amplitude, c.data.amplitude2,
                                          gaussian_bump(ctx.grid, c.data.perturbation), tkp, tk0, c.solver, which,
                                          c.get_double(pre + "rel_tol", 0.05), dmin, ctx.cache);
        // only the excess decay is asserted; base slopes are reported
        auto excess = [](const ComparisonReport& r) { return r.excess_verdict; };
        const FitVerdict a = excess(run.driving), b = excess(run.driven);
        res.verdict = (a == FitVerdict::inconsistent || b == FitVerdict::inconsistent) ? FitVerdict::inconsistent
                      : (a == FitVerdict::inconclusive || b == FitVerdict::inconclusive) ? FitVerdict::inconclusive
                                                                                          : FitVerdict::consistent;
        res.report = {{"theorem", "combined nonlinear and modified linear behavior"},
                      {"parameters", params_json(c.model)},
                      {"sigma", {s1.str(), s2.str()}},
                      {"omega", {c.data.amplitude, c.data.amplitude2}},
                      {"driving", comparison_json(run.driving)},
                      {"driven", comparison_json(run.driven)},
                      {"verdict", to_string(res.verdict)}};
        for (auto& t : comparison_tracks("driving_", run.driving)) res.tracks.push_back(t);
        for (auto& t : comparison_tracks("driven_", run.driven)) res.tracks.push_back(t);
    } catch (const std::runtime_error& e) {
        res.diverged = true;
        res.verdict = FitVerdict::inconsistent;
        res.report = {{"theorem", "combined nonlinear and modified linear behavior"}, {"error", e.what()}};
    }
    return res;
}

inline CheckResult check_nonexistence(const RunContext& ctx) {
    CheckResult res{"nonexistence"};
    const auto& c = ctx.cfg;
    const auto lq = parse_space("check.nonexistence.space", c.get("check.nonexistence.space", ""), false);
    auto [lo, hi] = nonexistence_kappa_window(c.model, lq);
    const Num kappa = c.get_num("check.nonexistence.kappa", (lo + hi) / Num(2));
    const double t_lo = c.get_double("check.nonexistence.tau_min", 1e-12);
    const double t_hi = c.get_double("check.nonexistence.tau_max", 1e-4);
    std::vector<double> taus;
    for (int i = 0; i <= 32; ++i) taus.push_back(t_lo * std::pow(t_hi / t_lo, i / 32.0));
    auto rep = nonexistence_certificate(c.model, lq, kappa, taus, c.get_double("check.nonexistence.C", 1.0));
    res.verdict = rep.verdict;
    res.report = {{"theorem", "nonexistence of local positive weak solutions"},
                  {"parameters", params_json(c.model)},
                  {"space", lq.str()},
                  {"kappa_window", {rep.kappa_lo.str(), rep.kappa_hi.str()}},
                  {"kappa", rep.kappa.str()},
                  {"exponent", rep.exponent.str()},
                  {"upper_constant", rep.upper_constant},
                  {"certified_below", rep.certified_below},
                  {"verdict", to_string(res.verdict)}};
    res.tracks = {Track{"bounds", rep.taus, rep.lower, rep.upper}};
    return res;
}

inline json interval_json(const ThetaInterval& iv) {
    return json{{"nonempty", iv.nonempty},
                {"lower", iv.lower.str()},
                {"upper", iv.upper.str()},
                {"lower_closed", iv.lower_closed},
                {"upper_closed", iv.upper_closed},
                {"binding", iv.binding_constraints}};
}

inline CheckResult check_theta(const RunContext& ctx) {
    CheckResult res{"theta_feasibility"};
    const auto& c = ctx.cfg;
    const auto k0p0 = parse_space("check.theta_feasibility.decay", c.get("check.theta_feasibility.decay", ""), true);
    const Num sigma = data_sigma(c);
    auto iv = theta_interval_linear(c.model, c.solver.kato_index, k0p0, sigma);
    res.report = {{"theorem", "interpolation parameter feasibility"},
                  {"parameters", params_json(c.model)},
                  {"sigma", sigma.str()},
                  {"linear", interval_json(iv)}};
    for (ThetaKind w : {ThetaKind::t11, ThetaKind::t12, ThetaKind::t21})
        res.report[to_string(w)] = interval_json(theta_interval_complex(c.model, c.solver.kato_index, k0p0, sigma, w));
    res.verdict = iv.nonempty ? FitVerdict::consistent : FitVerdict::inconsistent;
    if (c.raw.count("check.theta_feasibility.expect")) {
        auto parts = split(c.raw.at("check.theta_feasibility.expect"), ',');
        const bool match = parts.size() == 2 && iv.nonempty && iv.lower == Num::parse(parts[0]) &&
                           iv.upper == Num::parse(parts[1]);
        res.report["expected"] = c.raw.at("check.theta_feasibility.expect");
        res.verdict = match ? FitVerdict::consistent : FitVerdict::inconsistent;
    }
    res.report["verdict"] = to_string(res.verdict);
    return res;
}

}  // namespace detail

inline CheckResult run_check(const std::string& name, const RunContext& ctx) {
    using namespace detail;
    static const std::map<std::string, std::function<CheckResult(const RunContext&)>> table = {
        {"semigroup", check_semigroup},
        {"smoothing", check_smoothing},
        {"steady_state", check_steady_state},
        {"wellposed_contraction", check_wellposed},
        {"blowup", check_blowup},
        {"self_similarity", check_self_similarity},
        {"upgrade", check_upgrade},
        {"nonlinear_behavior", check_nonlinear_behavior},
        {"linear_behavior", check_linear_behavior},
        {"stability", check_stability},
        {"complex_case3", [](const RunContext& c) { return check_complex(c, ComplexCase::case3); }},
        {"complex_case4", [](const RunContext& c) { return check_complex(c, ComplexCase::case4); }},
        {"nonexistence", check_nonexistence},
        {"theta_feasibility", check_theta},
    };
    return table.at(name)(ctx);
}

struct ReportBundle {
    std::string directory;
    json manifest;
    std::vector<CheckResult> results;
    int exit_code = exit_ok;
};

/// Output directory: HHLAB_OUTPUT_DIR overrides the config.
inline std::string resolve_output_dir(const ExperimentConfig& cfg) {
    if (const char* env = std::getenv("HHLAB_OUTPUT_DIR"); env && *env) return env;
    return cfg.output_dir;
}

inline ReportBundle run_experiment(const ExperimentConfig& cfg, SemigroupCache& cache = default_semigroup_cache()) {
    validate_config(cfg);
    ReportBundle bundle;
    bundle.directory = resolve_output_dir(cfg) + "/" + cfg.name;
    fs::create_directories(bundle.directory + "/reports");
    fs::create_directories(bundle.directory + "/tracks");
    RunContext ctx{cfg, RadialGrid::logarithmic(cfg.model.d, cfg.grid.r_min, cfg.grid.r_max, cfg.grid.nodes), cache};

    std::vector<std::string> files;
    bool inconsistent = false, diverged = false;
    for (const auto& name : cfg.checks) {
        CheckResult r = run_check(name, ctx);
        inconsistent = inconsistent || r.verdict == FitVerdict::inconsistent;
        diverged = diverged || r.diverged;
        const std::string rp = bundle.directory + "/reports/" + name + ".json";
        std::ofstream(rp) << r.report.dump(2) << '\n';
        files.push_back(rp);
        for (const auto& t : r.tracks) {
            const std::string tp = bundle.directory + "/tracks/" + name + "_" + t.name + ".csv";
            write_track_csv(t, tp);
            files.push_back(tp);
        }
        bundle.results.push_back(std::move(r));
    }
    if (cfg.get("solver.export", "false") == "true") {
        Trajectory tr = picard_iterate(detail::build_data(ctx), cfg.model, cfg.solver, cache);
        for (auto& f : export_trajectory(tr, bundle.directory + "/trajectory")) files.push_back(f);
    }
    bundle.exit_code = diverged ? exit_divergence : inconsistent ? exit_inconsistent : exit_ok;

    json echo = json::object();
    for (auto& [k, v] : cfg.raw) echo[k] = v;
    json listed = json::array();
    for (auto& f : files)
        listed.push_back({{"path", fs::relative(f, bundle.directory).string()}, {"sha256", sha256_file(f)}});
    json verdicts = json::object();
    for (auto& r : bundle.results) verdicts[r.name] = to_string(r.verdict);
    bundle.manifest = {{"name", cfg.name},      {"tool", "hhlab"},        {"version", "1.0.0"},
                       {"config", echo},        {"verdicts", verdicts},   {"exit_code", bundle.exit_code},
                       {"files", listed}};
    std::ofstream(bundle.directory + "/manifest.json") << bundle.manifest.dump(2) << '\n';
    return bundle;
}

// ---------------------------------------------------------------------------
// Presets: one config file per scenario in the preset directory.

inline std::string preset_dir() {
    if (const char* env = std::getenv("HHLAB_PRESET_DIR"); env && *env) return env;
#ifdef HHLAB_PRESET_DIR
    return HHLAB_PRESET_DIR;
#else
    return "presets";
#endif
}

inline std::vector<std::string> list_presets(const std::string& dir = preset_dir()) {
    std::vector<std::string> names;
    if (!fs::exists(dir)) return names;
    for (auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".cfg") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    return names;
}

inline std::string preset_path(const std::string& name, const std::string& dir = preset_dir()) {
    const std::string p = dir + "/" + name + ".cfg";
    if (!fs::exists(p)) throw ConfigError("preset", "no preset named '" + name + "'");
    return p;
}

}  // namespace hhlab
