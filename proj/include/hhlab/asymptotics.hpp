#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "hhlab/decay_fit.hpp"
#include "hhlab/duhamel.hpp"
#include "hhlab/exponents.hpp"
#include "hhlab/selfsimilar.hpp"

namespace hhlab {

inline constexpr double kDefaultDeltaMin = 0.05;

/// Start of the default fit window: the last 1.5 decades of the horizon.
inline double fit_window_start(double T) { return T * std::pow(10.0, -1.5); }

struct ComparisonReport {
    std::string label;
    SpaceIndex idx;
    std::vector<double> times;
    std::vector<double> norm_track;  ///< ||u(t) - v(t)||
    std::vector<double> base_track;  ///< ||u(t)||
    double t_min = 0.0, t_max = 0.0;
    DecayFit base_fit;
    DecayFit excess_decay;  ///< fit of norm_track / base_track; slope = -delta
    double delta = 0.0;
    double delta_min = kDefaultDeltaMin;
    FitVerdict excess_verdict = FitVerdict::inconclusive;
    double two_sided_constant = 0.0;  ///< C~ with base / (c t^slope) in [1/C~, C~]
    bool identical = false;           ///< difference track vanishes identically

    FitVerdict verdict() const {
        const FitVerdict b = base_fit.verdict, e = excess_verdict;
        if (b == FitVerdict::inconsistent || e == FitVerdict::inconsistent) return FitVerdict::inconsistent;
        if (b == FitVerdict::inconclusive || e == FitVerdict::inconclusive) return FitVerdict::inconclusive;
        return FitVerdict::consistent;
    }
};

/// Excess-decay verdict: consistent iff delta >= delta_min with r^2 >= 0.99.
inline FitVerdict judge_excess(const DecayFit& f, double delta, double delta_min) {
    if (!(f.r_squared >= 0.9)) return FitVerdict::inconclusive;
    return (delta >= delta_min && f.r_squared >= 0.99) ? FitVerdict::consistent : FitVerdict::inconsistent;
}

/// Tracks ||u - v|| and ||u|| in `idx` on the shared mesh and regresses both
/// over [t_min, t_max]. The base slope tolerance is relative to the prediction.
inline ComparisonReport compare_trajectories(const Trajectory& u, const Trajectory& v, const SpaceIndex& idx,
                                             double t_min, double t_max, double predicted_base, double rel_tol,
                                             double delta_min = kDefaultDeltaMin, bool relaxed = false,
                                             std::string label = "") {
    if (u.times != v.times) throw std::invalid_argument("comparison needs identical time meshes");
    ComparisonReport rep;
    rep.label = std::move(label);
    rep.idx = idx;
    rep.times = u.times;
    rep.t_min = t_min;
    rep.t_max = t_max;
    rep.delta_min = delta_min;
    for (std::size_t j = 0; j < u.size(); ++j) {
        rep.norm_track.push_back(lorentz_quasi_norm(u.snapshots[j] - v.snapshots[j], idx));
        rep.base_track.push_back(lorentz_quasi_norm(u.snapshots[j], idx));
    }
    const double tol = rel_tol * std::fabs(predicted_base);

    bool base_zero = true, diff_zero = true;
    for (std::size_t j = 0; j < rep.times.size(); ++j) {
        if (rep.times[j] < t_min * (1 - 1e-12) || rep.times[j] > t_max * (1 + 1e-12)) continue;
        base_zero = base_zero && rep.base_track[j] == 0.0;
        diff_zero = diff_zero && rep.norm_track[j] == 0.0;
    }
    if (base_zero) {
        // nothing to regress; a vanishing solution tracks any prediction
        rep.base_fit.predicted_slope = predicted_base;
        rep.base_fit.slope_tol = tol;
        rep.base_fit.verdict = FitVerdict::consistent;
    } else {
        rep.base_fit = decay_slope_fit(rep.times, rep.base_track, t_min, t_max, predicted_base, tol, relaxed);
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (std::size_t j = 0; j < rep.times.size(); ++j) {
            if (rep.times[j] < t_min * (1 - 1e-12) || rep.times[j] > t_max * (1 + 1e-12)) continue;
            const double ratio = rep.base_track[j] / std::pow(rep.times[j], predicted_base);
            lo = std::min(lo, ratio);
            hi = std::max(hi, ratio);
        }
        rep.two_sided_constant = std::sqrt(hi / lo);
    }
    if (diff_zero) {
        rep.identical = true;
        rep.delta = std::numeric_limits<double>::infinity();
        rep.excess_verdict = FitVerdict::consistent;
        return rep;
    }
    std::vector<double> ratio(rep.times.size());
    for (std::size_t j = 0; j < ratio.size(); ++j)
        ratio[j] = rep.base_track[j] > 0.0 ? rep.norm_track[j] / rep.base_track[j] : 0.0;
    rep.excess_decay = decay_slope_fit(rep.times, ratio, t_min, t_max, -delta_min, 0.0, relaxed);
    rep.delta = -rep.excess_decay.slope;
    rep.excess_verdict = judge_excess(rep.excess_decay, rep.delta, delta_min);
    rep.excess_decay.verdict = rep.excess_verdict;
    return rep;
}

namespace detail {

inline Trajectory solve_or_throw(const RadialField& phi, const ModelParams& m, const SolverConfig& cfg,
                                 SemigroupCache& cache) {
    Trajectory tr = picard_iterate(phi, m, cfg, cache);
    if (tr.diverged) throw std::runtime_error("solver divergence");
    return tr;
}

inline SolverConfig with_window_times(SolverConfig cfg, std::initializer_list<double> fractions) {
    for (double f : fractions) cfg.extra_times.push_back(cfg.T * f);
    return cfg;
}

/// e^{t Delta} phi on the solver mesh, stepped with the solver's operators.
inline Trajectory linear_flow(const RadialField& phi, const ModelParams& m, const SolverConfig& cfg,
                              SemigroupCache& cache) {
    ModelParams lin = m;
    lin.a = 0;
    return picard_iterate(phi, lin, cfg, cache);
}

}  // namespace detail

struct BehaviorRun {
    ComparisonReport report;
    Trajectory solution;   ///< u from the perturbed data
    Trajectory reference;  ///< u_S or the linear flow
};

/// Critical data Phi = omega |x|^{-(2+gamma)/(alpha-1)} plus `perturbation`:
/// u should track the self-similar u_S, the difference decaying faster.
inline BehaviorRun nonlinear_behavior_check(const ModelParams& m, const SpaceIndex& tkp, double omega,
                                            const RadialField& perturbation, SolverConfig cfg,
                                            double rel_tol = 0.05, double delta_min = kDefaultDeltaMin,
                                            SemigroupCache& cache = default_semigroup_cache()) {
    auto tgt = target_pair_conditions(m, cfg.kato_index, tkp);
    if (!tgt.admissible()) throw std::invalid_argument("target pair not allowed: " + tgt.summary());
    cfg = detail::with_window_times(cfg, {std::pow(10.0, -1.5), 1.0 / 16.0});
    const RadialField Phi = homogeneous_data(omega, m.critical_decay().value(), perturbation.grid());
    RadialField phi = Phi;
    phi += perturbation;
    BehaviorRun run;
    run.reference = detail::solve_or_throw(Phi, m, cfg, cache);
    run.solution = detail::solve_or_throw(phi, m, cfg, cache);
    const SpaceIndex weak = SpaceIndex::weak(tkp.s, tkp.q);
    run.report = compare_trajectories(run.solution, run.reference, weak, fit_window_start(cfg.T), cfg.T,
                                      nonlinear_decay_slope(m, tkp).value(), rel_tol, delta_min, false,
                                      "nonlinear_behavior");
    return run;
}

/// Data decaying like omega |x|^{-sigma} with sigma above the critical decay:
/// u should track the heat flow of Phi_sigma.
inline BehaviorRun linear_behavior_check(const ModelParams& m, const Num& sigma, const SpaceIndex& tkp,
                                         double omega, const RadialField& perturbation, SolverConfig cfg,
                                         double rel_tol = 0.05, double delta_min = kDefaultDeltaMin,
                                         SemigroupCache& cache = default_semigroup_cache()) {
    auto hyp = linear_behavior_conditions(m, sigma, cfg.kato_index);
    hyp.merge(target_pair_conditions(m, cfg.kato_index, tkp));
    auto theta = theta_interval_linear(m, cfg.kato_index, cfg.kato_index, sigma);
    if (!theta.nonempty) hyp.violated.push_back("linear_behavior.theta_window_empty");
    if (!hyp.admissible()) throw std::invalid_argument("linear behavior hypotheses fail: " + hyp.summary());
    cfg = detail::with_window_times(cfg, {std::pow(10.0, -1.5), 1.0 / 16.0});
    const RadialField Phi = homogeneous_data(omega, sigma.value(), perturbation.grid());
    RadialField phi = Phi;
    phi += perturbation;
    BehaviorRun run;
    run.reference = detail::linear_flow(Phi, m, cfg, cache);
    run.solution = detail::solve_or_throw(phi, m, cfg, cache);
    const SpaceIndex weak = SpaceIndex::weak(tkp.s, tkp.q);
    run.report = compare_trajectories(run.solution, run.reference, weak, fit_window_start(cfg.T), cfg.T,
                                      linear_decay_slope(m.d, sigma, tkp).value(), rel_tol, delta_min, false,
                                      "linear_behavior");
    return run;
}

struct StabilityReport {
    std::vector<double> times;
    std::vector<double> data_flow_track;  ///< ||e^{t Delta}(phi - psi)|| in (l,q,r)
    std::vector<double> plain_track;      ///< ||u - v|| in (l,q,r)
    std::vector<double> weighted_track;   ///< t^{beta} ||u - v|| in the weak (k,p) norm
    double window_start = 0.0;            ///< start of the last decade
    bool monotone_last_decade = false;
    double final_fraction = 0.0;  ///< weighted value at T over its value at window_start
    bool identical = false;
    bool holds(double max_fraction) const { return identical || (monotone_last_decade && final_fraction < max_fraction); }
};

/// Solves from phi and psi and measures how the difference dies out.
inline StabilityReport stability_check(const ModelParams& m, const SpaceIndex& lq, const RadialField& phi,
                                       const RadialField& psi, SolverConfig cfg,
                                       SemigroupCache& cache = default_semigroup_cache()) {
    if (lq.r.is_inf()) throw std::invalid_argument("stability is measured in a space with r < inf");
    cfg = detail::with_window_times(cfg, {0.1});
    Trajectory u = detail::solve_or_throw(phi, m, cfg, cache);
    Trajectory v = detail::solve_or_throw(psi, m, cfg, cache);
    Trajectory flow = detail::linear_flow(phi - psi, m, cfg, cache);
    StabilityReport rep;
    rep.times = u.times;
    rep.window_start = 0.1 * cfg.T;
    const SpaceIndex& kp = cfg.kato_index;
    const SpaceIndex weak = SpaceIndex::weak(kp.s, kp.q);
    const double beta = -nonlinear_decay_slope(m, kp).value();
    bool all_zero = true;
    for (std::size_t j = 0; j < u.size(); ++j) {
        RadialField diff = u.snapshots[j] - v.snapshots[j];
        diff.set_singular(std::nullopt);
        rep.data_flow_track.push_back(lorentz_quasi_norm(flow.snapshots[j], lq));
        rep.plain_track.push_back(lorentz_quasi_norm(diff, lq));
        rep.weighted_track.push_back(std::pow(u.times[j], beta) * lorentz_quasi_norm(diff, weak));
        all_zero = all_zero && rep.weighted_track.back() == 0.0;
    }
    rep.identical = all_zero;
    const std::size_t start = u.index_of(rep.window_start);
    rep.monotone_last_decade = true;
    for (std::size_t j = start + 1; j < u.size(); ++j)
        if (!(rep.weighted_track[j] < rep.weighted_track[j - 1])) rep.monotone_last_decade = false;
    rep.final_fraction = rep.weighted_track[start] > 0.0 ? rep.weighted_track.back() / rep.weighted_track[start] : 0.0;
    return rep;
}

enum class ComplexCase { case3, case4 };

struct CombinedRun {
    ComparisonReport driving;  ///< component carrying the critical decay vs its scalar self-similar solution
    ComparisonReport driven;   ///< other component vs the target system's driven component
    Trajectory u1, u2;         ///< full complex solve, split
    Trajectory scalar;         ///< scalar self-similar solution of the driving component
    Trajectory target;         ///< driven component of the target system
};

/// Full complex solve against the triangular target system. In case3 the
/// first component has the critical decay sigma1 and the second decays
/// faster (sigma2); case4 swaps the roles. The driving data may carry a
/// perturbation; windows start at T/16.
inline CombinedRun complex_combined_check(const ModelParams& m, const Num& sigma1, const Num& sigma2, double omega1,
                                          double omega2, const RadialField& perturbation, const SpaceIndex& tkp,
                                          const SpaceIndex& tk0p0, SolverConfig cfg, ComplexCase c,
                                          double rel_tol = 0.05, double delta_min = kDefaultDeltaMin,
                                          SemigroupCache& cache = default_semigroup_cache()) {
    const Num crit = m.critical_decay();
    const bool c3 = c == ComplexCase::case3;
    const Num s_drive = c3 ? sigma1 : sigma2, s_driven = c3 ? sigma2 : sigma1;
    if (s_drive != crit) throw std::invalid_argument("driving component must carry the critical decay");
    if (!(crit < s_driven && s_driven < Num(m.d)))
        throw std::invalid_argument("driven component needs critical decay < sigma < d");
    cfg = detail::with_window_times(cfg, {std::pow(10.0, -1.5), 1.0 / 16.0});
    const GridPtr& grid = perturbation.grid();
    const double w_drive = c3 ? omega1 : omega2, w_driven = c3 ? omega2 : omega1;
    const RadialField Phi_drive = homogeneous_data(w_drive, s_drive.value(), grid);
    const RadialField Phi_driven = homogeneous_data(w_driven, s_driven.value(), grid);
    RadialField drive_data = Phi_drive;
    drive_data += perturbation;

    CombinedRun run;
    const RadialField& phi1 = c3 ? drive_data : Phi_driven;
    const RadialField& phi2 = c3 ? Phi_driven : drive_data;
    auto full = solve_system(phi1, phi2, m, cfg, Coupling::full, cache);
    run.u1 = std::move(full.first);
    run.u2 = std::move(full.second);
    auto target = solve_system(c3 ? Phi_drive : Phi_driven, c3 ? Phi_driven : Phi_drive, m, cfg,
                               c3 ? Coupling::case3 : Coupling::case4, cache);
    run.scalar = c3 ? std::move(target.first) : std::move(target.second);
    run.target = c3 ? std::move(target.second) : std::move(target.first);
    for (const Trajectory* t : {&run.u1, &run.u2, &run.scalar, &run.target})
        if (t->diverged) throw std::runtime_error("solver divergence");

    const Trajectory& u_drive = c3 ? run.u1 : run.u2;
    const Trajectory& u_driven = c3 ? run.u2 : run.u1;
    const double t0 = cfg.T / 16.0;
    run.driving = compare_trajectories(u_drive, run.scalar, SpaceIndex::weak(tkp.s, tkp.q), t0, cfg.T,
                                       nonlinear_decay_slope(m, tkp).value(), rel_tol, delta_min, true,
                                       c3 ? "case3.u1_vs_self_similar" : "case4.u2_vs_self_similar");
    run.driven = compare_trajectories(u_driven, run.target, SpaceIndex::weak(tk0p0.s, tk0p0.q), t0, cfg.T,
                                      linear_decay_slope(m.d, s_driven, tk0p0).value(), rel_tol, delta_min, true,
                                      c3 ? "case3.u2_vs_z2" : "case4.u1_vs_w1");
    return run;
}

// ---------------------------------------------------------------------------
// Nonexistence certificate

struct NonexistenceReport {
    Num kappa_lo, kappa_hi, kappa;
    Num exponent;  ///< (d/2)(l/d + 1/q - 1/q_c) - kappa/2
    double upper_constant = 1.0;
    std::vector<double> taus, lower, upper;
    double certified_below = 0.0;  ///< largest tested tau with lower > upper at it and every smaller tau
    FitVerdict verdict = FitVerdict::inconclusive;
};

namespace detail {

/// |S^{d-1}| int_0^R r^{beta-1} (log(1+r))^kappa dr with r = R v^{1/(beta+kappa)},
/// which turns the integrand into the bounded (log(1+r)/r)^kappa.
inline double obstruction_mass(int d, double beta, double kappa, double R) {
    const double e = beta + kappa;
    const int pieces = 32;
    double acc = 0.0;
    for (int p = 0; p < pieces; ++p) {
        const double a = double(p) / pieces, b = double(p + 1) / pieces;
        for (int i = 0; i < 8; ++i) {
            const double v = 0.5 * (a + b) + 0.5 * (b - a) * gl_x[i];
            const double r = R * std::pow(v, 1.0 / e);
            const double ratio = r > 0.0 ? std::log1p(r) / r : 1.0;
            acc += 0.5 * (b - a) * gl_w[i] * std::pow(ratio, kappa);
        }
    }
    return sphere_area(d) * std::pow(R, e) / e * acc;
}

}  // namespace detail

/// Compares the data mass in the ball of radius sqrt(tau)/2 (lower bound)
/// with C tau^{d/2 - (2+gamma)/(2(alpha-1))} (upper bound) on a tau grid.
inline NonexistenceReport nonexistence_certificate(const ModelParams& m, const SpaceIndex& lq, const Num& kappa,
                                                   std::vector<double> taus, double upper_constant = 1.0) {
    if (!(m.alpha > fujita_exponent(m))) throw std::invalid_argument("certificate needs alpha above the Fujita exponent");
    if (classify_pair(m, lq).cls != Criticality::supercritical)
        throw std::invalid_argument("certificate needs a supercritical (l,q); window is empty otherwise");
    NonexistenceReport rep;
    std::tie(rep.kappa_lo, rep.kappa_hi) = nonexistence_kappa_window(m, lq);
    if (kappa < rep.kappa_lo || kappa > rep.kappa_hi) throw std::invalid_argument("kappa outside its window");
    rep.kappa = kappa;
    rep.exponent = nonexistence_exponent(m, lq, kappa);
    rep.upper_constant = upper_constant;
    std::sort(taus.begin(), taus.end());
    rep.taus = taus;
    const double beta = (Num(m.d) - lq.s - Num(m.d) * lq.q.inverse()).value();
    const double up_exp = (Num::ratio(m.d, 2) - (Num(2) + m.gamma) / (Num(2) * (m.alpha - Num(1)))).value();
    bool running = true;
    for (double tau : taus) {
        if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
        rep.lower.push_back(detail::obstruction_mass(m.d, beta, kappa.value(), 0.5 * std::sqrt(tau)));
        rep.upper.push_back(upper_constant * std::pow(tau, up_exp));
        running = running && rep.lower.back() > rep.upper.back();
        if (running) rep.certified_below = tau;
    }
    const bool on_edge = kappa == rep.kappa_lo || kappa == rep.kappa_hi || rep.exponent.is_zero();
    if (on_edge) rep.verdict = FitVerdict::inconclusive;
    else if (rep.exponent > Num(0) && !taus.empty() && rep.certified_below == taus.back()) rep.verdict = FitVerdict::consistent;
    else rep.verdict = FitVerdict::inconsistent;
    return rep;
}

}  // namespace hhlab
