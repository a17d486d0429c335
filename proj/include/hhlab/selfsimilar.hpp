#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhlab/duhamel.hpp"

namespace hhlab {

/// omega r^{-sigma}, tagged so the inner ball is integrated analytically.
inline RadialField homogeneous_data(double omega, double sigma, const GridPtr& grid) {
    if (!(sigma > 0.0) || !(sigma < grid->dim()))
        throw std::invalid_argument("homogeneous data needs 0 < sigma < d");
    RadialField f = RadialField::sample(grid, [&](double r) { return omega * std::pow(r, -sigma); });
    f.set_singular(SingularTag{sigma, omega});
    return f;
}

/// Decay exponent (2 + gamma)/(alpha - 1) of self-similar data.
inline Num self_similar_exponent(const ModelParams& m) { return (Num(2) + m.gamma) / (m.alpha - Num(1)); }

/// Runs the solver from omega |x|^{-(2+gamma)/(alpha-1)}; throws on divergence.
inline Trajectory construct_self_similar(const ModelParams& m, double omega, const GridPtr& grid, SolverConfig cfg,
                                         SemigroupCache& cache = default_semigroup_cache()) {
    cfg.extra_times.push_back(cfg.T / 16.0);
    Trajectory tr = picard_iterate(homogeneous_data(omega, self_similar_exponent(m).value(), grid), m, cfg, cache);
    if (tr.diverged) throw std::runtime_error("solver divergence while constructing the self-similar solution");
    return tr;
}

struct SmallnessThreshold {
    double converged_omega = 0.0;  ///< largest amplitude seen to converge
    double diverged_omega = 0.0;   ///< smallest amplitude seen to diverge (0 if none)
    int solves = 0;
};

/// Bisection on the data amplitude between a converging and a diverging run.
inline SmallnessThreshold smallness_threshold(const ModelParams& m, const GridPtr& grid, const SolverConfig& cfg,
                                              double omega_hi, int steps, SemigroupCache& cache = default_semigroup_cache()) {
    SmallnessThreshold th;
    const double sigma = self_similar_exponent(m).value();
    auto ok = [&](double w) {
        ++th.solves;
        auto tr = picard_iterate(homogeneous_data(w, sigma, grid), m, cfg, cache);
        return tr.converged && !tr.diverged;
    };
    if (ok(omega_hi)) {
        th.converged_omega = omega_hi;
        return th;
    }
    double lo = 0.0, hi = omega_hi;
    for (int i = 0; i < steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    th.converged_omega = lo;
    th.diverged_omega = hi;
    return th;
}

struct ProfileSnapshot {
    int dim = 0;
    std::vector<double> y_grid;
    std::vector<cplx> profile_values;
    std::vector<bool> extrapolated;  ///< sqrt(t) y fell outside the spatial grid
    double source_time = 0.0;
};

/// t^{sigma/2} u(t, sqrt(t) y), linear in log r between nodes. The default
/// y-grid is the spatial grid itself.
inline ProfileSnapshot profile_extract(const Trajectory& traj, double t, double sigma,
                                       std::vector<double> y_grid = {}) {
    const RadialField& u = traj.snapshots.at(traj.index_of(t));
    const RadialGrid& g = *u.grid();
    if (y_grid.empty()) y_grid = g.nodes();
    ProfileSnapshot p;
    p.dim = g.dim();
    p.source_time = t;
    p.y_grid = y_grid;
    const double st = std::sqrt(t), scale = std::pow(t, 0.5 * sigma);
    for (double y : y_grid) {
        const double x = st * y;
        const bool out = x < g.r_min() * (1 - 1e-12) || x > g.r_max() * (1 + 1e-12);
        const std::size_t k = g.lower_index(x);
        const std::size_t i = k == 0 ? 0 : std::min(k - 1, g.size() - 2);
        const double a = std::log(g.node(i)), b = std::log(g.node(i + 1));
        double w = (std::log(x) - a) / (b - a);
        w = std::clamp(w, 0.0, 1.0);
        p.profile_values.push_back(scale * ((1.0 - w) * u[i] + w * u[i + 1]));
        p.extrapolated.push_back(out);
    }
    return p;
}

inline void write_profile_csv(const ProfileSnapshot& p, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "y,re,im,source_time\n";
    for (std::size_t i = 0; i < p.y_grid.size(); ++i)
        out << format_double(p.y_grid[i]) << ',' << format_double(p.profile_values[i].real()) << ','
            << format_double(p.profile_values[i].imag()) << ',' << format_double(p.source_time) << '\n';
}

/// ||p1 - p2||_idx / max(||p1||_idx, floor), both restricted to y in window.
inline double invariance_deviation(const ProfileSnapshot& p1, const ProfileSnapshot& p2, const SpaceIndex& idx,
                                   double y_lo = 0.1, double y_hi = 10.0, double floor = 1e-300) {
    if (p1.y_grid != p2.y_grid) throw std::invalid_argument("profiles live on different y-grids");
    std::vector<double> ys;
    std::vector<cplx> a, b;
    for (std::size_t i = 0; i < p1.y_grid.size(); ++i) {
        const double y = p1.y_grid[i];
        if (y < y_lo || y > y_hi) continue;
        ys.push_back(y);
        a.push_back(p1.profile_values[i]);
        b.push_back(p2.profile_values[i]);
    }
    if (ys.size() < 2) throw std::invalid_argument("profile window holds fewer than two nodes");
    auto grid = RadialGrid::from_nodes(p1.dim, ys);
    RadialField fa(grid, a), fb(grid, b);
    const double top = std::max(lorentz_quasi_norm(fa, idx), floor);
    return lorentz_quasi_norm(fa - fb, idx) / top;
}

/// Pairings <u(t), e^{-|x|^2 / w^2}> for a few fixed widths; the weak-star
/// approach to the data shows up as these tracks settling as t -> 0.
inline std::vector<std::vector<double>> gaussian_pairings(const Trajectory& traj,
                                                          const std::vector<double>& widths = {0.5, 1.0, 2.0}) {
    std::vector<std::vector<double>> out;
    for (double w : widths) {
        std::vector<double> track;
        for (const auto& u : traj.snapshots) {
            RadialField prod = u;
            for (std::size_t i = 0; i < prod.size(); ++i) prod[i] *= std::exp(-std::pow(prod.radius(i) / w, 2));
            prod.set_singular(std::nullopt);
            track.push_back(prod.integral().real());
        }
        out.push_back(std::move(track));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Singular steady state L |x|^{-(2+gamma)/(alpha-1)} of the focusing problem

struct SingularSteadyState {
    double coefficient = 0.0;
    Num exponent;
    double operator()(double r) const { return coefficient * std::pow(r, -exponent.value()); }
};

inline SingularSteadyState singular_steady_state(const ModelParams& m) {
    if (m.d < 3) throw std::invalid_argument("singular steady state needs d >= 3");
    if (m.a != 1) throw std::invalid_argument("singular steady state needs a = 1");
    const Num dm2(m.d - 2);
    const Num threshold = (Num(m.d) + m.gamma) / dm2;
    if (!(m.alpha > threshold)) throw std::invalid_argument("singular steady state needs alpha > (d+gamma)/(d-2)");
    const Num am1 = m.alpha - Num(1);
    const Num base = (Num(2) + m.gamma) * dm2 / (am1 * am1) * (m.alpha - threshold);
    SingularSteadyState u;
    u.coefficient = std::pow(base.value(), 1.0 / am1.value());
    u.exponent = self_similar_exponent(m);
    return u;
}

inline RadialField steady_state_field(const ModelParams& m, const GridPtr& grid) {
    auto u = singular_steady_state(m);
    RadialField f = RadialField::sample(grid, [&](double r) { return u(r); });
    f.set_singular(SingularTag{u.exponent.value(), u.coefficient});
    return f;
}

/// Fourth-order radial Laplacian on a uniform logarithmic grid:
/// Delta = r^{-2}(d_s^2 + (d - 2) d_s), s = log r. The two nodes at each
/// end are left at zero.
inline RadialField fd_laplacian(const RadialField& f) {
    const auto& g = *f.grid();
    auto h = g.log_step();
    if (!h) throw std::invalid_argument("finite-difference Laplacian needs a uniform logarithmic grid");
    const int d = g.dim();
    RadialField out(f.grid());
    for (std::size_t i = 2; i + 2 < f.size(); ++i) {
        const cplx um2 = f[i - 2], um1 = f[i - 1], u0 = f[i], up1 = f[i + 1], up2 = f[i + 2];
        const cplx us = (-up2 + 8.0 * up1 - 8.0 * um1 + um2) / (12.0 * *h);
        const cplx uss = (-up2 + 16.0 * up1 - 30.0 * u0 + 16.0 * um1 - um2) / (12.0 * *h * *h);
        const double r = g.node(i);
        out[i] = (uss + double(d - 2) * us) / (r * r);
    }
    return out;
}

/// max over nodes in [r_lo, r_hi] of |Delta U + |x|^gamma U^alpha| / (|x|^gamma U^alpha).
/// `scale` multiplies the coefficient (scale != 1 is not a solution).
inline double steady_state_residual(const ModelParams& m, const GridPtr& grid, double r_lo = 1.0, double r_hi = 10.0,
                                    double scale = 1.0) {
    RadialField u = steady_state_field(m, grid);
    u *= scale;
    RadialField lap = fd_laplacian(u);
    const double al = m.alpha.value(), ga = m.gamma.value();
    double worst = 0.0;
    for (std::size_t i = 2; i + 2 < u.size(); ++i) {
        const double r = u.radius(i);
        if (r < r_lo || r > r_hi) continue;
        const double src = std::pow(r, ga) * std::pow(u[i].real(), al);
        worst = std::max(worst, std::fabs(lap[i].real() + src) / src);
    }
    return worst;
}

/// One Picard sweep of the stationary history u(s) = U at time t:
/// e^{t Delta} U + a * int_0^t e^{(t-s) Delta} N(U) ds.
inline RadialField steady_state_sweep(const ModelParams& m, const GridPtr& grid, const SolverConfig& cfg,
                                      SemigroupCache& cache = default_semigroup_cache()) {
    RadialField U = steady_state_field(m, grid);
    Trajectory hist;
    hist.times = time_mesh(cfg);
    hist.initial = U;
    hist.snapshots.assign(hist.times.size(), U);
    RadialField out = apply_semigroup(U, cfg.T, cache);
    RadialField duh = duhamel_integral(hist, cfg.T, m, cfg, cache);
    duh *= double(m.a);
    out += duh;
    out.set_singular(std::nullopt);
    return out;
}

}  // namespace hhlab
