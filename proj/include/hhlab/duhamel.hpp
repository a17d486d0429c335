#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhlab/decay_fit.hpp"
#include "hhlab/exponents.hpp"
#include "hhlab/heat_kernel.hpp"
#include "hhlab/lorentz.hpp"
#include "hhlab/trajectory.hpp"

namespace hhlab {

struct SolverConfig {
    double T = 1.0;
    int n_time = 32;
    double grading = 3.0;
    double picard_tol = 1e-6;
    int max_iters = 60;
    SpaceIndex kato_index = SpaceIndex::weak(0, Exponent(6));
    std::vector<double> extra_times;  ///< inserted into the mesh (e.g. T/16)
    double ceiling = 1e8;             ///< auxiliary-norm level read as blow-up
    double m_multiple = 2.0;          ///< M = m_multiple * rho in the smallness check
    int end_levels = 10;              ///< dyadic refinement of the step ending at the evaluation time

    void validate(const RadialGrid& g) const {
        if (!(T > 0.0)) throw std::invalid_argument("time.T must be positive");
        if (n_time < 16) throw std::invalid_argument("time.n_time must be >= 16");
        if (!(grading >= 1.0)) throw std::invalid_argument("time.grading must be >= 1");
        if (!(picard_tol > 0.0)) throw std::invalid_argument("solver.picard_tol must be positive");
        if (max_iters < 1) throw std::invalid_argument("solver.max_iters must be >= 1");
        if (std::sqrt(T) > 0.25 * (g.r_max() - g.r_min()))
            throw std::invalid_argument("time.T too large: diffusion length exceeds a quarter of the grid span");
    }
};

/// tau_j = T (j/n)^g together with any requested extra times.
inline std::vector<double> time_mesh(const SolverConfig& cfg) {
    std::vector<double> ts;
    for (int j = 1; j <= cfg.n_time; ++j)
        ts.push_back(cfg.T * std::pow(static_cast<double>(j) / cfg.n_time, cfg.grading));
    ts.back() = cfg.T;
    for (double e : cfg.extra_times)
        if (e > 0.0 && e < cfg.T) ts.push_back(e);
    std::sort(ts.begin(), ts.end());
    std::vector<double> out;
    for (double t : ts)
        if (out.empty() || t - out.back() > 1e-12 * t) out.push_back(t);
        else out.back() = t;
    return out;
}

/// Pointwise a |x|^gamma |u|^{alpha-1} u with |u| the complex modulus.
inline RadialField nonlinearity(const RadialField& u, const ModelParams& m) {
    RadialField out(u.grid());
    const double al = m.alpha.value(), g = m.gamma.value();
    const double a = m.a;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const cplx v = u[i];
        const double mod = std::hypot(v.real(), v.imag());
        double w = a * std::pow(mod, al - 1.0);
        if (g != 0.0) w *= std::pow(u.radius(i), g);
        out[i] = w * v;
    }
    if (const auto& tag = u.singular()) {
        const double c = std::abs(tag->coefficient);
        out.set_singular(SingularTag{al * tag->exponent - g, a * std::pow(c, al - 1.0) * tag->coefficient});
    }
    return out;
}

/// a |x|^gamma |w|^{alpha-1} v: the linear coupling of the triangular systems.
inline RadialField coupled_nonlinearity(const RadialField& w, const RadialField& v, const ModelParams& m) {
    RadialField out(v.grid());
    const double al = m.alpha.value(), g = m.gamma.value();
    for (std::size_t i = 0; i < v.size(); ++i) {
        double c = m.a * std::pow(std::abs(w[i]), al - 1.0);
        if (g != 0.0) c *= std::pow(v.radius(i), g);
        out[i] = c * v[i];
    }
    return out;
}

namespace detail {

inline RadialField apply_op(const SemigroupMatrix& op, const RadialField& f) {
    std::vector<cplx> out;
    op.apply(f.values(), out);
    const cplx dm = inner_mass_correction(f);
    if (dm != cplx(0.0))
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += dm * gaussian_kernel_value(f.dim(), op.t(), f.radius(i));
    RadialField res(f.grid());  // no finiteness check: divergent iterates must survive to be reported
    res.values() = std::move(out);
    return res;
}

inline void axpy(RadialField& y, double a, const RadialField& x) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

/// Operators e^{h Delta} and e^{(h/2) Delta} for every mesh step.
struct StepOperators {
    std::vector<std::shared_ptr<const SemigroupMatrix>> full, half;
    StepOperators(const GridPtr& g, const std::vector<double>& times, SemigroupCache& cache) {
        double prev = 0.0;
        for (double t : times) {
            const double h = t - prev;
            full.push_back(cache.get(g, h));
            half.push_back(cache.get(g, 0.5 * h));
            prev = t;
        }
    }
};

/// Duhamel integrals D_j = int_0^{tau_j} e^{(tau_j - s) Delta} N(s) ds by the
/// semigroup recursion D_j = e^{h Delta} D_{j-1} + local_j. The local term is
/// Simpson's rule in the semigroup time with N linear across the step; the
/// first step uses N(tau_1) throughout so raw data are never fed to N.
inline std::vector<RadialField> duhamel_all(const std::vector<double>& times, const std::vector<RadialField>& N,
                                            const StepOperators& ops) {
    std::vector<RadialField> D;
    D.reserve(times.size());
    double prev = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double h = times[j] - prev;
        const auto& E = *ops.full[j];
        const auto& H = *ops.half[j];
        RadialField local(N[j].grid());
        if (j == 0) {
            local = N[0];
            axpy(local, 4.0, apply_op(H, N[0]));
            local += apply_op(E, N[0]);
        } else {
            RadialField mid = N[j - 1];
            mid += N[j];
            local = N[j];
            axpy(local, 2.0, apply_op(H, mid));
            local += apply_op(E, N[j - 1]);
        }
        local *= h / 6.0;
        if (j == 0) {
            D.push_back(std::move(local));
        } else {
            RadialField next = apply_op(E, D.back());
            next += local;
            D.push_back(std::move(next));
        }
        prev = times[j];
    }
    return D;
}

inline double weighted_sup(const std::vector<double>& times, const std::vector<RadialField>& a,
                           const std::vector<RadialField>* b, double beta, const SpaceIndex& weak) {
    double best = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        double v;
        if (b) v = lorentz_quasi_norm(a[j] - (*b)[j], weak);
        else v = lorentz_quasi_norm(a[j], weak);
        if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
        best = std::max(best, std::pow(times[j], beta) * v);
    }
    return best;
}

}  // namespace detail

namespace detail {

/// int_0^h e^{s Delta} g(s) ds with g linear from g0 (s = 0) to gh (s = h),
/// by Simpson on the dyadic pieces [h 2^{-k-1}, h 2^{-k}] and [0, h 2^{-levels}].
/// Resolves the s -> 0 end where e^{s Delta} of a rough source changes fast.
inline RadialField graded_local(double h, const RadialField& g0, const RadialField& gh, int levels,
                                SemigroupCache& cache) {
    const GridPtr& grid = g0.grid();
    auto g_at = [&](double s) {
        RadialField v = g0;
        v *= 1.0 - s / h;
        RadialField w = gh;
        w *= s / h;
        v += w;
        return v;
    };
    auto flow = [&](double s, const RadialField& f) { return s == 0.0 ? f : apply_op(*cache.get(grid, s), f); };
    RadialField acc(grid);
    double b = h;
    for (int k = 0; k <= levels; ++k) {
        const double a = k == levels ? 0.0 : 0.5 * b;
        const double mid = 0.5 * (a + b);
        RadialField piece = flow(a, g_at(a));
        axpy(piece, 4.0, flow(mid, g_at(mid)));
        piece += flow(b, g_at(b));
        piece *= (b - a) / 6.0;
        acc += piece;
        b = a;
    }
    return acc;
}

}  // namespace detail

/// Integral of e^{(t - s) Delta}[|x|^gamma F(u(s))] over (0, t) for a
/// recorded history; t must be a recorded time. The sign a is not applied.
/// The last step is graded toward s = t (`end_levels` dyadic levels).
inline RadialField duhamel_integral(const Trajectory& history, double t, const ModelParams& m, const SolverConfig& cfg,
                                    SemigroupCache& cache = default_semigroup_cache()) {
    const std::size_t last = history.index_of(t);
    std::vector<double> times(history.times.begin(), history.times.begin() + last + 1);
    ModelParams unit = m;
    unit.a = 1;
    std::vector<RadialField> N;
    for (std::size_t j = 0; j <= last; ++j) N.push_back(nonlinearity(history.snapshots[j], unit));
    const GridPtr& grid = history.snapshots.front().grid();
    if (times.size() == 1) return detail::graded_local(times[0], N[0], N[0], cfg.end_levels, cache);
    std::vector<double> head(times.begin(), times.end() - 1);
    std::vector<RadialField> headN(N.begin(), N.end() - 1);
    detail::StepOperators ops(grid, head, cache);
    const double h = times.back() - head.back();
    RadialField out = detail::apply_op(*cache.get(grid, h), detail::duhamel_all(head, headN, ops).back());
    out += detail::graded_local(h, N.back(), N[N.size() - 2], cfg.end_levels, cache);
    return out;
}

/// True when the graded mesh cannot resolve the time singularity of the
/// Duhamel integrand: g (1 - alpha beta) < 1 with beta the auxiliary weight.
inline bool grading_starved(const ModelParams& m, const SolverConfig& cfg) {
    const double beta = (Num::ratio(m.d, 2) * (critical_inverse_q(m) - cfg.kato_index.scaling_sum(m.d))).value();
    return cfg.grading * (1.0 - m.alpha.value() * beta) < 1.0;
}

/// Maps (mesh index, current iterate) to the source term a |x|^gamma F.
using SourceTerm = std::function<RadialField(std::size_t, const RadialField&)>;

/// Picard iteration of u = e^{t Delta} phi + int e^{(t-s) Delta} N(u(s)) ds in
/// the auxiliary-norm metric.
inline Trajectory picard_solve(const RadialField& phi, const ModelParams& m, const SolverConfig& cfg,
                               const SourceTerm& source, SemigroupCache& cache = default_semigroup_cache()) {
    m.validate();
    cfg.validate(*phi.grid());
    Trajectory tr;
    tr.initial = phi;
    tr.times = time_mesh(cfg);
    tr.grading_starved = grading_starved(m, cfg);
    const auto& times = tr.times;
    detail::StepOperators ops(phi.grid(), times, cache);

    // linear part, stepped with the same operators
    std::vector<RadialField> lin;
    lin.reserve(times.size());
    for (std::size_t j = 0; j < times.size(); ++j)
        lin.push_back(j == 0 ? apply_semigroup(phi, times[0], cache) : detail::apply_op(*ops.full[j], lin.back()));

    const SpaceIndex weak = SpaceIndex::weak(cfg.kato_index.s, cfg.kato_index.q);
    const double beta = (Num::ratio(m.d, 2) * (critical_inverse_q(m) - cfg.kato_index.scaling_sum(m.d))).value();
    tr.linear_kato_norm = detail::weighted_sup(times, lin, nullptr, beta, weak);

    std::vector<RadialField> u = lin;
    double prev_dist = -1.0;
    int rising = 0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        std::vector<RadialField> N;
        N.reserve(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) N.push_back(source(j, u[j]));
        auto D = detail::duhamel_all(times, N, ops);
        std::vector<RadialField> next = lin;
        for (std::size_t j = 0; j < times.size(); ++j) next[j] += D[j];

        const double dist = detail::weighted_sup(times, next, &u, beta, weak);
        const double size = detail::weighted_sup(times, next, nullptr, beta, weak);
        u = std::move(next);
        tr.iterations_used = it;
        const double rel = size > 0.0 ? dist / size : dist;
        tr.distances.push_back(rel);
        if (prev_dist > 0.0) {
            const double ratio = dist / prev_dist;
            tr.contraction_ratios.push_back(ratio);
            rising = ratio > 1.0 ? rising + 1 : 0;
        }
        if (!std::isfinite(dist) || !std::isfinite(size) || size > cfg.ceiling || rising >= 3) {
            tr.diverged = true;
            break;
        }
        if (rel < cfg.picard_tol || dist == 0.0) {
            tr.converged = true;
            break;
        }
        prev_dist = dist;
    }
    if (tr.converged && !tr.contraction_ratios.empty() && tr.contraction_ratios.back() >= 1.0) tr.converged = false;
    tr.snapshots = std::move(u);
    tr.record(weak);
    tr.record(SpaceIndex(0, Exponent::infinity(), Exponent::infinity()));
    return tr;
}

inline Trajectory picard_iterate(const RadialField& phi, const ModelParams& m, const SolverConfig& cfg,
                                 SemigroupCache& cache = default_semigroup_cache()) {
    return picard_solve(
        phi, m, cfg, [&](std::size_t, const RadialField& u) { return nonlinearity(u, m); }, cache);
}

/// Measured smallness bookkeeping: rho, M = multiple * rho, the implied C0
/// from the last contraction ratio (ratio ~ 2 C0 M^{alpha-1}) and whether
/// rho + 2 C0 M^alpha <= M holds with that estimate.
struct SmallnessReport {
    double rho = 0.0, M = 0.0, c0_hat = 0.0;
    bool feasible = false;
};

inline SmallnessReport smallness_report(const Trajectory& tr, const ModelParams& m, const SolverConfig& cfg) {
    SmallnessReport s;
    s.rho = tr.linear_kato_norm;
    s.M = cfg.m_multiple * s.rho;
    const double al = m.alpha.value();
    if (!tr.contraction_ratios.empty() && s.M > 0.0) {
        s.c0_hat = tr.contraction_ratios.back() / (2.0 * std::pow(s.M, al - 1.0));
        s.feasible = s.rho + 2.0 * s.c0_hat * std::pow(s.M, al) <= s.M;
    } else {
        s.feasible = true;
    }
    return s;
}

struct BlowupReport {
    bool blew_up = false;
    double crossing_time = std::numeric_limits<double>::infinity();
    double max_weighted_norm = 0.0;
    std::vector<double> weighted_norms;
};

inline BlowupReport blowup_monitor(const Trajectory& tr, const ModelParams& m, const SpaceIndex& kp,
                                   double ceiling) {
    BlowupReport rep;
    const double beta = (Num::ratio(m.d, 2) * (critical_inverse_q(m) - kp.scaling_sum(m.d))).value();
    const SpaceIndex weak = SpaceIndex::weak(kp.s, kp.q);
    for (std::size_t j = 0; j < tr.size(); ++j) {
        double v = std::pow(tr.times[j], beta) * lorentz_quasi_norm(tr.snapshots[j], weak);
        if (!std::isfinite(v)) v = std::numeric_limits<double>::infinity();
        rep.weighted_norms.push_back(v);
        rep.max_weighted_norm = std::max(rep.max_weighted_norm, v);
        if (!rep.blew_up && v > ceiling) {
            rep.blew_up = true;
            rep.crossing_time = tr.times[j];
        }
    }
    if (tr.diverged && !rep.blew_up) {
        rep.blew_up = true;
        rep.crossing_time = tr.times.empty() ? 0.0 : tr.times.back();
    }
    return rep;
}

struct UpgradeReport {
    double sup = 0.0;
    std::vector<double> weighted;
    DecayFit fit;  ///< slope of the weighted track; 0 means scale-invariant
};

inline UpgradeReport regularity_upgrade_probe(const Trajectory& tr, const ModelParams& m, const SpaceIndex& from,
                                              const SpaceIndex& to) {
    auto rep = upgrade_pair_conditions(m, from, to);
    if (!rep.admissible()) throw std::invalid_argument("upgrade pair not allowed: " + rep.summary());
    UpgradeReport out;
    const double beta = (Num::ratio(m.d, 2) * (critical_inverse_q(m) - to.scaling_sum(m.d))).value();
    const SpaceIndex weak = SpaceIndex::weak(to.s, to.q);
    for (std::size_t j = 0; j < tr.size(); ++j) {
        double v = std::pow(tr.times[j], beta) * lorentz_quasi_norm(tr.snapshots[j], weak);
        out.weighted.push_back(v);
        out.sup = std::max(out.sup, v);
    }
    if (tr.size() >= 2) out.fit = decay_slope_fit(tr.times, out.weighted, tr.times.front(), tr.times.back(), 0.0, 0.02, true);
    return out;
}

enum class Coupling { full, case3, case4 };

/// Pair solve. `full` packs (phi1, phi2) into one complex field; the
/// triangular cases solve the driving component as a scalar problem first
/// and the driven one as a linear problem with that coefficient.
inline std::pair<Trajectory, Trajectory> solve_system(const RadialField& phi1, const RadialField& phi2,
                                                      const ModelParams& m, const SolverConfig& cfg, Coupling c,
                                                      SemigroupCache& cache = default_semigroup_cache()) {
    auto split = [](const Trajectory& tr, bool imag) {
        Trajectory out = tr;
        out.initial = imag ? tr.initial.imag_part() : tr.initial.real_part();
        for (auto& s : out.snapshots) s = imag ? s.imag_part() : s.real_part();
        out.recorded_norms.clear();
        return out;
    };
    if (c == Coupling::full) {
        RadialField phi = phi1.real_part();
        RadialField im = phi2.real_part();
        im *= cplx(0.0, 1.0);
        phi += im;
        Trajectory u = picard_iterate(phi, m, cfg, cache);
        return {split(u, false), split(u, true)};
    }
    const RadialField& drive_data = c == Coupling::case3 ? phi1 : phi2;
    const RadialField& driven_data = c == Coupling::case3 ? phi2 : phi1;
    Trajectory drive = picard_iterate(drive_data, m, cfg, cache);
    Trajectory driven = picard_solve(
        driven_data, m, cfg,
        [&](std::size_t j, const RadialField& v) { return coupled_nonlinearity(drive.snapshots[j], v, m); }, cache);
    if (c == Coupling::case3) return {drive, driven};
    return {driven, drive};
}

}  // namespace hhlab
