#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "hhlab/exponents.hpp"
#include "hhlab/radial_field.hpp"

namespace hhlab {

/// Step function f* on (0, inf): value levels[j] on [breakpoints[j], breakpoints[j+1]).
/// breakpoints has one more entry than levels and starts at 0.
struct Rearrangement {
    std::vector<double> breakpoints;
    std::vector<double> levels;

    double operator()(double t) const {
        for (std::size_t j = 0; j < levels.size(); ++j)
            if (t < breakpoints[j + 1]) return levels[j];
        return 0.0;
    }
    double support() const { return breakpoints.back(); }
};

namespace detail {

inline double weighted_level(const RadialField& f, double s, std::size_t i) {
    double a = std::abs(f[i]);
    if (s == 0.0 || a == 0.0) return a;
    return std::pow(f.radius(i), s) * a;
}

}  // namespace detail

/// Measure of { |x|^s |f| > lambda }.
inline double distribution_function(const RadialField& f, double s, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("distribution function needs lambda >= 0");
    double m = 0.0;
    const auto& mu = f.grid()->measures();
    for (std::size_t i = 0; i < f.size(); ++i)
        if (detail::weighted_level(f, s, i) > lambda) m += mu[i];
    return m;
}

inline Rearrangement decreasing_rearrangement(const RadialField& f, double s) {
    struct Cell {
        double level, measure;
    };
    std::vector<Cell> cells;
    cells.reserve(f.size());
    const auto& mu = f.grid()->measures();
    for (std::size_t i = 0; i < f.size(); ++i) {
        double lv = detail::weighted_level(f, s, i);
        if (lv > 0.0) cells.push_back({lv, mu[i]});
    }
    std::stable_sort(cells.begin(), cells.end(), [](const Cell& a, const Cell& b) { return a.level > b.level; });
    Rearrangement out;
    out.breakpoints.push_back(0.0);
    for (const auto& c : cells) {
        if (!out.levels.empty() && out.levels.back() == c.level) {
            out.breakpoints.back() += c.measure;
        } else {
            out.levels.push_back(c.level);
            out.breakpoints.push_back(out.breakpoints.back() + c.measure);
        }
    }
    return out;
}

/// Closed-form quasi-norm of a step rearrangement.
inline double lorentz_quasi_norm(const Rearrangement& fs, const Exponent& q, const Exponent& r) {
    const double iq = q.inverse().value();
    if (fs.levels.empty()) return 0.0;
    if (r.is_inf()) {
        if (iq == 0.0) return fs.levels.front();
        double best = 0.0;
        for (std::size_t j = 0; j < fs.levels.size(); ++j)
            best = std::max(best, fs.levels[j] * std::pow(fs.breakpoints[j + 1], iq));
        return best;
    }
    const double rr = r.value();
    const double e = rr * iq;  // exponent of t after integrating t^{r/q - 1}
    // scale out the largest level to keep level^r finite
    const double top = fs.levels.front();
    double acc = 0.0;
    double prev = 0.0;
    for (std::size_t j = 0; j < fs.levels.size(); ++j) {
        double cur = std::pow(fs.breakpoints[j + 1], e);
        acc += std::pow(fs.levels[j] / top, rr) * (cur - prev);
        prev = cur;
    }
    return top * std::pow(acc / e, 1.0 / rr);
}

/// ||f||_{L^{q,r}_s}. Fields tagged with an origin singularity that the
/// space cannot hold are reported as divergent.
inline double lorentz_quasi_norm(const RadialField& f, const SpaceIndex& idx) {
    idx.validate();
    const double s = idx.s.value();
    if (const auto& tag = f.singular(); tag && std::abs(tag->coefficient) > 0.0) {
        const double e = tag->exponent - s;  // |x|^s f ~ |x|^{-e}
        const double crit = f.dim() * idx.q.inverse().value();
        if (e > crit + 1e-12 || (std::fabs(e - crit) <= 1e-12 && !idx.r.is_inf() && e > 0.0))
            throw std::domain_error("divergent Lorentz integral: origin singularity too strong for " + idx.str());
    }
    return lorentz_quasi_norm(decreasing_rearrangement(f, s), idx.q, idx.r);
}

/// (int (|x|^s |f|)^q dx)^{1/q} on the step representative; the oracle for
/// the q = r case.
inline double weighted_lebesgue_norm(const RadialField& f, double s, double q) {
    const auto& mu = f.grid()->measures();
    double top = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) top = std::max(top, detail::weighted_level(f, s, i));
    if (top == 0.0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) acc += std::pow(detail::weighted_level(f, s, i) / top, q) * mu[i];
    return top * std::pow(acc, 1.0 / q);
}

// ---------------------------------------------------------------------------
// Empirical inequality checks

struct InequalityReport {
    double lhs = 0.0;
    double rhs = 0.0;      ///< right side without the constant
    double constant = 0.0; ///< lhs / rhs, the smallest constant that works here
    bool holds_with(double c) const { return lhs <= c * rhs * (1.0 + 1e-12) + 1e-300; }
};

inline RadialField pointwise_product(const RadialField& f, const RadialField& g) {
    f.check_same(g);
    RadialField out(f.grid());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] * g[i];
    return out;
}

/// ||fg||_{L^{q,r}_{s1+s2}} against ||f||_{L^{q1,r1}_{s1}} ||g||_{L^{q2,r2}_{s2}}.
inline InequalityReport holder_product_check(const RadialField& f, const RadialField& g, const SpaceIndex& i1,
                                             const SpaceIndex& i2, const SpaceIndex& out_idx) {
    if (out_idx.q.inverse() != i1.q.inverse() + i2.q.inverse())
        throw std::invalid_argument("Hoelder exponents need 1/q = 1/q1 + 1/q2");
    if (out_idx.r.inverse() > i1.r.inverse() + i2.r.inverse())
        throw std::invalid_argument("Hoelder exponents need 1/r <= 1/r1 + 1/r2");
    if (out_idx.s != i1.s + i2.s) throw std::invalid_argument("Hoelder weights need s = s1 + s2");
    InequalityReport rep;
    rep.lhs = lorentz_quasi_norm(pointwise_product(f, g), out_idx);
    rep.rhs = lorentz_quasi_norm(f, i1) * lorentz_quasi_norm(g, i2);
    rep.constant = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

/// ||f||_{idx2} <= C ||f||_{idx1} for the weighted embedding chain.
inline InequalityReport embedding_check(const RadialField& f, const SpaceIndex& i1, const SpaceIndex& i2) {
    const int d = f.dim();
    ConstraintSet cs;
    cs.le("embedding.l2_le_l1", i2.s, i1.s);
    cs.le("embedding.q2_le_q1", i1.q.inverse(), i2.q.inverse());
    cs.le("embedding.r1_le_r2", i2.r.inverse(), i1.r.inverse());
    cs.require("embedding.same_scaling", i1.scaling_sum(d) == i2.scaling_sum(d));
    if (!cs.report().admissible()) throw std::invalid_argument("embedding hypothesis violated: " + cs.report().summary());
    InequalityReport rep;
    rep.lhs = lorentz_quasi_norm(f, i2);
    rep.rhs = lorentz_quasi_norm(f, i1);
    rep.constant = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

}  // namespace hhlab
