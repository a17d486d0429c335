#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhlab/rational.hpp"

namespace hhlab {

// ============================================================================
// Model and index types
// ============================================================================

struct ModelParams {
    int d = 3;
    Num gamma = 0;
    Num alpha = 3;
    int a = -1;  ///< sign of the nonlinearity; 0 is accepted for linear runs

    void validate() const {
        if (d < 1) throw std::invalid_argument("dimension d must be >= 1");
        if (alpha <= Num(1)) throw std::invalid_argument("alpha must exceed 1");
        if (a != -1 && a != 1 && a != 0) throw std::invalid_argument("a must be -1, 0 or +1");
    }

    /// The well-posedness routines additionally need gamma > -min(2, d).
    bool potential_ok() const { return gamma > Num(-std::min(2, d)); }

    Num inv_d() const { return Num::ratio(1, d); }
    /// Homogeneity of the scale-invariant data, (2+gamma)/(alpha-1).
    Num critical_decay() const { return (Num(2) + gamma) / (alpha - Num(1)); }
};

/// Label (s, q, r) of the weighted Lorentz space L^{q,r}_s.
struct SpaceIndex {
    Num s = 0;
    Exponent q = Exponent::infinity();
    Exponent r = Exponent::infinity();

    SpaceIndex() = default;
    SpaceIndex(Num s_, Exponent q_, Exponent r_) : s(s_), q(q_), r(r_) { validate(); }

    /// The weak space L^{p,inf}_k that carries the time-weighted auxiliary norm.
    static SpaceIndex weak(Num k, Exponent p) {
        if (!p.is_inf() && p.finite() == Num(1)) return SpaceIndex(k, p, Exponent(1));
        return SpaceIndex(k, p, Exponent::infinity());
    }

    void validate() const {
        if (!q.is_inf() && q.finite() < Num(1)) throw std::invalid_argument("q must lie in [1, inf]");
        if (!r.is_inf() && r.finite() < Num(1)) throw std::invalid_argument("r must lie in [1, inf]");
        if (q.is_inf() && !r.is_inf()) throw std::invalid_argument("r must be inf when q = inf");
        if (!q.is_inf() && q.finite() == Num(1) && !(!r.is_inf() && r.finite() == Num(1)))
            throw std::invalid_argument("r must be 1 when q = 1");
    }

    /// s/d + 1/q, the quantity every scaling condition is phrased in.
    Num scaling_sum(int d) const { return s / Num(d) + q.inverse(); }

    std::string str() const { return "(" + s.str() + "," + q.str() + "," + r.str() + ")"; }
};

// ============================================================================
// Fujita / critical exponents
// ============================================================================

inline Num fujita_exponent(const ModelParams& m) {
    if (m.d < 1) throw std::invalid_argument("dimension d must be >= 1");
    return Num(1) + (Num(2) + m.gamma) / Num(m.d);
}

/// 1/q_c = (2+gamma)/(d(alpha-1)).
inline Num critical_inverse_q(const ModelParams& m) {
    if (m.alpha <= Num(1)) throw std::invalid_argument("critical exponent needs alpha > 1");
    if (Num(2) + m.gamma <= Num(0)) throw std::invalid_argument("critical exponent needs 2 + gamma > 0");
    return (Num(2) + m.gamma) / (Num(m.d) * (m.alpha - Num(1)));
}

inline Exponent critical_q(const ModelParams& m) {
    Num inv = critical_inverse_q(m);
    return Exponent(Num(1) / inv);
}

enum class Criticality { subcritical, critical, supercritical };

inline const char* to_string(Criticality c) {
    switch (c) {
        case Criticality::subcritical: return "subcritical";
        case Criticality::critical: return "critical";
        default: return "supercritical";
    }
}

struct CriticalityReport {
    Exponent q_c;
    Num inv_q_c;
    Num alpha_F;
    Num scaling_sum;
    Criticality cls;
};

inline CriticalityReport classify_pair(const ModelParams& m, const SpaceIndex& idx) {
    CriticalityReport rep;
    rep.inv_q_c = critical_inverse_q(m);
    rep.q_c = critical_q(m);
    rep.alpha_F = fujita_exponent(m);
    rep.scaling_sum = idx.scaling_sum(m.d);
    int c = compare(rep.scaling_sum, rep.inv_q_c);
    rep.cls = c == 0 ? Criticality::critical : (c < 0 ? Criticality::subcritical : Criticality::supercritical);
    return rep;
}

// ============================================================================
// Constraint bookkeeping
// ============================================================================

enum class Verdict { holds, boundary, violated };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::holds: return "admissible";
        case Verdict::boundary: return "boundary";
        default: return "violated";
    }
}

struct AdmissibilityReport {
    std::vector<std::string> violated;     ///< labels of failed inequalities
    std::vector<std::string> on_boundary;  ///< strict inequalities that hold with equality
    bool admissible() const { return violated.empty() && on_boundary.empty(); }
    Verdict verdict() const {
        if (!violated.empty()) return Verdict::violated;
        return on_boundary.empty() ? Verdict::holds : Verdict::boundary;
    }
    bool mentions(const std::string& label) const {
        for (auto& v : violated)
            if (v == label) return true;
        for (auto& v : on_boundary)
            if (v == label) return true;
        return false;
    }
    std::string summary() const {
        std::string out;
        for (auto& v : violated) out += (out.empty() ? "" : ", ") + v;
        for (auto& v : on_boundary) out += (out.empty() ? "" : ", ") + v + " (boundary)";
        return out;
    }
    void merge(const AdmissibilityReport& o) {
        violated.insert(violated.end(), o.violated.begin(), o.violated.end());
        on_boundary.insert(on_boundary.end(), o.on_boundary.begin(), o.on_boundary.end());
    }
};

class ConstraintSet {
public:
    /// Requires a < b. Equality is recorded as a boundary case.
    void lt(const std::string& label, const Num& a, const Num& b) {
        int c = compare(a, b);
        if (c == 0) rep_.on_boundary.push_back(label);
        else if (c > 0) rep_.violated.push_back(label);
    }
    /// Requires a <= b.
    void le(const std::string& label, const Num& a, const Num& b) {
        if (compare(a, b) > 0) rep_.violated.push_back(label);
    }
    void require(const std::string& label, bool ok) {
        if (!ok) rep_.violated.push_back(label);
    }
    const AdmissibilityReport& report() const { return rep_; }

private:
    AdmissibilityReport rep_;
};

// ============================================================================
// Admissibility of (l,q), (k,p), (k0,p0)
// ============================================================================

/// Critical data space (l,q) together with the auxiliary pair (k,p) of the
/// local well-posedness theorem.
inline AdmissibilityReport admissible_wellposed_pair(const ModelParams& m, const SpaceIndex& lq,
                                                     const SpaceIndex& kp) {
    ConstraintSet cs;
    const Num d(m.d), al = m.alpha, g = m.gamma, one(1);
    const Num l = lq.s, k = kp.s;
    const Num K = kp.scaling_sum(m.d);
    const Num iqc = critical_inverse_q(m);

    cs.require("params.gamma_gt_minus_min_2_d", m.potential_ok());
    cs.le("data.gamma_over_alpha_minus_1_le_l", g / (al - one), l);
    if (!kp.q.is_inf()) cs.lt("kato_pair.alpha_lt_p", al, kp.q.finite());
    cs.le("kato_pair.weight_lower", (l + g) / al, k);
    cs.le("kato_pair.k_le_l", k, l);
    cs.le("kato_pair.scaling_nonnegative", Num(0), K);
    cs.lt("kato_pair.scaling_lower", (Num(2) + g * al) / (d * al * (al - one)), K);
    cs.lt("kato_pair.scaling_upper_critical", K, iqc);
    cs.lt("kato_pair.scaling_upper_integrable", K, (d + g) / (d * al));
    return cs.report();
}

/// The (k,p) hypotheses of the abstract critical existence lemma, without
/// reference to the data space when no l is supplied.
inline AdmissibilityReport source_pair_conditions(const ModelParams& m, const SpaceIndex& kp,
                                                  std::optional<Num> l = std::nullopt) {
    ConstraintSet cs;
    const Num d(m.d), al = m.alpha, g = m.gamma, one(1);
    const Num k = kp.s, K = kp.scaling_sum(m.d);
    cs.le("kato_pair.weight_gamma", g / (al - one), k);
    if (l) cs.le("kato_pair.weight_lower", (*l + g) / al, k);
    if (!kp.q.is_inf()) cs.lt("kato_pair.alpha_lt_p", al, kp.q.finite());
    cs.le("kato_pair.scaling_nonnegative", Num(0), K);
    cs.lt("kato_pair.scaling_lower", (Num(2) + g * al) / (d * al * (al - one)), K);
    cs.lt("kato_pair.scaling_upper_critical", K, critical_inverse_q(m));
    cs.lt("kato_pair.scaling_upper_integrable", K, (d + g) / (d * al));
    return cs.report();
}

/// Conditions tying the decay pair (k0,p0) of data homogeneous of degree
/// -sigma to the auxiliary pair (k,p).
inline AdmissibilityReport decay_pair_conditions(const ModelParams& m, const SpaceIndex& kp,
                                                 const SpaceIndex& k0p0, const Num& sigma) {
    ConstraintSet cs;
    const Num d(m.d), al = m.alpha, one(1);
    const Num mix_p = (al - one) * kp.q.inverse() + k0p0.q.inverse();
    cs.le("decay_pair.p_mix_nonnegative", Num(0), mix_p);
    cs.lt("decay_pair.p_mix_below_one", mix_p, one);
    const Num mix = (al - one) * kp.scaling_sum(m.d) + k0p0.scaling_sum(m.d) - m.gamma / d;
    cs.lt("decay_pair.sigma_below_mix", sigma / d, mix);
    cs.lt("decay_pair.mix_below_one", mix, one);
    return cs.report();
}

/// Target pair for asymptotic statements: k~ <= k, p <= p~, 0 <= k~/d + 1/p~.
inline AdmissibilityReport target_pair_conditions(const ModelParams& m, const SpaceIndex& kp,
                                                  const SpaceIndex& tkp) {
    ConstraintSet cs;
    cs.le("target_pair.k_le_source", tkp.s, kp.s);
    cs.le("target_pair.p_ge_source", tkp.q.inverse(), kp.q.inverse());
    cs.le("target_pair.scaling_nonnegative", Num(0), tkp.scaling_sum(m.d));
    return cs.report();
}

/// Auxiliary pair allowed in the time-weighted norm of data in (l,q).
inline AdmissibilityReport kato_pair_conditions(const ModelParams& m, const SpaceIndex& lq,
                                                const SpaceIndex& kp) {
    ConstraintSet cs;
    cs.le("kato_norm.k_le_l", kp.s, lq.s);
    cs.le("kato_norm.scaling_nonnegative", Num(0), kp.scaling_sum(m.d));
    cs.le("kato_norm.scaling_below_data", kp.scaling_sum(m.d), lq.scaling_sum(m.d));
    return cs.report();
}

/// Upgrade of regularity from the weak norm of (k1,p1) to that of (k2,p2).
inline AdmissibilityReport upgrade_pair_conditions(const ModelParams& m, const SpaceIndex& from,
                                                   const SpaceIndex& to) {
    ConstraintSet cs;
    const Num d(m.d), al = m.alpha, g = m.gamma;
    const Num K1 = from.scaling_sum(m.d), K2 = to.scaling_sum(m.d);
    cs.le("upgrade.k2_le_k1", to.s, from.s);
    cs.le("upgrade.k2_le_alpha_k1_minus_gamma", to.s, al * from.s - g);
    if (!from.q.is_inf()) cs.le("upgrade.alpha_le_p1", al, from.q.finite());
    cs.le("upgrade.scaling_nonnegative", Num(0), K2);
    cs.le("upgrade.scaling_below_source", K2, min(K1, al * K1 - g / d));
    cs.le("upgrade.source_below_one", max(K1, al * K1 - g / d), Num(1));
    cs.lt("upgrade.scaling_gain", al * K1 - (Num(2) + g) / d, K2);
    // weak-norm route
    if (!from.q.is_inf()) cs.lt("upgrade.weak.alpha_lt_p1", al, from.q.finite());
    cs.lt("upgrade.weak.source_below_one", max(K1, al * K1 - g / d), Num(1));
    return cs.report();
}

/// Hypotheses of the weighted heat-semigroup estimate between two indices.
inline AdmissibilityReport smoothing_pair_conditions(int d, const SpaceIndex& from, const SpaceIndex& to) {
    ConstraintSet cs;
    const Num K1 = from.scaling_sum(d), K2 = to.scaling_sum(d);
    auto is_one = [](const Exponent& e) { return !e.is_inf() && e.finite() == Num(1); };
    cs.le("smoothing.l2_le_l1", to.s, from.s);
    cs.le("smoothing.target_nonnegative", Num(0), K2);
    cs.le("smoothing.target_below_source", K2, K1);
    cs.le("smoothing.source_below_one", K1, Num(1));
    if (K1 == Num(1) || is_one(from.q)) cs.require("smoothing.r1_is_one", is_one(from.r));
    if (K2 == Num(0)) cs.require("smoothing.r2_is_inf", to.r.is_inf());
    if (K1 == K2) cs.require("smoothing.r1_le_r2", to.r.is_inf() || (!from.r.is_inf() && from.r.finite() <= to.r.finite()));
    return cs.report();
}

/// Predicted exponent of t in the semigroup estimate.
inline Num smoothing_exponent(int d, const SpaceIndex& from, const SpaceIndex& to) {
    return -Num::ratio(d, 2) * (from.q.inverse() - to.q.inverse()) - (from.s - to.s) / Num(2);
}

/// Exponent of t in the auxiliary norm for data in (l,q) measured in (k,p).
inline Num kato_time_exponent(int d, const SpaceIndex& lq, const SpaceIndex& kp) {
    return Num::ratio(d, 2) * (lq.scaling_sum(d) - kp.scaling_sum(d));
}

/// Slope of t -> ||u(t)||_{L^{p,inf}_k} for scale-invariant (critical) data.
inline Num nonlinear_decay_slope(const ModelParams& m, const SpaceIndex& kp) {
    return -Num::ratio(m.d, 2) * (critical_inverse_q(m) - kp.scaling_sum(m.d));
}

/// Slope of t -> ||e^{t Delta} Phi||_{L^{p,inf}_k} for Phi homogeneous of degree -sigma.
inline Num linear_decay_slope(int d, const Num& sigma, const SpaceIndex& kp) {
    return -Num::ratio(d, 2) * (sigma / Num(d) - kp.scaling_sum(d));
}

/// Hypotheses for linear large-time behavior from data decaying like |x|^{-sigma}.
inline AdmissibilityReport linear_behavior_conditions(const ModelParams& m, const Num& sigma, const SpaceIndex& kp) {
    ConstraintSet cs;
    const Num d(m.d);
    cs.lt("linear_behavior.sigma_above_critical", m.critical_decay(), sigma);
    cs.lt("linear_behavior.sigma_below_d", sigma, d);
    cs.lt("linear_behavior.scaling_lower", (sigma + m.gamma) / (d * m.alpha), kp.scaling_sum(m.d));
    return cs.report();
}

// ============================================================================
// Beta function and contraction-estimate arguments
// ============================================================================

/// B(x,y) via log-gamma; relative accuracy ~1e-14 for moderate arguments.
inline double beta_function(double x, double y) {
    if (!(x > 0.0) || !(y > 0.0))
        throw std::domain_error("beta function needs positive arguments (divergent time integral)");
    return std::exp(std::lgamma(x) + std::lgamma(y) - std::lgamma(x + y));
}

/// The two arguments of the Beta integral bounding the Duhamel term in the
/// auxiliary norm. Both are positive exactly on admissible pairs.
inline std::pair<Num, Num> contraction_beta_arguments(const ModelParams& m, const SpaceIndex& lq,
                                                      const SpaceIndex& kp) {
    const Num d(m.d), al = m.alpha, one(1);
    const Num iqc = critical_inverse_q(m);
    const Num K = kp.scaling_sum(m.d);
    Num first = d * (al - one) / Num(2) * (iqc - K);
    Num second = d * al / Num(2) * (K + Num(2) / (d * al) - lq.scaling_sum(m.d));
    return {first, second};
}

// ============================================================================
// Feasibility intervals for the interpolation parameter theta
// ============================================================================

/// c0 + c1*theta > 0 (strict) or >= 0.
struct AffineConstraint {
    std::string label;
    Num c0, c1;
    bool strict;
};

struct ThetaInterval {
    Num lower, upper;
    bool lower_closed = true, upper_closed = false;
    bool nonempty = false;
    std::vector<std::string> binding_constraints;

    bool contains(double th) const {
        double lo = lower.value(), hi = upper.value();
        bool above = lower_closed ? th >= lo : th > lo;
        bool below = upper_closed ? th <= hi : th < hi;
        return nonempty && above && below;
    }
};

namespace detail {

/// Builds the affine form of f by evaluating at 0 and 1. Exact for affine f.
inline AffineConstraint affine(const std::string& label, bool strict, const std::function<Num(const Num&)>& f) {
    Num f0 = f(Num(0));
    Num f1 = f(Num(1));
    return {label, f0, f1 - f0, strict};
}

inline ThetaInterval intersect(const std::vector<AffineConstraint>& cs) {
    ThetaInterval out;
    bool have_lo = false, have_hi = false;
    std::vector<std::string> lo_lab, hi_lab, dead;
    for (const auto& c : cs) {
        int s = compare(c.c1, Num(0));
        if (s == 0) {
            int z = compare(c.c0, Num(0));
            if (z < 0 || (z == 0 && c.strict)) dead.push_back(c.label);
            continue;
        }
        Num root = -c.c0 / c.c1;
        if (s > 0) {  // theta > root or theta >= root
            int cmp = have_lo ? compare(root, out.lower) : 1;
            if (cmp > 0) {
                out.lower = root;
                out.lower_closed = !c.strict;
                lo_lab = {c.label};
                have_lo = true;
            } else if (cmp == 0) {
                out.lower_closed = out.lower_closed && !c.strict;
                lo_lab.push_back(c.label);
            }
        } else {
            int cmp = have_hi ? compare(root, out.upper) : -1;
            if (cmp < 0) {
                out.upper = root;
                out.upper_closed = !c.strict;
                hi_lab = {c.label};
                have_hi = true;
            } else if (cmp == 0) {
                out.upper_closed = out.upper_closed && !c.strict;
                hi_lab.push_back(c.label);
            }
        }
    }
    if (!have_lo || !have_hi) throw std::logic_error("theta constraints must bound both sides");
    out.nonempty = dead.empty() && out.lower < out.upper;
    out.binding_constraints = lo_lab;
    out.binding_constraints.insert(out.binding_constraints.end(), hi_lab.begin(), hi_lab.end());
    out.binding_constraints.insert(out.binding_constraints.end(), dead.begin(), dead.end());
    return out;
}

inline ThetaInterval fail_with(ThetaInterval iv, const AdmissibilityReport& hyp) {
    if (hyp.admissible()) return iv;
    iv.nonempty = false;
    for (auto& v : hyp.violated) iv.binding_constraints.push_back(v);
    for (auto& v : hyp.on_boundary) iv.binding_constraints.push_back(v);
    return iv;
}

}  // namespace detail

/// Raw conditions on theta for the linear-behaviour estimate, one affine
/// constraint per printed inequality.
inline std::vector<AffineConstraint> theta_linear_constraints(const ModelParams& m, const SpaceIndex& kp,
                                                              const SpaceIndex& k0p0, const Num& sigma) {
    const Num d(m.d), al = m.alpha, g = m.gamma, one(1);
    const Num k = kp.s, k0 = k0p0.s, ip = kp.q.inverse(), ip0 = k0p0.q.inverse();
    const Num K = kp.scaling_sum(m.d), K0 = k0p0.scaling_sum(m.d);
    const Num iqc = critical_inverse_q(m), sd = sigma / d;
    using detail::affine;
    std::vector<AffineConstraint> cs;
    cs.push_back(affine("theta.nonnegative", false, [&](const Num& t) { return t; }));
    cs.push_back(affine("theta.below_one_minus_inv_alpha", true, [&](const Num& t) { return one - one / al - t; }));
    cs.push_back(affine("linear.decay_gain", true,
                        [&](const Num& t) { return d / Num(2) * (sd - iqc) * (al - one - t * al); }));
    cs.push_back(affine("linear.weight", false,
                        [&](const Num& t) { return t * al * (k - k0) - (g - (al - one) * k0); }));
    cs.push_back(affine("linear.integrability_p", true,
                        [&](const Num& t) { return one / al - ip0 - t * (ip - ip0); }));
    cs.push_back(affine("linear.decay_pair_nonnegative", false, [&](const Num&) { return K0; }));
    cs.push_back(affine("linear.scaling_lower", false,
                        [&](const Num& t) { return t * al * (K - K0) - (g / d - (al - one) * K0); }));
    cs.push_back(affine("linear.scaling_upper", true,
                        [&](const Num& t) { return one + g / d - al * K0 - t * al * (K - K0); }));
    cs.push_back(affine("linear.time_integrability_origin", true,
                        [&](const Num& t) { return (al - one) * (iqc - K0) - t * al * (K - K0); }));
    cs.push_back(affine("linear.time_integrability_end", true, [&](const Num& t) {
        return Num(2) / (d * al) - sd + K0 + t * (sd - K0 - (iqc - K));
    }));
    return cs;
}

inline ThetaInterval theta_interval_linear(const ModelParams& m, const SpaceIndex& kp, const SpaceIndex& k0p0,
                                           const Num& sigma) {
    const Num d(m.d);
    if (!(Num(m.d) * critical_inverse_q(m) < sigma && sigma < d))
        throw std::invalid_argument("sigma must satisfy d/q_c < sigma < d");
    ThetaInterval iv = detail::intersect(theta_linear_constraints(m, kp, k0p0, sigma));
    AdmissibilityReport hyp = source_pair_conditions(m, kp);
    hyp.merge(decay_pair_conditions(m, kp, k0p0, sigma));
    return detail::fail_with(iv, hyp);
}

enum class ThetaKind { t11, t12, t21 };

inline const char* to_string(ThetaKind w) {
    switch (w) {
        case ThetaKind::t11: return "theta11";
        case ThetaKind::t12: return "theta12";
        default: return "theta21";
    }
}

/// Raw conditions for the complex-valued estimates. sigma2 is the decay of
/// the faster component.
inline std::vector<AffineConstraint> theta_complex_constraints(const ModelParams& m, const SpaceIndex& kp,
                                                               const SpaceIndex& k0p0, const Num& sigma2,
                                                               ThetaKind which) {
    const Num d(m.d), al = m.alpha, g = m.gamma, one(1), two(2), three(3);
    const Num k = kp.s, k0 = k0p0.s, ip = kp.q.inverse(), ip0 = k0p0.q.inverse();
    const Num K = kp.scaling_sum(m.d), K0 = k0p0.scaling_sum(m.d);
    const Num iqc = critical_inverse_q(m), sd = sigma2 / d;
    const Num A = iqc - K, B = sd - K0;
    using detail::affine;
    std::vector<AffineConstraint> cs;
    cs.push_back(affine("theta.nonnegative", false, [&](const Num& t) { return t; }));

    switch (which) {
        case ThetaKind::t11:
            cs.push_back(affine("theta.below_one", true, [&](const Num& t) { return one - t; }));
            cs.push_back(affine("t11.decay_gain", true, [&](const Num& t) { return (one - t) * d * (sd - iqc); }));
            cs.push_back(affine("t11.weight", false, [&](const Num& t) {
                return (al - three) * k + two * k0 + two * t * (k - k0) - g;
            }));
            cs.push_back(affine("t11.integrability_p", true, [&](const Num& t) {
                return one - ((al - two) * ip + two * ip0 + two * t * (ip - ip0));
            }));
            cs.push_back(affine("t11.scaling_lower", false, [&](const Num& t) {
                return (al - two) * K + two * K0 - g / d + two * t * (K - K0) - K;
            }));
            cs.push_back(affine("t11.scaling_upper", true, [&](const Num& t) {
                return one - ((al - two) * K + two * K0 - g / d + two * t * (K - K0));
            }));
            cs.push_back(affine("t11.time_integrability_origin", true, [&](const Num& t) {
                return (two + g) / d - ((al - three) * K + two * K0 + two * t * (K - K0));
            }));
            cs.push_back(affine("t11.time_integrability_end", true, [&](const Num& t) {
                return two / d - ((al - two) * A + two * B + two * t * (A - B));
            }));
            break;
        case ThetaKind::t12:
            cs.push_back(affine("theta.below_one", true, [&](const Num& t) { return one - t; }));
            cs.push_back(affine("t12.decay_gain", true, [&](const Num& t) {
                return d * (al - one) / two * (one - t) * (sd - iqc);
            }));
            cs.push_back(affine("t12.weight", false, [&](const Num& t) { return t * (k - k0) - (g / (al - one) - k0); }));
            cs.push_back(affine("t12.integrability_p", true, [&](const Num& t) {
                return (one / (al - one)) * (one - ip) - ip0 - t * (ip - ip0);
            }));
            cs.push_back(affine("t12.scaling_lower", false, [&](const Num& t) {
                return t * (al - one) * (K - K0) + (al - one) * K0 - g / d;
            }));
            cs.push_back(affine("t12.scaling_upper", true, [&](const Num& t) {
                return one - K - (t * (al - one) * (K - K0) + (al - one) * K0 - g / d);
            }));
            cs.push_back(affine("t12.time_integrability_origin", true, [&](const Num& t) {
                return iqc - K0 - t * (K - K0);
            }));
            cs.push_back(affine("t12.time_integrability_end", true, [&](const Num& t) {
                return two / d - (A + (al - one) * B + t * (al - one) * (A - B));
            }));
            break;
        case ThetaKind::t21:
            cs.push_back(affine("theta.below_two_thirds", true, [&](const Num& t) { return two / three - t; }));
            cs.push_back(affine("t21.decay_gain", true, [&](const Num& t) {
                return d / two * (two - three * t) * (sd - iqc);
            }));
            cs.push_back(affine("t21.weight", false, [&](const Num& t) {
                return (al - three) * k + two * k0 + three * t * (k - k0) - g;
            }));
            cs.push_back(affine("t21.integrability_p", true, [&](const Num& t) {
                return one - ((al - three) * ip + three * ip0 + three * t * (ip - ip0));
            }));
            cs.push_back(affine("t21.scaling_lower", false, [&](const Num& t) {
                return (al - three) * K + three * K0 - g / d + three * t * (K - K0) - K0;
            }));
            cs.push_back(affine("t21.scaling_upper", true, [&](const Num& t) {
                return one - ((al - three) * K + three * K0 - g / d + three * t * (K - K0));
            }));
            cs.push_back(affine("t21.time_integrability_origin", true, [&](const Num& t) {
                return two / d - ((al - three) * K + two * K0 + three * t * (K - K0) - g / d);
            }));
            cs.push_back(affine("t21.time_integrability_end", true, [&](const Num& t) {
                return two / d - ((al - three) * A + three * B + three * t * (A - B));
            }));
            break;
    }
    return cs;
}

/// Extra hypothesis for theta11 when alpha > 3 and the decay pair is larger.
inline AdmissibilityReport theta11_extra_condition(const ModelParams& m, const SpaceIndex& kp,
                                                   const SpaceIndex& k0p0) {
    ConstraintSet cs;
    const Num K = kp.scaling_sum(m.d), K0 = k0p0.scaling_sum(m.d);
    if (m.alpha > Num(3) && K < K0)
        cs.lt("t11.pair_mix_below_critical", (m.alpha - Num(2)) * K + K0, (Num(2) + m.gamma) / Num(m.d));
    return cs.report();
}

inline ThetaInterval theta_interval_complex(const ModelParams& m, const SpaceIndex& kp, const SpaceIndex& k0p0,
                                            const Num& sigma2, ThetaKind which) {
    const Num d(m.d);
    if (!(d * critical_inverse_q(m) < sigma2 && sigma2 < d))
        throw std::invalid_argument("sigma2 must satisfy d/q_c < sigma2 < d");
    ThetaInterval iv = detail::intersect(theta_complex_constraints(m, kp, k0p0, sigma2, which));
    AdmissibilityReport hyp = source_pair_conditions(m, kp);
    hyp.merge(decay_pair_conditions(m, kp, k0p0, sigma2));
    if (which == ThetaKind::t11) hyp.merge(theta11_extra_condition(m, kp, k0p0));
    return detail::fail_with(iv, hyp);
}

// ============================================================================
// Singular steady state and nonexistence exponents
// ============================================================================

/// Interval max{0, l + d/q - d} < kappa < d (l/d + 1/q - 1/q_c) for the log
/// correction of the obstructing data.
inline std::pair<Num, Num> nonexistence_kappa_window(const ModelParams& m, const SpaceIndex& lq) {
    const Num d(m.d);
    Num lo = max(Num(0), lq.s + d * lq.q.inverse() - d);
    Num hi = d * (lq.scaling_sum(m.d) - critical_inverse_q(m));
    return {lo, hi};
}

inline Num nonexistence_exponent(const ModelParams& m, const SpaceIndex& lq, const Num& kappa) {
    return Num::ratio(m.d, 2) * (lq.scaling_sum(m.d) - critical_inverse_q(m)) - kappa / Num(2);
}

}  // namespace hhlab
