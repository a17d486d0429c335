#include <gtest/gtest.h>

#include <cmath>

#include "hhlab/asymptotics.hpp"

using namespace hhlab;

namespace {

GridPtr grid(int n = 256) { return RadialGrid::logarithmic(3, 1e-3, 1e3, n); }

ModelParams model(int d, int alpha, int a) {
    ModelParams m;
    m.d = d;
    m.alpha = alpha;
    m.a = a;
    return m;
}

std::vector<double> geometric(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    return out;
}

/// Closed-form heat flow of a unit Gaussian sampled on a time list.
Trajectory gaussian_history(const GridPtr& g, const std::vector<double>& ts) {
    Trajectory tr;
    tr.times = ts;
    for (double t : ts) tr.snapshots.push_back(gaussian_field(g, 1.0 + t));
    return tr;
}

const SpaceIndex kSup(0, Exponent::infinity(), Exponent::infinity());

}  // namespace

TEST(DecayFit, PowerLawsAndBadInput) {
    auto ts = geometric(1.0, 100.0, 12);
    std::vector<double> inv, flat(ts.size(), 3.0);
    for (double t : ts) inv.push_back(5.0 / t);
    auto f = decay_slope_fit(ts, inv, 1.0, 100.0, -1.0, 0.01);
    EXPECT_NEAR(f.slope, -1.0, 1e-12);
    EXPECT_NEAR(f.r_squared, 1.0, 1e-12);
    EXPECT_EQ(f.verdict, FitVerdict::consistent);
    auto c = decay_slope_fit(ts, flat, 1.0, 100.0, 0.0, 0.01);
    EXPECT_NEAR(c.slope, 0.0, 1e-12);
    EXPECT_EQ(c.verdict, FitVerdict::consistent);
    EXPECT_EQ(decay_slope_fit(ts, inv, 1.0, 100.0, -2.0, 0.01).verdict, FitVerdict::inconsistent);
    EXPECT_THROW(decay_slope_fit(ts, inv, 1.0, 10.0, -1.0, 0.01), std::invalid_argument);  // one decade
    inv[3] = 0.0;
    EXPECT_THROW(decay_slope_fit(ts, inv, 1.0, 100.0, -1.0, 0.01), std::invalid_argument);
}

TEST(DecayFit, ScatterIsInconclusive) {
    auto ts = geometric(1.0, 100.0, 12);
    std::vector<double> v;
    for (std::size_t i = 0; i < ts.size(); ++i) v.push_back(i % 2 ? 1.0 : 3.0);
    EXPECT_EQ(decay_slope_fit(ts, v, 1.0, 100.0, 0.0, 0.01).verdict, FitVerdict::inconclusive);
}

TEST(Comparison, TrajectoryAgainstItselfIsIdentical) {
    auto tr = gaussian_history(grid(), geometric(1.0, 100.0, 16));
    auto rep = compare_trajectories(tr, tr, kSup, 1.0, 100.0, -1.5, 0.2);
    EXPECT_TRUE(rep.identical);
    EXPECT_TRUE(std::isinf(rep.delta));
    EXPECT_EQ(rep.excess_verdict, FitVerdict::consistent);
}

TEST(Comparison, KnownExcessDecay) {
    // u = v (1 + eps/t): ||v - u|| / ||v|| = eps / t exactly
    auto g = grid();
    auto ts = geometric(1.0, 100.0, 16);
    Trajectory v = gaussian_history(g, ts), u = v, w = v;
    for (std::size_t j = 0; j < ts.size(); ++j) {
        u.snapshots[j] *= 1.0 + 0.1 / ts[j];
        w.snapshots[j] *= 1.1;
    }
    auto rep = compare_trajectories(v, u, kSup, 1.0, 100.0, -1.5, 0.2);
    EXPECT_NEAR(rep.delta, 1.0, 1e-9);
    EXPECT_EQ(rep.excess_verdict, FitVerdict::consistent);
    // a constant relative gap never decays
    auto flat = compare_trajectories(v, w, kSup, 1.0, 100.0, -1.5, 0.2);
    EXPECT_NEAR(flat.delta, 0.0, 1e-9);
    EXPECT_EQ(flat.excess_verdict, FitVerdict::inconsistent);
    Trajectory shifted = v;
    shifted.times[0] *= 1.01;
    EXPECT_THROW(compare_trajectories(shifted, v, kSup, 1.0, 100.0, -1.5, 0.2), std::invalid_argument);
}

TEST(Comparison, HeatFlowDecaySweepOverSigma) {
    // ||e^{t Delta} omega |x|^{-sigma}||_inf = c t^{-sigma/2}
    SemigroupCache cache;
    auto g = grid();
    SolverConfig cfg;
    cfg.T = 100.0;
    cfg.n_time = 24;
    cfg.extra_times = {cfg.T * std::pow(10.0, -1.5)};
    for (Num sigma : {Num::ratio(11, 10), Num::ratio(3, 2), Num(2), Num::ratio(5, 2)}) {
        Trajectory tr = picard_iterate(homogeneous_data(0.1, sigma.value(), g), model(3, 3, 0), cfg, cache);
        const Num pred = linear_decay_slope(3, sigma, kSup);
        EXPECT_EQ(pred, -sigma / Num(2));
        auto rep = compare_trajectories(tr, tr, kSup, fit_window_start(cfg.T), cfg.T, pred.value(), 0.01);
        EXPECT_EQ(rep.base_fit.verdict, FitVerdict::consistent) << sigma.str() << " slope " << rep.base_fit.slope;
        EXPECT_LT(rep.two_sided_constant, 1.01);
    }
}

TEST(Behavior, ZeroPerturbationIsIdentical) {
    SemigroupCache cache;
    SolverConfig cfg;
    cfg.T = 100.0;
    cfg.n_time = 24;
    auto run = nonlinear_behavior_check(model(3, 3, -1), SpaceIndex::weak(0, Exponent::infinity()), 0.05,
                                        RadialField(grid()), cfg, 0.05, kDefaultDeltaMin, cache);
    EXPECT_TRUE(run.report.identical);
    EXPECT_EQ(run.report.excess_verdict, FitVerdict::consistent);
}

TEST(Behavior, LinearCheckRejectsCriticalDecay) {
    SolverConfig cfg;
    cfg.T = 100.0;
    EXPECT_THROW(linear_behavior_check(model(3, 3, -1), Num(1), SpaceIndex::weak(0, Exponent::infinity()), 0.05,
                                       RadialField(grid()), cfg),
                 std::invalid_argument);
}

TEST(Nonexistence, ExponentAndWindow) {
    const auto m = model(1, 4, 1);
    const SpaceIndex l1(0, Exponent(1), Exponent(1));
    auto taus = geometric(1e-12, 1e-4, 17);
    auto rep = nonexistence_certificate(m, l1, Num::ratio(1, 6), taus, 8.0);
    EXPECT_EQ(rep.exponent, Num::ratio(1, 12));
    EXPECT_EQ(rep.kappa_lo, Num(0));
    EXPECT_EQ(rep.kappa_hi, Num::ratio(1, 3));
    EXPECT_EQ(rep.verdict, FitVerdict::consistent);
    EXPECT_EQ(rep.certified_below, taus.back());
    for (std::size_t i = 0; i < taus.size(); ++i) EXPECT_GT(rep.lower[i], rep.upper[i]);
    EXPECT_EQ(nonexistence_certificate(m, l1, Num::ratio(1, 3), taus, 8.0).verdict, FitVerdict::inconclusive);
    EXPECT_THROW(nonexistence_certificate(m, l1, Num::ratio(1, 2), taus, 8.0), std::invalid_argument);
}

TEST(Nonexistence, RejectsCriticalPairAndLowPower) {
    auto taus = geometric(1e-12, 1e-4, 5);
    // 1/q_c = 2/3 for d = 1, alpha = 4; l = -1/3 puts (l, 1) on the critical line
    const auto m = model(1, 4, 1);
    const SpaceIndex critical(Num::ratio(-1, 3), Exponent(1), Exponent(1));
    ASSERT_EQ(classify_pair(m, critical).cls, Criticality::critical);
    EXPECT_THROW(nonexistence_certificate(m, critical, Num::ratio(1, 12), taus), std::invalid_argument);
    const SpaceIndex l1(0, Exponent(1), Exponent(1));
    EXPECT_THROW(nonexistence_certificate(model(1, 3, 1), l1, Num::ratio(1, 12), taus), std::invalid_argument);
}

TEST(Nonexistence, CertifiedRangeShrinksAsKappaGrows) {
    const auto m = model(1, 4, 1);
    const SpaceIndex l1(0, Exponent(1), Exponent(1));
    auto taus = geometric(1e-12, 1e-1, 45);
    double prev = 1.0;
    for (Num k : {Num::ratio(1, 24), Num::ratio(1, 12), Num::ratio(1, 6), Num::ratio(1, 4), Num::ratio(3, 10)}) {
        auto rep = nonexistence_certificate(m, l1, k, taus, 8.0);
        EXPECT_LE(rep.certified_below, prev) << k.str();
        EXPECT_GT(rep.certified_below, 0.0) << k.str();
        prev = rep.certified_below;
    }
    EXPECT_LT(prev, 1e-1);
}
