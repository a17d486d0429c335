#include <gtest/gtest.h>

#include <cmath>

#include "hhlab/duhamel.hpp"
#include "hhlab/selfsimilar.hpp"

using namespace hhlab;

namespace {

constexpr int kNodes = 256;

GridPtr solver_grid(int d = 3) { return RadialGrid::logarithmic(d, 1e-3, 1e3, kNodes); }

ModelParams cubic(int a) {
    ModelParams m;
    m.d = 3;
    m.alpha = 3;
    m.a = a;
    return m;
}

SolverConfig short_run(double T = 1.0) {
    SolverConfig cfg;
    cfg.T = T;
    cfg.n_time = 24;
    return cfg;
}

RadialField bump(const GridPtr& g, double amp) {
    return RadialField::sample(g, [&](double r) { return amp * std::exp(-r * r); });
}

double rel_gap(const RadialField& a, const RadialField& b) { return (a - b).max_abs() / std::max(b.max_abs(), 1e-300); }

}  // namespace

TEST(Nonlinearity, ZeroAndPurelyImaginary) {
    auto g = solver_grid();
    EXPECT_EQ(nonlinearity(RadialField(g), cubic(-1)).max_abs(), 0.0);
    RadialField v = RadialField::sample(g, [](double r) { return std::exp(-r); });
    RadialField iv = v;
    iv *= cplx(0.0, 1.0);
    RadialField out = nonlinearity(iv, cubic(-1));
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = v[i].real();
        EXPECT_NEAR(out[i].real(), 0.0, 1e-300);
        EXPECT_NEAR(out[i].imag(), -x * x * x, 1e-14 * x * x * x);
    }
}

TEST(Duhamel, ZeroHistoryAndHomogeneity) {
    SemigroupCache cache;
    auto g = solver_grid();
    SolverConfig cfg = short_run();
    Trajectory hist;
    hist.times = time_mesh(cfg);
    hist.snapshots.assign(hist.times.size(), RadialField(g));
    EXPECT_EQ(duhamel_integral(hist, cfg.T, cubic(-1), cfg, cache).max_abs(), 0.0);

    for (std::size_t j = 0; j < hist.size(); ++j) hist.snapshots[j] = apply_semigroup(bump(g, 1.0), hist.times[j], cache);
    Trajectory doubled = hist;
    for (auto& s : doubled.snapshots) s *= 2.0;
    const double t = hist.times[hist.size() / 2];
    RadialField one = duhamel_integral(hist, t, cubic(-1), cfg, cache);
    RadialField two = duhamel_integral(doubled, t, cubic(-1), cfg, cache);
    one *= 8.0;
    EXPECT_LE(rel_gap(two, one), 1e-13);
    EXPECT_THROW(duhamel_integral(hist, 0.123456, cubic(-1), cfg, cache), std::invalid_argument);
}

TEST(Picard, LinearModelIsTheHeatFlow) {
    // Gaussian data evolve into wider Gaussians: an exact reference. The
    // stepped error accumulates over the mesh and falls at fourth order.
    SemigroupCache cache;
    double err[2];
    for (int k = 0; k < 2; ++k) {
        auto g = RadialGrid::logarithmic(3, 1e-3, 1e3, 256 << k);
        Trajectory tr = picard_iterate(gaussian_field(g, 0.5), cubic(0), short_run(), cache);
        ASSERT_TRUE(tr.converged);
        EXPECT_EQ(tr.iterations_used, 1);
        err[k] = 0.0;
        for (std::size_t j = 0; j < tr.size(); ++j)
            err[k] = std::max(err[k], rel_gap(tr.snapshots[j], gaussian_field(g, 0.5 + tr.times[j])));
    }
    EXPECT_LE(err[1], 1e-5);
    EXPECT_GE(err[0] / err[1], 8.0);
}

TEST(Picard, ZeroDataConvergesInOneIteration) {
    SemigroupCache cache;
    Trajectory tr = picard_iterate(RadialField(solver_grid()), cubic(-1), short_run(), cache);
    EXPECT_TRUE(tr.converged);
    EXPECT_FALSE(tr.diverged);
    EXPECT_EQ(tr.iterations_used, 1);
    for (const auto& s : tr.snapshots) EXPECT_EQ(s.max_abs(), 0.0);
}

TEST(Picard, RealDataStayReal) {
    SemigroupCache cache;
    Trajectory tr = picard_iterate(bump(solver_grid(), 1.0), cubic(-1), short_run(), cache);
    ASSERT_TRUE(tr.converged);
    for (const auto& s : tr.snapshots) EXPECT_TRUE(s.is_real());
}

TEST(Picard, SmallDataContractAtASteadyRate) {
    SemigroupCache cache;
    auto g = solver_grid();
    Trajectory tr = picard_iterate(homogeneous_data(0.05, 1.0, g), cubic(-1), short_run(), cache);
    ASSERT_TRUE(tr.converged);
    ASSERT_GE(tr.contraction_ratios.size(), 2u);
    double lo = 1.0, hi = 0.0;
    for (double q : tr.contraction_ratios) {
        EXPECT_LT(q, 1.0);
        lo = std::min(lo, q);
        hi = std::max(hi, q);
    }
    EXPECT_LT(hi / lo, 3.0);
    EXPECT_TRUE(smallness_report(tr, cubic(-1), short_run()).feasible);
}

TEST(Picard, DefocusingKeepsL1NonIncreasing) {
    SemigroupCache cache;
    Trajectory tr = picard_iterate(bump(solver_grid(), 2.0), cubic(-1), short_run(), cache);
    ASSERT_TRUE(tr.converged);
    const SpaceIndex l1(0, Exponent(1), Exponent(1));
    double prev = lorentz_quasi_norm(tr.initial, l1);
    for (std::size_t j = 0; j < tr.size(); ++j) {
        const double now = lorentz_quasi_norm(tr.snapshots[j], l1);
        EXPECT_LE(now, prev * (1 + 1e-9)) << tr.times[j];
        prev = now;
    }
}

TEST(Picard, ScalingEquivariance) {
    // u_lambda(t, x) = lambda u(lambda^2 t, lambda x) solves the same problem
    SemigroupCache cache;
    const ModelParams m = cubic(-1);
    auto base = solver_grid();
    Trajectory u = picard_iterate(bump(base, 1.0), m, short_run(), cache);
    ASSERT_TRUE(u.converged);
    for (double lam : {2.0, 4.0}) {
        std::vector<double> nodes = base->nodes();
        for (double& r : nodes) r /= lam;
        auto g = RadialGrid::from_nodes(3, nodes);
        RadialField phi = RadialField::sample(g, [&](double r) { return lam * std::exp(-lam * lam * r * r); });
        Trajectory v = picard_iterate(phi, m, short_run(1.0 / (lam * lam)), cache);
        ASSERT_TRUE(v.converged);
        ASSERT_EQ(v.size(), u.size());
        for (std::size_t j = 0; j < u.size(); ++j) {
            ASSERT_NEAR(v.times[j] * lam * lam, u.times[j], 1e-12 * u.times[j]);
            RadialField ref(g, u.snapshots[j].values());
            ref *= lam;
            EXPECT_LE((v.snapshots[j] - ref).max_abs() / ref.max_abs(), 1e-2) << "lambda=" << lam << " j=" << j;
        }
    }
}

TEST(Picard, ContinuousAtTimeZero) {
    // pairings against fixed Gaussians approach those of the data
    SemigroupCache cache;
    Trajectory tr = picard_iterate(bump(solver_grid(), 1.0), cubic(-1), short_run(), cache);
    Trajectory at0 = tr;
    at0.snapshots = {tr.initial};
    auto data = gaussian_pairings(at0);
    auto tracks = gaussian_pairings(tr);
    for (std::size_t w = 0; w < tracks.size(); ++w) {
        double prev = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            const double gap = std::fabs(tracks[w][j] - data[w][0]);
            EXPECT_GT(gap, prev);
            prev = gap;
        }
        EXPECT_LT(std::fabs(tracks[w][0] - data[w][0]), 1e-3 * std::fabs(data[w][0]));
    }
}

TEST(Blowup, FocusingLargeDataCrossTheCeiling) {
    SemigroupCache cache;
    const ModelParams m = cubic(1);
    SolverConfig cfg = short_run();
    Trajectory tr = picard_iterate(bump(solver_grid(), 20.0), m, cfg, cache);
    auto rep = blowup_monitor(tr, m, cfg.kato_index, cfg.ceiling);
    EXPECT_TRUE(tr.diverged);
    EXPECT_TRUE(rep.blew_up);
    EXPECT_LE(rep.crossing_time, cfg.T);
}

TEST(Blowup, ZeroSolutionNeverCrosses) {
    SemigroupCache cache;
    SolverConfig cfg = short_run();
    Trajectory tr = picard_iterate(RadialField(solver_grid()), cubic(1), cfg, cache);
    auto rep = blowup_monitor(tr, cubic(1), cfg.kato_index, cfg.ceiling);
    EXPECT_FALSE(rep.blew_up);
    EXPECT_EQ(rep.max_weighted_norm, 0.0);
}

TEST(Upgrade, IdentityPairReproducesTheAuxiliaryNorm) {
    SemigroupCache cache;
    const ModelParams m = cubic(-1);
    SolverConfig cfg = short_run();
    Trajectory tr = picard_iterate(homogeneous_data(0.05, 1.0, solver_grid()), m, cfg, cache);
    auto up = regularity_upgrade_probe(tr, m, cfg.kato_index, cfg.kato_index);
    EXPECT_NEAR(up.sup, kato_norm_critical(tr, m, cfg.kato_index), 1e-15 * up.sup);
    // leaving the allowed range of target indices is rejected
    EXPECT_THROW(regularity_upgrade_probe(tr, m, cfg.kato_index, SpaceIndex::weak(0, Exponent(2))),
                 std::invalid_argument);
}

TEST(System, ZeroSecondComponentReducesToTheScalarRun) {
    SemigroupCache cache;
    auto g = solver_grid();
    const ModelParams m = cubic(-1);
    RadialField phi = homogeneous_data(0.05, 1.0, g);
    auto [u1, u2] = solve_system(phi, RadialField(g), m, short_run(), Coupling::full, cache);
    Trajectory scalar = picard_iterate(phi, m, short_run(), cache);
    ASSERT_EQ(u1.size(), scalar.size());
    for (std::size_t j = 0; j < u1.size(); ++j) {
        EXPECT_EQ(u2.snapshots[j].max_abs(), 0.0);
        EXPECT_EQ((u1.snapshots[j] - scalar.snapshots[j]).max_abs(), 0.0);
    }
}

TEST(Config, RejectsBadSettings) {
    auto g = solver_grid();
    SolverConfig cfg = short_run();
    cfg.n_time = 8;
    EXPECT_THROW(cfg.validate(*g), std::invalid_argument);
    cfg = short_run(1e6);
    EXPECT_THROW(cfg.validate(*g), std::invalid_argument);
    cfg = short_run();
    cfg.extra_times = {0.5, 0.5, 2.0};
    auto ts = time_mesh(cfg);
    EXPECT_EQ(ts.size(), 25u);
    EXPECT_DOUBLE_EQ(ts.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(ts.begin(), ts.end()));
}
