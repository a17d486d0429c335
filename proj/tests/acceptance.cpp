// Acceptance run: one PASS/FAIL line per criterion, measured values alongside.
// Scenario parameters come from the preset files so the numbers match `hhlab run`.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "hhlab/experiment.hpp"
#include "theta_oracle.hpp"

using namespace hhlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::vector<double> geometric(double lo, double hi, int n) {
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / (n - 1)));
    return out;
}

ExperimentConfig preset(const std::string& name) { return load_config(preset_path(name)); }

GridPtr grid_of(const ExperimentConfig& c) {
    return RadialGrid::logarithmic(c.model.d, c.grid.r_min, c.grid.r_max, c.grid.nodes);
}

RadialField bump(const GridPtr& g, double amplitude) {
    return RadialField::sample(g, [&](double r) { return amplitude * std::exp(-r * r); });
}

std::string excess_text(const ComparisonReport& r) {
    return fmt::format("base slope {:.4f} (predicted {:.4f}, r2 {:.4f}), delta {:.4f} (r2 {:.4f})", r.base_fit.slope,
                       r.base_fit.predicted_slope, r.base_fit.r_squared, r.delta, r.excess_decay.r_squared);
}

bool excess_ok(const ComparisonReport& r, double delta_min) {
    return r.identical || (r.delta >= delta_min && r.excess_decay.r_squared >= 0.99);
}

// 1. semigroup law on Gaussians
Outcome semigroup_exactness() {
    double worst = 0.0;
    for (int d : {1, 3}) {
        SemigroupCache cache;
        auto g = RadialGrid::logarithmic(d, 1e-4, 1e4, 1024);
        for (double s : {0.1, 1.0})
            for (double t : {0.4, 2.0}) {
                RadialField exact = gaussian_field(g, s + t);
                worst = std::max(worst, (apply_semigroup(gaussian_field(g, s), t, cache) - exact).max_abs() / exact.max_abs());
            }
    }
    return {worst <= 1e-6, fmt::format("max relative error {:.3e} (limit 1e-6)", worst)};
}

// 2. decay slopes of e^{t Delta} G_1
Outcome smoothing_slopes() {
    bool pass = true;
    std::string detail;
    const auto ts = geometric(1.0, 100.0, 16);
    const SpaceIndex sup(0, Exponent::infinity(), Exponent::infinity());
    for (int d : {1, 3}) {
        SemigroupCache cache;
        auto g = RadialGrid::logarithmic(d, 1e-4, 1e4, 1024);
        auto probe = smoothing_estimate_probe(gaussian_field(g, 1.0), SpaceIndex(0, 1, 1), sup, ts, 0.02, cache);
        const double target = -0.5 * d;
        const bool ok = std::fabs(probe.fit.slope - target) <= 0.02 * std::fabs(target);
        pass = pass && ok;
        detail += fmt::format("d={} sup slope {:.4f} vs {:.2f}; ", d, probe.fit.slope, target);
    }
    SemigroupCache cache;
    auto g = RadialGrid::logarithmic(3, 1e-4, 1e4, 1024);
    const SpaceIndex from(0, 1, 1), to(Num::ratio(-1, 2), 2, Exponent::infinity());
    const double lemma = smoothing_exponent(3, from, to).value();
    auto weighted = smoothing_estimate_probe(gaussian_field(g, 1.0), from, to, ts, 0.03, cache);
    const bool ok = std::fabs(weighted.fit.slope - lemma) <= 0.03 * std::fabs(lemma);
    pass = pass && ok;
    auto late = smoothing_estimate_probe(gaussian_field(g, 1.0), from, to, geometric(100.0, 1e4, 16), 0.03, cache);
    detail += fmt::format("weighted slope {:.4f} vs {:.4f} (t in [1e2,1e4]: {:.4f})", weighted.fit.slope, lemma,
                          late.fit.slope);
    return {pass, detail};
}

// 3. singular steady state
Outcome steady_state_oracle() {
    SemigroupCache cache;
    auto c = preset("steady_state_oracle");
    auto g = grid_of(c);
    const double residual = steady_state_residual(c.model, g, 1.0, 10.0);
    RadialField swept = steady_state_sweep(c.model, g, c.solver, cache);
    RadialField exact = steady_state_field(c.model, g);
    double err = 0.0, top = 0.0;
    for (std::size_t i = 0; i < g->size(); ++i) {
        if (g->node(i) < 1.0 || g->node(i) > 10.0) continue;
        err = std::max(err, std::abs(swept[i] - exact[i]));
        top = std::max(top, std::abs(exact[i]));
    }
    const double coef = singular_steady_state(c.model).coefficient;
    const bool pass = residual <= 1e-6 && err / top <= 1e-3 && std::fabs(coef - std::cbrt(2.0 / 9.0)) < 1e-15;
    return {pass, fmt::format("L = {:.12f}, residual {:.3e}, sweep error {:.3e}", coef, residual, err / top)};
}

// 4. forward self-similar solution
Outcome self_similarity() {
    SemigroupCache cache;
    auto c = preset("selfsimilar_d3");
    Trajectory tr = construct_self_similar(c.model, c.data.amplitude, grid_of(c), c.solver, cache);
    const double T = c.solver.T, sigma = c.model.critical_decay().value();
    const double dev = invariance_deviation(profile_extract(tr, T, sigma), profile_extract(tr, T / 16.0, sigma),
                                            SpaceIndex(0, Exponent::infinity(), Exponent::infinity()), 0.1, 10.0);
    const double ratio = tr.contraction_ratios.empty() ? 0.0 : tr.contraction_ratios.back();
    return {tr.converged && ratio < 1.0 && dev < 0.02,
            fmt::format("converged {} in {} iterations, last ratio {:.3e}, deviation {:.3e}", tr.converged,
                        tr.iterations_used, ratio, dev)};
}

BehaviorRun nonlinear_run(SemigroupCache& cache) {
    auto c = preset("nonlinear_asymptotics");
    return nonlinear_behavior_check(c.model, SpaceIndex::weak(0, Exponent::infinity()), c.data.amplitude,
                                    bump(grid_of(c), c.data.perturbation), c.solver, 0.05, kDefaultDeltaMin, cache);
}

// 5. nonlinear large-time behavior
Outcome nonlinear_asymptotics(const BehaviorRun& run) {
    const auto& r = run.report;
    const bool base = std::fabs(r.base_fit.slope + 0.5) <= 0.05 * 0.5 && r.base_fit.r_squared >= 0.99;
    return {base && excess_ok(r, 0.05), excess_text(r)};
}

// 6. linear large-time behavior
Outcome linear_asymptotics() {
    SemigroupCache cache;
    auto c = preset("linear_asymptotics");
    auto run = linear_behavior_check(c.model, *c.data.sigma, SpaceIndex::weak(0, Exponent::infinity()), c.data.amplitude,
                                     bump(grid_of(c), c.data.perturbation), c.solver, 0.05, 0.0, cache);
    const auto& r = run.report;
    const double target = -c.data.sigma->value() / 2.0;
    const bool base = std::fabs(r.base_fit.slope - target) <= 0.05 * std::fabs(target) && r.base_fit.r_squared >= 0.99;
    return {base && (r.identical || (r.delta > 0.0 && r.excess_decay.r_squared >= 0.99)), excess_text(r)};
}

// 7. complex data, critical first component
Outcome complex_case3(const BehaviorRun& scalar) {
    SemigroupCache cache;
    auto c = preset("complex_case3");
    auto g = grid_of(c);
    const SpaceIndex sup = SpaceIndex::weak(0, Exponent::infinity());
    auto run = complex_combined_check(c.model, *c.data.sigma, *c.data.sigma2, c.data.amplitude, c.data.amplitude2,
                                      bump(g, c.data.perturbation), sup, sup, c.solver, ComplexCase::case3, 0.05,
                                      kDefaultDeltaMin, cache);
    const bool decay = excess_ok(run.driving, 0.05) && excess_ok(run.driven, 0.05);
    // omega2 = 0 must reproduce the scalar run of criterion 5 exactly
    auto reduced = complex_combined_check(c.model, *c.data.sigma, *c.data.sigma2, c.data.amplitude, 0.0,
                                          bump(g, c.data.perturbation), sup, sup, c.solver, ComplexCase::case3, 0.05,
                                          kDefaultDeltaMin, cache);
    bool same = reduced.u1.times == scalar.solution.times && reduced.scalar.times == scalar.reference.times;
    for (std::size_t j = 0; same && j < reduced.u1.size(); ++j) {
        same = reduced.u1.snapshots[j].values() == scalar.solution.snapshots[j].real_part().values() &&
               reduced.scalar.snapshots[j].values() == scalar.reference.snapshots[j].values() &&
               reduced.u2.snapshots[j].max_abs() == 0.0;
    }
    return {decay && same, fmt::format("delta1 {:.4f} (r2 {:.4f}), delta2 {:.4f} (r2 {:.4f}), omega2=0 reduction {}",
                                       run.driving.delta, run.driving.excess_decay.r_squared, run.driven.delta,
                                       run.driven.excess_decay.r_squared, same ? "bit-identical" : "differs")};
}

// 8. interpolation-parameter intervals against a brute-force scan
Outcome theta_feasibility() {
    ModelParams m;
    const SpaceIndex kp = SpaceIndex::weak(0, Exponent(6));
    auto iv = theta_interval_linear(m, kp, kp, Num::ratio(6, 5));
    const bool example = iv.nonempty && iv.lower == Num::ratio(1, 6) && iv.upper == Num::ratio(2, 3) &&
                         !iv.lower_closed && !iv.upper_closed;
    auto cases = oracle::random_cases(50, 7, false);
    int agree = 0;
    for (const auto& c : cases) {
        auto s = oracle::scan([&](double t) { return oracle::linear_ok(c.x, t); });
        agree += oracle::agrees(theta_interval_linear(c.m, c.kp, c.k0p0, c.sigma), s);
    }
    return {example && cases.size() == 50 && agree == 50,
            fmt::format("worked example ({}, {}), scan agreement {}/{}", iv.lower.str(), iv.upper.str(), agree,
                        cases.size())};
}

// 9. nonexistence certificate
Outcome nonexistence() {
    auto c = preset("nonexistence");
    const SpaceIndex l1(0, 1, 1);
    auto taus = geometric(1e-12, 1e-4, 33);
    auto rep = nonexistence_certificate(c.model, l1, Num::ratio(1, 6), taus, c.get_double("check.nonexistence.C", 1.0));
    bool all = true;
    for (std::size_t i = 0; i < taus.size(); ++i) all = all && rep.lower[i] > rep.upper[i];
    return {all && rep.exponent == Num::ratio(1, 12),
            fmt::format("exponent {}, lower > upper at all {} tau <= 1e-4: {}", rep.exponent.str(), taus.size(), all)};
}

// 10. Lorentz unit identities and dilation law
Outcome lorentz_identities() {
    const auto inf = Exponent::infinity();
    bool pass = true;
    auto check = [&](bool ok) { pass = pass && ok; };
    auto ind = RadialField(RadialGrid::from_edges(1, {0.0, 1.0, 2.0}), {1.0, 0.0});
    check(distribution_function(ind, 0.0, 0.5) == 2.0);
    check(distribution_function(ind, 0.0, 1e300) == 0.0);
    auto r = decreasing_rearrangement(ind, 0.0);
    check(r(1.999) == 1.0 && r(2.0) == 0.0);
    check(lorentz_quasi_norm(ind, SpaceIndex(0, 2, inf)) == std::sqrt(2.0));
    auto two = decreasing_rearrangement(RadialField(RadialGrid::from_edges(1, {0.0, 0.5, 2.0}), {2.0, 1.0}), 0.0);
    check(two.levels == std::vector<double>{2.0, 1.0} && two.breakpoints == std::vector<double>{0.0, 1.0, 4.0});
    auto ind3 = ind;
    ind3 *= 3.0;
    check(decreasing_rearrangement(ind3, 0.0).levels.front() == 3.0);

    // |x|^{-1/2} on |x| <= 1 with 1/4 as a cell edge. The left-edge step lies above
    // the function off the first cell and its level set {> 2} is exactly |x| <= 1/4; the right-edge
    // step lies below and t^{1/2} f*(t) reaches sqrt(2) at every breakpoint
    std::vector<double> edges{0.0};
    for (int i = 0; i <= 240; ++i) edges.push_back(1e-6 * std::pow(1e6, i / 240.0));
    edges.back() = 1.0;
    edges.insert(std::upper_bound(edges.begin(), edges.end(), 0.25), 0.25);
    edges.push_back(2.0);
    auto grid1 = RadialGrid::from_edges(1, edges);
    std::vector<cplx> above{1.0 / std::sqrt(edges[1])}, below;
    for (std::size_t i = 2; i + 1 < edges.size(); ++i) above.push_back(1.0 / std::sqrt(edges[i - 1]));
    for (std::size_t i = 1; i + 1 < edges.size(); ++i) below.push_back(1.0 / std::sqrt(edges[i]));
    above.push_back(0.0);
    below.push_back(0.0);
    const double dist = distribution_function(RadialField(grid1, above), 0.0, 2.0);
    RadialField root(grid1, below);
    const double norm = lorentz_quasi_norm(root, SpaceIndex(0, 2, inf));
    check(std::fabs(dist - 0.5) <= 1e-15 && std::fabs(norm - std::sqrt(2.0)) <= 4e-16);

    // dilation f_lambda(x) = lambda f(lambda x) in d = 3
    auto g = RadialGrid::logarithmic(3, std::pow(2.0, -20), std::pow(2.0, 20), 641);
    auto f = [](double x) { return std::exp(-x * x) * (1.0 + x); };
    RadialField base = RadialField::sample(g, f);
    double worst = 0.0;
    for (double lambda : {2.0, 4.0}) {
        RadialField dil = RadialField::sample(g, [&](double x) { return lambda * f(lambda * x); });
        for (const auto& idx : {SpaceIndex(0, 3, inf), SpaceIndex(0, 2, 2), SpaceIndex(Num::ratio(1, 2), 6, 3)}) {
            const double expo = 1.0 - idx.s.value() - 3.0 * idx.q.inverse().value();
            const double rhs = std::pow(lambda, expo) * lorentz_quasi_norm(base, idx);
            worst = std::max(worst, std::fabs(lorentz_quasi_norm(dil, idx) - rhs) / rhs);
        }
    }
    check(worst <= 1e-2);
    return {pass, fmt::format("closed-form examples {}, |x|^(-1/2): distribution {:.17g}, norm - sqrt2 = {:.1e}; "
                              "dilation worst {:.2e}",
                              pass ? "exact" : "mismatch", dist, norm - std::sqrt(2.0), worst)};
}

// 11. stability of nearby critical solutions
Outcome stability() {
    SemigroupCache cache;
    auto c = preset("stability");
    auto g = grid_of(c);
    RadialField phi = homogeneous_data(c.data.amplitude, c.model.critical_decay().value(), g);
    RadialField psi = phi;
    const double b = c.get_double("check.stability.bump", 0.02);
    psi += RadialField::sample(g, [&](double r) { return r < 1.0 ? b * std::pow(1 - r * r, 2) : 0.0; });
    auto lq = parse_space("check.stability.space", c.get("check.stability.space", ""), false);
    auto rep = stability_check(c.model, lq, phi, psi, c.solver, cache);
    return {rep.holds(0.1), fmt::format("monotone over last decade {}, final/initial {:.4f}", rep.monotone_last_decade,
                                        rep.final_fraction)};
}

}  // namespace

int main() {
    SemigroupCache shared;
    BehaviorRun scalar;
    struct Criterion {
        int id;
        std::string name;
        double budget_s;
        std::function<Outcome()> run;
    };
    std::vector<Criterion> list = {
        {1, "semigroup exactness", 5, semigroup_exactness},
        {2, "smoothing-estimate slopes", 30, smoothing_slopes},
        {3, "steady-state oracle", 60, steady_state_oracle},
        {4, "self-similarity", 300, self_similarity},
        {5, "nonlinear asymptotics", 600,
         [&] {
             scalar = nonlinear_run(shared);
             return nonlinear_asymptotics(scalar);
         }},
        {6, "linear asymptotics", 600, linear_asymptotics},
        {7, "complex combined behavior", 1200, [&] { return complex_case3(scalar); }},
        {8, "theta feasibility", 10, theta_feasibility},
        {9, "nonexistence certificate", 10, nonexistence},
        {10, "Lorentz unit identities", 5, lorentz_identities},
        {11, "stability", 600, stability},
    };
    int failures = 0;
    for (auto& c : list) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = c.run();
        } catch (const std::exception& e) {
            out = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_s;
        const bool pass = out.pass && in_time;
        failures += !pass;
        std::cout << fmt::format("{} criterion {:>2} {}: {} [{:.1f} s of {:.0f} s]", pass ? "PASS" : "FAIL", c.id, c.name,
                                 out.detail, secs, c.budget_s)
                  << std::endl;
        if (c.id == 7) scalar = BehaviorRun{};
    }
    std::cout << fmt::format("{} of {} criteria passed", list.size() - failures, list.size()) << std::endl;
    return failures == 0 ? 0 : 1;
}
