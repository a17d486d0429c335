#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "hhlab/exponents.hpp"
#include "hhlab/lorentz.hpp"
#include "hhlab/radial_field.hpp"

namespace hhlab {

/// Mild solution sampled on the time mesh (t = 0 excluded; the data is kept
/// separately in `initial`).
struct Trajectory {
    std::vector<double> times;
    std::vector<RadialField> snapshots;
    RadialField initial;
    std::map<std::string, std::vector<double>> recorded_norms;
    int iterations_used = 0;
    bool converged = false;
    bool diverged = false;
    std::vector<double> contraction_ratios;
    std::vector<double> distances;  ///< relative Picard increments per iteration
    double linear_kato_norm = 0.0;  ///< rho: auxiliary norm of e^{t Delta} phi
    bool grading_starved = false;

    bool empty() const { return times.empty(); }
    std::size_t size() const { return times.size(); }

    std::size_t index_of(double t) const {
        for (std::size_t j = 0; j < times.size(); ++j)
            if (std::fabs(times[j] - t) <= 1e-12 * std::max(1.0, std::fabs(t))) return j;
        throw std::invalid_argument("time " + std::to_string(t) + " is not a recorded time");
    }

    std::vector<double> norm_track(const SpaceIndex& idx) const {
        std::vector<double> out(times.size());
        for (std::size_t j = 0; j < times.size(); ++j) out[j] = lorentz_quasi_norm(snapshots[j], idx);
        return out;
    }

    void record(const SpaceIndex& idx) { recorded_norms[idx.str()] = norm_track(idx); }
};

/// sup_t t^{(d/2)(l/d + 1/q - k/d - 1/p)} ||u(t)||_{L^{p,inf}_k}.
inline double kato_norm(const Trajectory& traj, const ModelParams& m, const SpaceIndex& lq, const SpaceIndex& kp) {
    if (traj.empty()) throw std::invalid_argument("kato norm of an empty trajectory");
    auto rep = kato_pair_conditions(m, lq, kp);
    if (!rep.admissible()) throw std::invalid_argument("auxiliary pair not allowed: " + rep.summary());
    const double beta = kato_time_exponent(m.d, lq, kp).value();
    const SpaceIndex weak = SpaceIndex::weak(kp.s, kp.q);
    double best = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j)
        best = std::max(best, std::pow(traj.times[j], beta) * lorentz_quasi_norm(traj.snapshots[j], weak));
    return best;
}

/// Critical-data version: the weight exponent is (d/2)(1/q_c - k/d - 1/p).
inline double kato_norm_critical(const Trajectory& traj, const ModelParams& m, const SpaceIndex& kp) {
    const double beta = (Num::ratio(m.d, 2) * (critical_inverse_q(m) - kp.scaling_sum(m.d))).value();
    const SpaceIndex weak = SpaceIndex::weak(kp.s, kp.q);
    double best = 0.0;
    for (std::size_t j = 0; j < traj.size(); ++j)
        best = std::max(best, std::pow(traj.times[j], beta) * lorentz_quasi_norm(traj.snapshots[j], weak));
    return best;
}

}  // namespace hhlab
