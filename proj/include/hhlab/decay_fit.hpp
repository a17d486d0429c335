#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace hhlab {

enum class FitVerdict { consistent, inconsistent, inconclusive };

inline const char* to_string(FitVerdict v) {
    switch (v) {
        case FitVerdict::consistent: return "consistent";
        case FitVerdict::inconsistent: return "inconsistent";
        default: return "inconclusive";
    }
}

/// Least-squares line through (log t, log value).
struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_min = 0.0, t_max = 0.0;
    double predicted_slope = 0.0;
    double slope_tol = 0.0;
    std::size_t samples = 0;
    FitVerdict verdict = FitVerdict::inconclusive;
};

inline FitVerdict judge_slope(double slope, double r2, double predicted, double tol) {
    if (!(r2 >= 0.9)) return FitVerdict::inconclusive;
    return (std::fabs(slope - predicted) <= tol && r2 >= 0.99) ? FitVerdict::consistent : FitVerdict::inconsistent;
}

/// Fits the samples with t in [t_min, t_max]. Needs at least 8 samples
/// spanning 1.5 decades unless `relaxed` is set (used for short probes).
inline DecayFit decay_slope_fit(const std::vector<double>& times, const std::vector<double>& values, double t_min,
                                double t_max, double predicted, double slope_tol, bool relaxed = false) {
    if (times.size() != values.size()) throw std::invalid_argument("track and time grid differ in length");
    std::vector<double> x, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t_min * (1 - 1e-12) || times[i] > t_max * (1 + 1e-12)) continue;
        if (!(values[i] > 0.0) || !std::isfinite(values[i]))
            throw std::invalid_argument("decay fit needs positive finite values");
        x.push_back(std::log(times[i]));
        y.push_back(std::log(values[i]));
    }
    DecayFit fit;
    fit.predicted_slope = predicted;
    fit.slope_tol = slope_tol;
    fit.samples = x.size();
    if (x.size() < 2) throw std::invalid_argument("decay fit needs samples in the window");
    fit.t_min = std::exp(x.front());
    fit.t_max = std::exp(x.back());
    if (!relaxed && (x.size() < 8 || x.back() - x.front() < 1.5 * std::log(10.0) * (1 - 1e-9)))
        throw std::invalid_argument("decay fit needs >= 8 samples spanning >= 1.5 decades");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double e = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += e * e;
    }
    // a flat track leaves only rounding in syy; treat it as an exact fit
    const bool flat = syy <= 1e-24 * n * (1.0 + my * my);
    fit.r_squared = flat ? 1.0 : 1.0 - ss_res / syy;
    fit.verdict = judge_slope(fit.slope, fit.r_squared, predicted, slope_tol);
    return fit;
}

}  // namespace hhlab
