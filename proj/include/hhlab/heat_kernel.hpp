#pragma once

#include <array>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "hhlab/decay_fit.hpp"
#include "hhlab/exponents.hpp"
#include "hhlab/lorentz.hpp"
#include "hhlab/radial_field.hpp"

namespace hhlab {

struct KernelOptions {
    bool general_dimension = false;  ///< allow d outside {1, 3} (Bessel route)
    double cutoff = 16.0;            ///< ignore |r - rho| > cutoff * sqrt(t)
};

/// (4 pi t)^{-d/2} exp(-|x|^2 / 4t).
inline double gaussian_kernel_value(int d, double t, double x) {
    if (!(t > 0.0)) throw std::invalid_argument("heat kernel needs t > 0");
    return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(-x * x / (4.0 * t));
}

/// Restricted radial Gaussian G_s sampled on a grid.
inline RadialField gaussian_field(const GridPtr& g, double s, double amplitude = 1.0) {
    const int d = g->dim();
    return RadialField::sample(g, [&](double r) { return amplitude * gaussian_kernel_value(d, s, r); });
}

namespace detail {

/// exp(-z) I_nu(z) for z >= 0.
inline double scaled_bessel_i(double nu, double z) {
    if (z < 500.0) return std::cyl_bessel_i(nu, z) * std::exp(-z);
    // Hankel expansion; eight terms are far below double precision at z >= 500.
    const double mu = 4.0 * nu * nu;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 8; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (k * 8.0 * z);
        sum += term;
    }
    return sum / std::sqrt(2.0 * M_PI * z);
}

/// Angular-integrated kernel divided by the one-dimensional Gaussian
/// (4 pi t)^{-1/2} exp(-(r - rho)^2 / 4t). Smooth and O(1) in rho.
inline double angular_factor(int d, double t, double r, double rho, bool general) {
    const double x = r * rho / t;  // = 2z
    if (d == 1) return 1.0 + std::exp(-x);
    if (d == 3) return rho / r * -std::expm1(-x);
    if (!general) throw std::invalid_argument("dimensions other than 1 and 3 need KernelOptions::general_dimension");
    const double z = 0.5 * x;
    const double nu = 0.5 * d - 1.0;
    const double pre = std::pow(4.0 * M_PI * t, -0.5 * (d - 1)) * std::pow(rho, d - 1) * std::pow(2.0 * M_PI, 0.5 * d);
    if (z < 1e-12) return pre * std::pow(2.0, -nu) / std::tgamma(nu + 1.0);
    return pre * std::pow(z, -nu) * scaled_bessel_i(nu, z);
}

/// erf(b) - erf(a) without cancellation in the tails.
inline double erf_diff(double a, double b) {
    if (a >= 0.0) return std::erfc(a) - std::erfc(b);
    if (b <= 0.0) return std::erfc(-b) - std::erfc(-a);
    return std::erf(b) - std::erf(a);
}

constexpr std::array<double, 8> gl_x = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                        -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                        0.7966664774136267,  0.9602898564975363};
constexpr std::array<double, 8> gl_w = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                        0.2223810344533745, 0.1012285362903763};

/// Monomial coefficients of the cubic Lagrange basis on the Chebyshev
/// points of [-1, 1]: basis_c(y) = sum_n cheb_basis()[c][n] y^n.
struct ChebCubic {
    std::array<double, 4> y;
    std::array<std::array<double, 4>, 4> coef;
    ChebCubic() {
        for (int c = 0; c < 4; ++c) y[c] = std::cos((2 * c + 1) * M_PI / 8.0);
        for (int c = 0; c < 4; ++c) {
            // expand prod_{m != c} (y - y_m) / (y_c - y_m)
            std::array<double, 4> p = {1, 0, 0, 0};
            double den = 1.0;
            int deg = 0;
            for (int m = 0; m < 4; ++m) {
                if (m == c) continue;
                std::array<double, 4> q = {0, 0, 0, 0};
                for (int n = 0; n <= deg; ++n) {
                    q[n + 1] += p[n];
                    q[n] -= y[m] * p[n];
                }
                p = q;
                ++deg;
                den *= y[c] - y[m];
            }
            for (int n = 0; n < 4; ++n) coef[c][n] = p[n] / den;
        }
    }
};

inline const ChebCubic& cheb_cubic() {
    static const ChebCubic c;
    return c;
}

/// One piece of the piecewise interpolant: [a, b] with stencil nodes.
struct Piece {
    double a, b;
    int first;  ///< first stencil node
    int count;  ///< 1 (constant) or 4 (cubic)
};

inline std::vector<Piece> make_pieces(const RadialGrid& g) {
    const int n = static_cast<int>(g.size());
    std::vector<Piece> ps;
    const double e0 = g.edges().front();
    if (e0 > 0.0) ps.push_back({0.0, e0, 0, 1});
    if (n >= 4) {
        if (g.node(0) > e0) ps.push_back({e0, g.node(0), 0, 4});
        for (int j = 0; j + 1 < n; ++j) {
            int s = std::min(std::max(j - 1, 0), n - 4);
            ps.push_back({g.node(j), g.node(j + 1), s, 4});
        }
    } else {
        if (g.node(0) > e0) ps.push_back({e0, g.node(0), 0, 1});
        for (int j = 0; j + 1 < n; ++j) ps.push_back({g.node(j), g.node(j + 1), j, 1});
    }
    ps.push_back({g.node(n - 1), g.edges().back(), n - 1, 1});
    return ps;
}

inline void lagrange_weights(const RadialGrid& g, const Piece& p, double rho, double* w) {
    if (p.count == 1) {
        w[0] = 1.0;
        return;
    }
    const double* x = g.nodes().data() + p.first;
    for (int k = 0; k < 4; ++k) {
        double num = 1.0, den = 1.0;
        for (int m = 0; m < 4; ++m) {
            if (m == k) continue;
            num *= rho - x[m];
            den *= x[k] - x[m];
        }
        w[k] = num / den;
    }
}

}  // namespace detail

/// Dense operator e^{t Delta} on one grid: out_i = sum_j a(i, j) f_j.
class SemigroupMatrix {
public:
    SemigroupMatrix(const GridPtr& grid, double t, const KernelOptions& opt = {})
        : grid_(grid), t_(t), n_(grid->size()), a_(n_ * n_, 0.0), lo_(n_, n_), hi_(n_, 0) {
        if (!(t > 0.0)) throw std::invalid_argument("semigroup needs t > 0");
        const int d = grid->dim();
        if (d != 1 && d != 3 && !opt.general_dimension)
            throw std::invalid_argument("dimensions other than 1 and 3 need KernelOptions::general_dimension");
        build(opt);
    }

    double t() const { return t_; }
    const GridPtr& grid() const { return grid_; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    /// Applies the operator to the real and imaginary parts separately.
    void apply(const std::vector<cplx>& in, std::vector<cplx>& out) const {
        out.assign(n_, cplx(0.0));
        for (std::size_t i = 0; i < n_; ++i) {
            const double* row = a_.data() + i * n_;
            double re = 0.0, im = 0.0;
            for (std::size_t j = lo_[i]; j < hi_[i]; ++j) {
                re += row[j] * in[j].real();
                im += row[j] * in[j].imag();
            }
            out[i] = cplx(re, im);
        }
    }

private:
    void add_piece(std::size_t i, double r, const detail::Piece& p, const KernelOptions& opt) {
        const auto& g = *grid_;
        const int d = g.dim();
        const double st = std::sqrt(t_);
        if (p.a - r > opt.cutoff * st || r - p.b > opt.cutoff * st) return;
        const double pref = 1.0 / std::sqrt(4.0 * M_PI * t_);
        const double hh = 0.5 * (p.b - p.a), m = 0.5 * (p.a + p.b);
        double* row = a_.data() + i * n_;
        double lw[4];
        auto deposit = [&](double rho, double weight) {
            const double f = weight * detail::angular_factor(d, t_, r, rho, opt.general_dimension);
            detail::lagrange_weights(g, p, rho, lw);
            for (int k = 0; k < p.count; ++k) row[p.first + k] += f * lw[k];
        };
        if (p.b - p.a <= 0.5 * st) {
            for (std::size_t q = 0; q < detail::gl_x.size(); ++q) {
                const double rho = m + hh * detail::gl_x[q];
                const double u = rho - r;
                deposit(rho, pref * hh * detail::gl_w[q] * std::exp(-u * u / (4.0 * t_)));
            }
        } else {
            // exact moments of the Gaussian against a cubic in y = (rho - m)/hh
            const double ua = p.a - r, ub = p.b - r, delta = m - r;
            const double ea = std::exp(-ua * ua / (4.0 * t_)), eb = std::exp(-ub * ub / (4.0 * t_));
            double mu[4];
            mu[0] = std::sqrt(M_PI * t_) * detail::erf_diff(ua / (2.0 * st), ub / (2.0 * st));
            mu[1] = 2.0 * t_ * (ea - eb);
            mu[2] = 2.0 * t_ * (ua * ea - ub * eb) + 2.0 * t_ * mu[0];
            mu[3] = 2.0 * t_ * (ua * ua * ea - ub * ub * eb) + 4.0 * t_ * mu[1];
            double Y[4];
            const double nd = -delta;
            Y[0] = mu[0];
            Y[1] = (mu[1] + nd * mu[0]) / hh;
            Y[2] = (mu[2] + 2.0 * nd * mu[1] + nd * nd * mu[0]) / (hh * hh);
            Y[3] = (mu[3] + 3.0 * nd * mu[2] + 3.0 * nd * nd * mu[1] + nd * nd * nd * mu[0]) / (hh * hh * hh);
            const auto& cc = detail::cheb_cubic();
            for (int c = 0; c < 4; ++c) {
                double w = 0.0;
                for (int k = 0; k < 4; ++k) w += cc.coef[c][k] * Y[k];
                deposit(m + hh * cc.y[c], pref * w);
            }
        }
    }

    void build(const KernelOptions& opt) {
        const auto pieces = detail::make_pieces(*grid_);
        for (std::size_t i = 0; i < n_; ++i) {
            const double r = grid_->node(i);
            for (const auto& p : pieces) add_piece(i, r, p, opt);
            const double* row = a_.data() + i * n_;
            std::size_t lo = n_, hi = 0;
            for (std::size_t j = 0; j < n_; ++j)
                if (row[j] != 0.0) {
                    lo = std::min(lo, j);
                    hi = j + 1;
                }
            lo_[i] = lo < hi ? lo : 0;
            hi_[i] = lo < hi ? hi : 0;
        }
    }

    GridPtr grid_;
    double t_;
    std::size_t n_;
    std::vector<double> a_;
    std::vector<std::size_t> lo_, hi_;
};

/// Reuses operators per (grid, t). Thread-safe.
class SemigroupCache {
public:
    explicit SemigroupCache(KernelOptions opt = {}) : opt_(opt) {}

    std::shared_ptr<const SemigroupMatrix> get(const GridPtr& g, double t) {
        std::uint64_t bits;
        std::memcpy(&bits, &t, sizeof bits);
        const auto key = std::make_pair(g->id(), bits);
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = map_.find(key);
            if (it != map_.end()) return it->second;
        }
        auto m = std::make_shared<const SemigroupMatrix>(g, t, opt_);
        std::lock_guard<std::mutex> lock(mu_);
        return map_.emplace(key, m).first->second;
    }

    void clear() {
        std::lock_guard<std::mutex> lock(mu_);
        map_.clear();
    }
    std::size_t size() const {
        std::lock_guard<std::mutex> lock(mu_);
        return map_.size();
    }
    const KernelOptions& options() const { return opt_; }

private:
    KernelOptions opt_;
    mutable std::mutex mu_;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::shared_ptr<const SemigroupMatrix>> map_;
};

inline SemigroupCache& default_semigroup_cache() {
    static SemigroupCache cache;
    return cache;
}

struct SemigroupResult {
    RadialField field;
    double tail_loss = 0.0;  ///< fraction of |f| mass expected to leave the outer edge
    bool tail_flag = false;  ///< tail_loss > 1e-4
};

namespace detail {

/// Mass that the constant inner cell misses for data c r^{-sigma} near 0.
inline cplx inner_mass_correction(const RadialField& f) {
    const auto& tag = f.singular();
    if (!tag || tag->coefficient == cplx(0.0)) return 0.0;
    const auto& g = *f.grid();
    const int d = g.dim();
    const double e0 = g.edges().front(), s = tag->exponent;
    if (!(e0 > 0.0) || s >= d) return 0.0;
    const double exact = std::pow(e0, d - s) / (d - s);
    const double used = std::pow(g.node(0), -s) * std::pow(e0, d) / d;
    return sphere_area(d) * tag->coefficient * (exact - used);
}

inline double tail_loss(const RadialField& f, double t) {
    const auto& g = *f.grid();
    const double edge = g.edges().back();
    double total = 0.0, lost = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double w = std::abs(f[i]) * g.measures()[i];
        total += w;
        lost += w * 0.5 * std::erfc((edge - g.node(i)) / std::sqrt(4.0 * t));
    }
    return total > 0.0 ? lost / total : 0.0;
}

}  // namespace detail

/// e^{t Delta} f via the cached operator, plus the analytic inner-mass term
/// for fields tagged singular at the origin.
inline SemigroupResult apply_semigroup_report(const RadialField& f, double t,
                                              SemigroupCache& cache = default_semigroup_cache()) {
    auto op = cache.get(f.grid(), t);
    SemigroupResult res;
    std::vector<cplx> out;
    op->apply(f.values(), out);
    const cplx dm = detail::inner_mass_correction(f);
    if (dm != cplx(0.0)) {
        const int d = f.dim();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += dm * gaussian_kernel_value(d, t, f.radius(i));
    }
    res.field = RadialField(f.grid(), std::move(out));
    res.tail_loss = detail::tail_loss(f, t);
    res.tail_flag = res.tail_loss > 1e-4;
    return res;
}

inline RadialField apply_semigroup(const RadialField& f, double t, SemigroupCache& cache = default_semigroup_cache()) {
    return apply_semigroup_report(f, t, cache).field;
}

/// Regresses log ||e^{t Delta} f||_{to} on log t over t_grid and compares
/// with the exponent of the weighted smoothing estimate.
struct SmoothingProbe {
    DecayFit fit;
    std::vector<double> times, norms;
    double constant = 0.0;  ///< max_t norm(t) t^{-predicted} / ||f||_{from}
    AdmissibilityReport hypotheses;
};

inline SmoothingProbe smoothing_estimate_probe(const RadialField& f, const SpaceIndex& from, const SpaceIndex& to,
                                               const std::vector<double>& t_grid, double rel_tol = 0.02,
                                               SemigroupCache& cache = default_semigroup_cache()) {
    SmoothingProbe out;
    out.hypotheses = smoothing_pair_conditions(f.dim(), from, to);
    if (!out.hypotheses.admissible())
        throw std::invalid_argument("smoothing estimate hypotheses fail: " + out.hypotheses.summary());
    const double pred = smoothing_exponent(f.dim(), from, to).value();
    const double base = lorentz_quasi_norm(f, from);
    for (double t : t_grid) {
        const double v = lorentz_quasi_norm(apply_semigroup(f, t, cache), to);
        out.times.push_back(t);
        out.norms.push_back(v);
        if (base > 0.0) out.constant = std::max(out.constant, v * std::pow(t, -pred) / base);
    }
    out.fit = decay_slope_fit(out.times, out.norms, t_grid.front(), t_grid.back(), pred,
                              rel_tol * std::max(std::fabs(pred), 1e-12), true);
    return out;
}

}  // namespace hhlab
