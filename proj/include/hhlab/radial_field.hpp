#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <fmt/format.h>

namespace hhlab {

using cplx = std::complex<double>;

/// |S^{d-1}|, surface measure of the unit sphere.
/// Built by |S^{d+1}| = 2 pi |S^{d-1}| / d so that d = 1 gives exactly 2.
inline double sphere_area(int d) {
    double area = d % 2 ? 2.0 : 2.0 * M_PI;
    for (int k = 2 - d % 2; k < d - 1; k += 2) area *= 2.0 * M_PI / k;
    return area;
}

/// Radial nodes with annular cells. edges[i] < nodes[i] < edges[i+1]; the
/// first edge may be 0, in which case the first cell is a ball.
class RadialGrid {
public:
    static std::shared_ptr<const RadialGrid> logarithmic(int d, double r_min, double r_max, int n) {
        if (d < 1) throw std::invalid_argument("grid dimension must be >= 1");
        if (!(r_min > 0.0) || !(r_max > r_min)) throw std::invalid_argument("grid needs 0 < r_min < r_max");
        if (n < 8) throw std::invalid_argument("grid needs at least 8 nodes");
        std::vector<double> nodes(n);
        const double step = std::log(r_max / r_min) / (n - 1);
        for (int i = 0; i < n; ++i) nodes[i] = r_min * std::exp(step * i);
        nodes.back() = r_max;
        std::vector<double> edges(n + 1);
        const double half = std::exp(0.5 * step);
        edges[0] = nodes[0] / half;
        for (int i = 1; i < n; ++i) edges[i] = std::sqrt(nodes[i - 1] * nodes[i]);
        edges[n] = nodes[n - 1] * half;
        auto g = std::shared_ptr<RadialGrid>(new RadialGrid(d, std::move(nodes), std::move(edges)));
        g->log_step_ = step;
        return g;
    }

    /// Grid from explicit cell edges; nodes are geometric midpoints (arithmetic
    /// midpoint for a ball cell at the origin).
    static std::shared_ptr<const RadialGrid> from_edges(int d, std::vector<double> edges) {
        if (edges.size() < 2) throw std::invalid_argument("need at least one cell");
        if (edges[0] < 0.0) throw std::invalid_argument("edges must be nonnegative");
        for (std::size_t i = 1; i < edges.size(); ++i)
            if (!(edges[i] > edges[i - 1])) throw std::invalid_argument("edges must increase strictly");
        std::vector<double> nodes(edges.size() - 1);
        for (std::size_t i = 0; i + 1 < edges.size(); ++i)
            nodes[i] = edges[i] > 0.0 ? std::sqrt(edges[i] * edges[i + 1]) : 0.5 * edges[i + 1];
        return std::shared_ptr<RadialGrid>(new RadialGrid(d, std::move(nodes), std::move(edges)));
    }

    /// Grid through given nodes; edges are geometric midpoints, outer edges
    /// mirror the neighbouring ratio.
    static std::shared_ptr<const RadialGrid> from_nodes(int d, std::vector<double> nodes) {
        const std::size_t n = nodes.size();
        if (n < 2) throw std::invalid_argument("need at least two nodes");
        for (std::size_t i = 0; i < n; ++i) {
            if (!(nodes[i] > 0.0)) throw std::invalid_argument("nodes must be positive");
            if (i && !(nodes[i] > nodes[i - 1])) throw std::invalid_argument("nodes must increase strictly");
        }
        std::vector<double> edges(n + 1);
        for (std::size_t i = 1; i < n; ++i) edges[i] = std::sqrt(nodes[i - 1] * nodes[i]);
        edges[0] = nodes[0] * nodes[0] / edges[1];
        edges[n] = nodes[n - 1] * nodes[n - 1] / edges[n - 1];
        auto g = std::shared_ptr<RadialGrid>(new RadialGrid(d, std::move(nodes), std::move(edges)));
        double s0 = std::log(g->nodes_[1] / g->nodes_[0]);
        bool uniform = true;
        for (std::size_t i = 1; i + 1 < n && uniform; ++i)
            uniform = std::fabs(std::log(g->nodes_[i + 1] / g->nodes_[i]) - s0) < 1e-9 * std::max(1.0, s0);
        if (uniform) g->log_step_ = s0;
        return g;
    }

    int dim() const { return d_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& edges() const { return edges_; }
    const std::vector<double>& measures() const { return measures_; }
    double node(std::size_t i) const { return nodes_[i]; }
    double r_min() const { return nodes_.front(); }
    double r_max() const { return nodes_.back(); }
    /// log(r_{i+1}/r_i) for logarithmically uniform grids.
    std::optional<double> log_step() const { return log_step_; }
    std::uint64_t id() const { return id_; }

    double annulus_measure(double a, double b) const {
        return sphere_area(d_) / d_ * (std::pow(b, d_) - std::pow(a, d_));
    }

    /// Index of the first node >= r.
    std::size_t lower_index(double r) const {
        return static_cast<std::size_t>(std::lower_bound(nodes_.begin(), nodes_.end(), r) - nodes_.begin());
    }

    bool same_as(const RadialGrid& o) const {
        return d_ == o.d_ && nodes_ == o.nodes_ && edges_ == o.edges_;
    }

private:
    RadialGrid(int d, std::vector<double> nodes, std::vector<double> edges)
        : d_(d), nodes_(std::move(nodes)), edges_(std::move(edges)) {
        static std::atomic<std::uint64_t> counter{1};
        id_ = counter++;
        measures_.resize(nodes_.size());
        for (std::size_t i = 0; i < nodes_.size(); ++i) measures_[i] = annulus_measure(edges_[i], edges_[i + 1]);
    }

    int d_;
    std::vector<double> nodes_, edges_, measures_;
    std::optional<double> log_step_;
    std::uint64_t id_ = 0;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

/// Analytic behaviour c * r^{-exponent} of a field below the first grid edge.
struct SingularTag {
    double exponent = 0.0;
    cplx coefficient = 0.0;
};

class RadialField {
public:
    RadialField() = default;
    explicit RadialField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size(), cplx(0.0)) {}
    RadialField(GridPtr grid, std::vector<cplx> values, std::optional<SingularTag> tag = std::nullopt)
        : grid_(std::move(grid)), values_(std::move(values)), tag_(tag) {
        if (values_.size() != grid_->size()) throw std::invalid_argument("value count does not match grid");
        if (!tag_)
            for (auto& v : values_)
                if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                    throw std::invalid_argument("field values must be finite");
    }

    template <class F>
    static RadialField sample(GridPtr grid, F&& f) {
        std::vector<cplx> v(grid->size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = cplx(f(grid->node(i)));
        return RadialField(std::move(grid), std::move(v));
    }

    const GridPtr& grid() const { return grid_; }
    int dim() const { return grid_->dim(); }
    std::size_t size() const { return values_.size(); }
    double radius(std::size_t i) const { return grid_->node(i); }
    const std::vector<cplx>& values() const { return values_; }
    std::vector<cplx>& values() { return values_; }
    cplx operator[](std::size_t i) const { return values_[i]; }
    cplx& operator[](std::size_t i) { return values_[i]; }
    const std::optional<SingularTag>& singular() const { return tag_; }
    void set_singular(std::optional<SingularTag> t) { tag_ = t; }

    bool is_real() const {
        for (auto& v : values_)
            if (v.imag() != 0.0) return false;
        return true;
    }

    RadialField real_part() const {
        RadialField out(grid_);
        for (std::size_t i = 0; i < size(); ++i) out.values_[i] = values_[i].real();
        if (tag_) out.tag_ = SingularTag{tag_->exponent, tag_->coefficient.real()};
        return out;
    }
    RadialField imag_part() const {
        RadialField out(grid_);
        for (std::size_t i = 0; i < size(); ++i) out.values_[i] = values_[i].imag();
        if (tag_) out.tag_ = SingularTag{tag_->exponent, tag_->coefficient.imag()};
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (auto& v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    /// Integral over the covered annulus. Trapezoid in log r on uniform
    /// logarithmic grids (spectrally accurate for smooth decaying data),
    /// cell sums otherwise.
    cplx integral() const {
        const auto& g = *grid_;
        if (auto step = g.log_step()) {
            const double area = sphere_area(g.dim());
            cplx s = 0.0;
            for (std::size_t i = 0; i < size(); ++i) {
                double w = (i == 0 || i + 1 == size()) ? 0.5 : 1.0;
                s += w * values_[i] * std::pow(g.node(i), g.dim());
            }
            s *= (*step) * area;
            // ball below the first node: constant, or the analytic power law
            const double r0 = g.node(0);
            if (tag_ && tag_->exponent < g.dim())
                s += area * tag_->coefficient * std::pow(r0, g.dim() - tag_->exponent) / (g.dim() - tag_->exponent);
            else
                s += area * values_[0] * std::pow(r0, g.dim()) / double(g.dim());
            return s;
        }
        cplx s = 0.0;
        for (std::size_t i = 0; i < size(); ++i) s += values_[i] * g.measures()[i];
        return s;
    }

    RadialField& operator+=(const RadialField& o) {
        check_same(o);
        for (std::size_t i = 0; i < size(); ++i) values_[i] += o.values_[i];
        tag_ = combine(tag_, o.tag_, 1.0);
        return *this;
    }
    RadialField& operator-=(const RadialField& o) {
        check_same(o);
        for (std::size_t i = 0; i < size(); ++i) values_[i] -= o.values_[i];
        tag_ = combine(tag_, o.tag_, -1.0);
        return *this;
    }
    RadialField& operator*=(cplx c) {
        for (auto& v : values_) v *= c;
        if (tag_) tag_->coefficient *= c;
        return *this;
    }
    friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
    friend RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
    friend RadialField operator*(cplx c, RadialField a) { return a *= c; }

    void check_same(const RadialField& o) const {
        if (grid_ != o.grid_ && !grid_->same_as(*o.grid_)) throw std::invalid_argument("fields live on different grids");
    }

private:
    static std::optional<SingularTag> combine(const std::optional<SingularTag>& a, const std::optional<SingularTag>& b,
                                              double sign) {
        if (!b || b->coefficient == cplx(0.0)) return a;
        if (!a || a->coefficient == cplx(0.0)) return SingularTag{b->exponent, sign * b->coefficient};
        if (a->exponent == b->exponent) return SingularTag{a->exponent, a->coefficient + sign * b->coefficient};
        // keep the stronger singularity
        return a->exponent > b->exponent ? a : SingularTag{b->exponent, sign * b->coefficient};
    }

    GridPtr grid_;
    std::vector<cplx> values_;
    std::optional<SingularTag> tag_;
};

// ---------------------------------------------------------------------------
// Snapshot CSV: header `r,re,im`

inline std::string format_double(double x) { return fmt::format("{:.17g}", x); }

inline void write_snapshot_csv(const RadialField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "r,re,im\n";
    for (std::size_t i = 0; i < f.size(); ++i)
        out << format_double(f.radius(i)) << ',' << format_double(f[i].real()) << ',' << format_double(f[i].imag())
            << '\n';
}

/// Reads a snapshot; the grid is rebuilt from the nodes.
inline RadialField read_snapshot_csv(const std::string& path, int d) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("r,re,im", 0) != 0) throw std::runtime_error(path + ": expected header r,re,im");
    std::vector<double> r;
    std::vector<cplx> v;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        r.push_back(std::stod(a));
        v.emplace_back(std::stod(b), c.empty() ? 0.0 : std::stod(c));
    }
    return RadialField(RadialGrid::from_nodes(d, r), std::move(v));
}

}  // namespace hhlab
