#include "bessel/mspace.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace bessel {

GridScheme parse_grid_scheme(const std::string& name) {
    if (name == "graded") {
        return GridScheme::graded;
    }
    if (name == "uniform") {
        return GridScheme::uniform;
    }
    throw std::invalid_argument("unknown grid scheme '" + name + "'");
}

std::string to_string(GridScheme scheme) {
    return scheme == GridScheme::graded ? "graded" : "uniform";
}

namespace {

// Weights w_m = ∫_a^b l_m(x) x^{delta-1} dx for the Lagrange basis l_m through
// (p[0], p[1], p[2]).
std::array<double, 3> panel_weights(double delta, const std::array<double, 3>& p, double a, double b) {
    std::array<double, 3> w{};
    if (a < 4.0 * (b - a)) {
        // Close to the singular endpoint: exact monomial moments about 0.
        double moment[3];
        for (int k = 0; k < 3; ++k) {
            const double e = k + delta;
            moment[k] = (std::pow(b, e) - std::pow(a, e)) / e;
        }
        for (int m = 0; m < 3; ++m) {
            const double xp = p[(m + 1) % 3];
            const double xq = p[(m + 2) % 3];
            const double denom = (p[m] - xp) * (p[m] - xq);
            w[m] = (moment[2] - (xp + xq) * moment[1] + xp * xq * moment[0]) / denom;
        }
        return w;
    }
    // Away from 0 the weight is analytic on a Bernstein ellipse with rho > 17,
    // so 20-point Gauss-Legendre is exact to rounding.
    using rule = boost::math::quadrature::gauss<double, 20>;
    for (int m = 0; m < 3; ++m) {
        const double xp = p[(m + 1) % 3];
        const double xq = p[(m + 2) % 3];
        const double denom = (p[m] - xp) * (p[m] - xq);
        w[m] = rule::integrate(
            [&](double x) { return (x - xp) * (x - xq) / denom * std::pow(x, delta - 1.0); }, a, b);
    }
    return w;
}

void check_delta(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("grid: delta must lie in (0,1)");
    }
}

} // namespace

std::vector<double> Grid::compute_mu_weights(double delta, std::span<const double> x) {
    const std::size_t cells = x.size() - 1;
    std::vector<double> w(x.size(), 0.0);
    std::size_t i = 0;
    for (; i + 2 <= cells; i += 2) {
        const auto pw = panel_weights(delta, {x[i], x[i + 1], x[i + 2]}, x[i], x[i + 2]);
        for (int m = 0; m < 3; ++m) {
            w[i + m] += pw[m];
        }
    }
    if (i < cells) {
        const auto pw = panel_weights(delta, {x[i - 1], x[i], x[i + 1]}, x[i], x[i + 1]);
        for (int m = 0; m < 3; ++m) {
            w[i - 1 + m] += pw[m];
        }
    }
    return w;
}

Grid Grid::make(double delta, double x_max, std::size_t cells, GridScheme scheme) {
    check_delta(delta);
    if (!(x_max > 0.0) || !std::isfinite(x_max)) {
        throw std::invalid_argument("grid: x_max must be positive");
    }
    if (cells < 16) {
        throw std::invalid_argument("grid: need at least 16 cells");
    }
    std::vector<double> nodes(cells + 1);
    const double n = static_cast<double>(cells);
    if (scheme == GridScheme::uniform) {
        for (std::size_t i = 0; i <= cells; ++i) {
            nodes[i] = x_max * (static_cast<double>(i) / n);
        }
    } else {
        const std::size_t graded = cells / 4;
        const double p = 1.0 / delta;
        const double ng = static_cast<double>(graded);
        const double a = x_max / (1.0 + p * (n - ng) / ng);
        const double h = (x_max - a) / (n - ng);
        for (std::size_t i = 0; i <= graded; ++i) {
            nodes[i] = a * std::pow(static_cast<double>(i) / ng, p);
        }
        for (std::size_t i = graded + 1; i <= cells; ++i) {
            nodes[i] = a + static_cast<double>(i - graded) * h;
        }
    }
    nodes.back() = x_max;
    return from_nodes(delta, std::move(nodes), scheme);
}

Grid Grid::from_nodes(double delta, std::vector<double> nodes, GridScheme scheme) {
    check_delta(delta);
    if (nodes.size() < 3 || nodes.front() != 0.0) {
        throw std::invalid_argument("grid: need >= 3 nodes starting at 0");
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1]) || !std::isfinite(nodes[i])) {
            throw std::invalid_argument("grid: nodes must be finite and strictly increasing");
        }
    }
    auto data = std::make_shared<Data>();
    data->delta = delta;
    data->scheme = scheme;
    data->mu_weights = compute_mu_weights(delta, nodes);
    data->nodes = std::move(nodes);
    return Grid(std::move(data));
}

double Grid::mu_mass() const noexcept {
    double s = 0.0;
    for (double w : data_->mu_weights) {
        s += w;
    }
    return s;
}

bool operator==(const Grid& a, const Grid& b) noexcept {
    if (a.data_ == b.data_) {
        return true;
    }
    return a.data_->delta == b.data_->delta && a.data_->nodes == b.data_->nodes;
}

double default_x_max(double horizon, double support_radius) {
    if (!(horizon > 0.0) || support_radius < 0.0) {
        throw std::invalid_argument("default_x_max: horizon must be positive, radius non-negative");
    }
    return std::sqrt(2.0 * horizon * std::log(1e12)) + support_radius;
}

GridFunction::GridFunction(Grid grid, std::vector<double> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        throw std::invalid_argument("GridFunction: value count does not match grid");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("GridFunction: non-finite value");
        }
    }
}

GridFunction::GridFunction(Grid grid) : grid_(std::move(grid)), values_(grid_.size(), 0.0) {}

GridFunction GridFunction::sample(const Grid& grid, const std::function<double(double)>& fn) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = fn(grid.node(i));
    }
    return GridFunction(grid, std::move(v));
}

namespace {
void require_same_grid(const Grid& a, const Grid& b) {
    if (!(a == b)) {
        throw std::invalid_argument("grid mismatch");
    }
}
} // namespace

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_grid(grid_, other.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] += other.values_[i];
    }
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_grid(grid_, other.grid_);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        values_[i] -= other.values_[i];
    }
    return *this;
}

GridFunction& GridFunction::operator*=(double s) {
    for (double& v : values_) {
        v *= s;
    }
    return *this;
}

double inner_mu(const GridFunction& f, const GridFunction& g) {
    require_same_grid(f.grid(), g.grid());
    const auto w = f.grid().mu_weights();
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        s += f[i] * g[i] * w[i];
    }
    return s;
}

double norm_mu(const GridFunction& f) {
    return std::sqrt(std::max(0.0, inner_mu(f, f)));
}

GridFunction derivative(const GridFunction& f) {
    const auto x = f.grid().nodes();
    const auto v = f.values();
    const std::size_t n = x.size();
    std::vector<double> d(n);
    {
        const double h1 = x[1] - x[0];
        const double h2 = x[2] - x[1];
        d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * v[0] + (h1 + h2) / (h1 * h2) * v[1] -
               h1 / (h2 * (h1 + h2)) * v[2];
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h1 = x[i] - x[i - 1];
        const double h2 = x[i + 1] - x[i];
        d[i] = -h2 / (h1 * (h1 + h2)) * v[i - 1] + (h2 - h1) / (h1 * h2) * v[i] +
               h1 / (h2 * (h1 + h2)) * v[i + 1];
    }
    {
        const double h1 = x[n - 2] - x[n - 3];
        const double h2 = x[n - 1] - x[n - 2];
        d[n - 1] = h2 / (h1 * (h1 + h2)) * v[n - 3] - (h1 + h2) / (h1 * h2) * v[n - 2] +
                   (2.0 * h2 + h1) / (h2 * (h1 + h2)) * v[n - 1];
    }
    return GridFunction(f.grid(), std::move(d));
}

SobolevNorms norms(const GridFunction& f) {
    SobolevNorms out;
    out.l2 = norm_mu(f);
    const GridFunction df = derivative(f);
    out.form = 0.5 * std::max(0.0, inner_mu(df, df));
    out.h = std::sqrt(out.l2 * out.l2 + out.form);
    return out;
}

double apply_generator(const TestFunction& f, double delta, double x) {
    if (x > 0.0) {
        return 0.5 * f.d2f(x) + (delta - 1.0) * f.df(x) / (2.0 * x);
    }
    return 0.5 * delta * f.d2f(0.0);
}

GridFunction apply_generator(const TestFunction& f, const Grid& grid) {
    return GridFunction::sample(grid, [&](double x) { return apply_generator(f, grid.delta(), x); });
}

bool in_test_space(const TestFunction& f, double x_max, double tol) {
    if (!(std::abs(f.df(0.0)) <= tol)) {
        return false;
    }
    constexpr int samples = 4096;
    const double window_start = 0.98 * x_max;
    for (int k = 0; k <= samples; ++k) {
        const double x = window_start + (x_max - window_start) * k / samples;
        if (!(std::abs(f.f(x)) <= tol && std::abs(f.df(x)) <= tol && std::abs(f.d2f(x)) <= tol)) {
            return false;
        }
    }
    return true;
}

namespace {
struct BumpValues {
    double b = 0.0, db = 0.0, d2b = 0.0;
};

BumpValues bump_at(double radius, double x) {
    const double s = x / radius;
    if (std::abs(s) >= 1.0) {
        return {};
    }
    const double u = 1.0 - s * s;
    const double b = std::exp(1.0 - 1.0 / u);
    if (b == 0.0) {
        return {};
    }
    const double bs = b * (-2.0 * s / (u * u));
    const double bss = b * (4.0 * s * s / (u * u * u * u) - 2.0 / (u * u) - 8.0 * s * s / (u * u * u));
    return {b, bs / radius, bss / (radius * radius)};
}
} // namespace

TestFunction bump(double radius) {
    return shaped_bump(radius, 0.0, 0.0, 1.0);
}

TestFunction shaped_bump(double radius, double c2, double c3, double scale) {
    if (!(radius > 0.0)) {
        throw std::invalid_argument("bump: radius must be positive");
    }
    auto poly = [=](double x) { return 1.0 + c2 * x * x + c3 * x * x * x; };
    auto dpoly = [=](double x) { return 2.0 * c2 * x + 3.0 * c3 * x * x; };
    auto d2poly = [=](double x) { return 2.0 * c2 + 6.0 * c3 * x; };
    TestFunction t;
    t.f = [=](double x) { return scale * poly(x) * bump_at(radius, x).b; };
    t.df = [=](double x) {
        const auto b = bump_at(radius, x);
        return scale * (dpoly(x) * b.b + poly(x) * b.db);
    };
    t.d2f = [=](double x) {
        const auto b = bump_at(radius, x);
        return scale * (d2poly(x) * b.b + 2.0 * dpoly(x) * b.db + poly(x) * b.d2b);
    };
    return t;
}

} // namespace bessel
