#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace bessel {

enum class GridScheme { graded, uniform };

GridScheme parse_grid_scheme(const std::string& name);
std::string to_string(GridScheme scheme);

/// Truncated discretization of R_+ carrying quadrature weights for the measure
/// mu(dx) = x^{delta-1} dx.
///
/// Nodes: x_0 = 0 < x_1 < ... < x_n = x_max (n cells). The graded scheme puts
/// the first quarter of the cells on [0, a] with x ∝ (i/n_g)^{1/delta} and
/// spaces the rest uniformly, a chosen so the two spacings match at the seam.
///
/// Weights come from quadratic interpolation on two-cell panels integrated
/// exactly against x^{delta-1} (a product Simpson rule). With an odd cell
/// count the last cell integrates the quadratic through its two nodes and the
/// one before. Copies share storage; the grid is immutable.
class Grid {
public:
    static Grid make(double delta, double x_max, std::size_t cells, GridScheme scheme);
    /// Grid over explicit nodes (used when reading serialized data).
    static Grid from_nodes(double delta, std::vector<double> nodes, GridScheme scheme);

    std::span<const double> nodes() const noexcept { return data_->nodes; }
    std::span<const double> mu_weights() const noexcept { return data_->mu_weights; }
    double node(std::size_t i) const noexcept { return data_->nodes[i]; }
    double mu_weight(std::size_t i) const noexcept { return data_->mu_weights[i]; }
    std::size_t size() const noexcept { return data_->nodes.size(); }
    double x_max() const noexcept { return data_->nodes.back(); }
    double delta() const noexcept { return data_->delta; }
    GridScheme scheme() const noexcept { return data_->scheme; }

    /// Sum of the mu-weights (approximates x_max^delta / delta).
    double mu_mass() const noexcept;

    /// Identity of the underlying storage; stable across copies.
    const void* id() const noexcept { return data_.get(); }
    std::shared_ptr<const void> keep_alive() const noexcept { return data_; }

    friend bool operator==(const Grid& a, const Grid& b) noexcept;

private:
    struct Data {
        double delta = 0.0;
        GridScheme scheme = GridScheme::uniform;
        std::vector<double> nodes;
        std::vector<double> mu_weights;
    };
    explicit Grid(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    static std::vector<double> compute_mu_weights(double delta, std::span<const double> nodes);

    std::shared_ptr<const Data> data_;
};

/// x_max = sqrt(2 T ln 1e12) + support_radius: beyond it the Gaussian factor
/// of the kernel seen from the support is below 1e-12.
double default_x_max(double horizon, double support_radius);

/// Real function sampled on the nodes of a Grid.
class GridFunction {
public:
    GridFunction(Grid grid, std::vector<double> values);
    /// Zero function.
    explicit GridFunction(Grid grid);

    static GridFunction sample(const Grid& grid, const std::function<double(double)>& fn);

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double s);
    friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
    friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
    friend GridFunction operator*(double s, GridFunction a) { return a *= s; }

private:
    Grid grid_;
    std::vector<double> values_;
};

struct SobolevNorms {
    double l2 = 0.0;   ///< ||f||_{L2(mu)}
    double h = 0.0;    ///< ||f||_H = sqrt(l2^2 + form)
    double form = 0.0; ///< eps(f, f) = 1/2 ||f'||^2_{L2(mu)}
};

/// Sum_i f_i g_i w_i. Throws std::invalid_argument on grid mismatch.
double inner_mu(const GridFunction& f, const GridFunction& g);
double norm_mu(const GridFunction& f);

/// Three-point second-order differences: central (non-uniform) at interior
/// nodes, one-sided at both ends.
GridFunction derivative(const GridFunction& f);

SobolevNorms norms(const GridFunction& f);

/// Twice-differentiable scalar function with analytic derivatives.
struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
};

/// Generator f''/2 + (delta-1) f'/(2x) for x > 0. At x = 0 returns the
/// continuous limit (delta/2) f''(0), valid when f'(0) = 0.
double apply_generator(const TestFunction& f, double delta, double x);

/// The generator applied at every node of a grid.
GridFunction apply_generator(const TestFunction& f, const Grid& grid);

/// True iff |f'(0)| <= tol and f, f', f'' are below tol on a trailing window
/// of [0, x_max] (the last 2% of it), i.e. f is numerically compactly
/// supported inside the domain.
bool in_test_space(const TestFunction& f, double x_max, double tol);

/// Smooth bump exp(1 - 1/(1 - (x/r)^2)) on [0, r), zero beyond; value 1 at 0,
/// flat at 0.
TestFunction bump(double radius);
/// scale * p(x) * bump(x) where p(x) = 1 + c2 x^2 + c3 x^3 keeps f'(0) = 0.
TestFunction shaped_bump(double radius, double c2, double c3, double scale = 1.0);

} // namespace bessel
