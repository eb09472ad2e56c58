#pragma once

#include "bessel/mspace.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <tuple>
#include <vector>

namespace bessel {

/// Dimension delta of the Bessel process and the Bessel order nu = delta/2 - 1.
struct KernelParams {
    double delta = 0.5;
    double nu = -0.75;

    static KernelParams from_delta(double delta);
    /// Parameters of dimension delta + 2 (order nu + 1).
    KernelParams shifted() const { return from_delta(delta + 2.0); }
};

/// Below this x the kernel uses its x = 0 form.
inline constexpr double kKernelXMin = 1e-8;

/// ln p_t(x, y), the log of the transition density of X_t given X_0 = x.
double log_kernel_density(const KernelParams& params, double t, double x, double y);

/// Transition density p_t(x, y) for t > 0, x >= 0, y > 0.
double kernel_density(const KernelParams& params, double t, double x, double y);

/// p_t(x, y) y^{1-delta}: the kernel with respect to mu. Symmetric in (x, y),
/// finite on [0, inf)^2.
double kernel_density_mu(const KernelParams& params, double t, double x, double y);

/// ∂_x p_t(x, y) = (x/t) (p^{delta+2}_t(x, y) - p^{delta}_t(x, y)), x > 0.
double kernel_dx(const KernelParams& params, double t, double x, double y);

struct KernelBuildOptions {
    /// Divide every row by its mass. Breaks the mu-symmetry; off by default.
    bool renormalize = false;
};

struct KernelDiagnostics {
    double delta = 0.0;
    double t = 0.0;
    double row_mass_min = 0.0;
    double row_mass_max = 0.0;
    /// Same, restricted to rows with x_i <= x_max / 2.
    double row_mass_min_interior = 0.0;
    double row_mass_max_interior = 0.0;
    double symmetry_defect_max = 0.0;
};

/// Dense kernel on a grid. Stores entries[i][j] = p_t(x_i, y_j) y_j^{1-delta_g}
/// where delta_g is the grid's dimension, so that
///   P_t f (x_i) ≈ sum_j entries[i][j] mu_weight_j f_j.
/// When the kernel dimension equals the grid's the matrix is symmetric up to
/// rounding; both triangles are evaluated independently.
class KernelMatrix {
public:
    KernelMatrix(KernelParams params, double t, Grid grid, std::vector<double> entries, bool renormalized);

    const KernelParams& params() const noexcept { return params_; }
    double t() const noexcept { return t_; }
    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return grid_.size(); }
    bool renormalized() const noexcept { return renormalized_; }

    double entry(std::size_t i, std::size_t j) const noexcept { return entries_[i * size() + j]; }
    /// p_t(x_i, y_j) for j > 0.
    double density(std::size_t i, std::size_t j) const;
    /// ∫ p_t(x_i, y) dy over the truncated domain (before renormalization).
    double row_mass(std::size_t i) const noexcept { return row_mass_[i]; }

    KernelDiagnostics diagnostics() const;

    GridFunction apply(const GridFunction& f) const;

private:
    KernelParams params_;
    double t_;
    Grid grid_;
    std::vector<double> entries_;
    std::vector<double> row_mass_;
    bool renormalized_;
};

KernelMatrix build_kernel_matrix(const KernelParams& params, double t, const Grid& grid,
                                 KernelBuildOptions options = {});

/// Kernel matrices keyed by exact bit patterns of (delta, t), the grid
/// storage and the renormalization flag. Concurrent lookups share a lock;
/// inserts take it exclusively.
class KernelCache {
public:
    std::shared_ptr<const KernelMatrix> get(const KernelParams& params, double t, const Grid& grid,
                                            KernelBuildOptions options = {});
    std::size_t size() const;
    void clear();

private:
    using Key = std::tuple<std::uint64_t, std::uint64_t, const void*, bool>;
    struct Entry {
        std::shared_ptr<const void> grid_owner;
        std::shared_ptr<const KernelMatrix> matrix;
    };
    mutable std::shared_mutex mutex_;
    std::map<Key, Entry> entries_;
};

KernelCache& default_kernel_cache();

/// P_t f on the grid; t = 0 returns f.
GridFunction apply(const KernelParams& params, double t, const GridFunction& f);

/// (P_t f)' = ∫ f(y) ∂_x p_t(x, y) dy on the grid, t > 0. Zero at x = 0.
GridFunction apply_dx(const KernelParams& params, double t, const GridFunction& f);

/// P_t f evaluated at an arbitrary point x >= 0 using the grid quadrature.
double apply_at(const KernelParams& params, double t, const GridFunction& f, double x);

/// |∫ P_t f dmu - ∫ f dmu| / max(1, |∫ f dmu|).
double invariance_defect(const KernelParams& params, double t, const GridFunction& f);

/// Distribution function y -> ∫_0^y p_t(x, w) dw, tabulated in v = y^delta
/// where the integrand is smooth.
class KernelCdf {
public:
    KernelCdf(const KernelParams& params, double t, double x, double y_max, std::size_t cells = 4000);
    double operator()(double y) const;
    double total_mass() const noexcept { return table_.back(); }

private:
    double partial(std::size_t cell, double v) const;

    KernelParams params_;
    double t_;
    double x_;
    double v_max_;
    double dv_;
    std::vector<double> table_;
};

} // namespace bessel
