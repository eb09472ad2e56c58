#include "bessel/semigroup.hpp"

#include "bessel/parallel.hpp"
#include "bessel/specfn.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bessel {

KernelParams KernelParams::from_delta(double delta) {
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        throw std::invalid_argument("KernelParams: delta must be positive");
    }
    return KernelParams{delta, 0.5 * delta - 1.0};
}

namespace {

void check_time(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        throw std::domain_error("kernel: t must be positive");
    }
}

// log of p_t(0, y) y^{-(2 nu + 1)} = log(2^{-nu} t^{-(nu+1)} / Gamma(nu+1)).
double log_origin_prefactor(const KernelParams& params, double t) {
    const double nu = params.nu;
    return -nu * std::numbers::ln2 - (nu + 1.0) * std::log(t) - log_gamma(nu + 1.0);
}

} // namespace

double log_kernel_density(const KernelParams& params, double t, double x, double y) {
    check_time(t);
    if (!(y > 0.0) || !(x >= 0.0)) {
        throw std::domain_error("kernel: need x >= 0 and y > 0");
    }
    const double nu = params.nu;
    if (x < kKernelXMin) {
        return log_origin_prefactor(params, t) + (2.0 * nu + 1.0) * std::log(y) - y * y / (2.0 * t);
    }
    const double z = x * y / t;
    const double d = x - y;
    return std::log(y / t) + nu * (std::log(y) - std::log(x)) - d * d / (2.0 * t) +
           log_bessel_i_scaled(BesselOrder(nu), z);
}

double kernel_density(const KernelParams& params, double t, double x, double y) {
    return std::exp(log_kernel_density(params, t, x, y));
}

double kernel_density_mu(const KernelParams& params, double t, double x, double y) {
    check_time(t);
    if (!(x >= 0.0) || !(y >= 0.0)) {
        throw std::domain_error("kernel: need x, y >= 0");
    }
    const double lo = std::min(x, y);
    const double hi = std::max(x, y);
    if (lo < kKernelXMin) {
        return std::exp(log_origin_prefactor(params, t) - hi * hi / (2.0 * t));
    }
    return std::exp(log_kernel_density(params, t, x, y) + (1.0 - params.delta) * std::log(y));
}

double kernel_dx(const KernelParams& params, double t, double x, double y) {
    if (!(x > 0.0)) {
        throw std::domain_error("kernel_dx: need x > 0");
    }
    const double up = kernel_density(params.shifted(), t, x, y);
    const double here = kernel_density(params, t, x, y);
    return (x / t) * (up - here);
}

KernelMatrix::KernelMatrix(KernelParams params, double t, Grid grid, std::vector<double> entries,
                           bool renormalized)
    : params_(params), t_(t), grid_(std::move(grid)), entries_(std::move(entries)),
      row_mass_(grid_.size(), 0.0), renormalized_(renormalized) {
    const std::size_t n = grid_.size();
    if (entries_.size() != n * n) {
        throw std::invalid_argument("KernelMatrix: entry count does not match grid");
    }
    const auto w = grid_.mu_weights();
    for (std::size_t i = 0; i < n; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            m += entries_[i * n + j] * w[j];
        }
        row_mass_[i] = m;
    }
    if (renormalized_) {
        for (std::size_t i = 0; i < n; ++i) {
            if (row_mass_[i] > 0.0) {
                for (std::size_t j = 0; j < n; ++j) {
                    entries_[i * n + j] /= row_mass_[i];
                }
            }
        }
    }
}

double KernelMatrix::density(std::size_t i, std::size_t j) const {
    if (j == 0 || j >= size() || i >= size()) {
        throw std::out_of_range("KernelMatrix::density: column must be a positive node");
    }
    return entry(i, j) * std::pow(grid_.node(j), grid_.delta() - 1.0);
}

KernelDiagnostics KernelMatrix::diagnostics() const {
    KernelDiagnostics d;
    d.delta = params_.delta;
    d.t = t_;
    const std::size_t n = size();
    d.row_mass_min = *std::min_element(row_mass_.begin(), row_mass_.end());
    d.row_mass_max = *std::max_element(row_mass_.begin(), row_mass_.end());
    d.row_mass_min_interior = std::numeric_limits<double>::infinity();
    d.row_mass_max_interior = -std::numeric_limits<double>::infinity();
    const double half = 0.5 * grid_.x_max();
    for (std::size_t i = 0; i < n && grid_.node(i) <= half; ++i) {
        d.row_mass_min_interior = std::min(d.row_mass_min_interior, row_mass_[i]);
        d.row_mass_max_interior = std::max(d.row_mass_max_interior, row_mass_[i]);
    }
    if (params_.delta == grid_.delta() && !renormalized_) {
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double a = entry(i, j);
                const double b = entry(j, i);
                const double scale = std::max(a, b);
                if (scale > 1e-280) {
                    d.symmetry_defect_max = std::max(d.symmetry_defect_max, std::abs(a - b) / scale);
                }
            }
        }
    }
    return d;
}

GridFunction KernelMatrix::apply(const GridFunction& f) const {
    if (!(f.grid() == grid_)) {
        throw std::invalid_argument("KernelMatrix::apply: grid mismatch");
    }
    const std::size_t n = size();
    const auto w = grid_.mu_weights();
    std::vector<double> wf(n);
    for (std::size_t j = 0; j < n; ++j) {
        wf[j] = w[j] * f[j];
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = entries_.data() + i * n;
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += row[j] * wf[j];
        }
        out[i] = s;
    }
    return GridFunction(grid_, std::move(out));
}

KernelMatrix build_kernel_matrix(const KernelParams& params, double t, const Grid& grid,
                                 KernelBuildOptions options) {
    check_time(t);
    const std::size_t n = grid.size();
    const auto x = grid.nodes();
    const double extra = params.delta - grid.delta();
    std::vector<double> entries(n * n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = kernel_density_mu(params, t, x[i], x[j]);
            if (extra != 0.0) {
                v *= std::pow(x[j], extra);
            }
            entries[i * n + j] = v;
        }
    });
    return KernelMatrix(params, t, grid, std::move(entries), options.renormalize);
}

std::shared_ptr<const KernelMatrix> KernelCache::get(const KernelParams& params, double t, const Grid& grid,
                                                     KernelBuildOptions options) {
    const Key key{std::bit_cast<std::uint64_t>(params.delta), std::bit_cast<std::uint64_t>(t), grid.id(),
                  options.renormalize};
    {
        std::shared_lock lock(mutex_);
        if (auto it = entries_.find(key); it != entries_.end()) {
            return it->second.matrix;
        }
    }
    auto matrix = std::make_shared<const KernelMatrix>(build_kernel_matrix(params, t, grid, options));
    std::unique_lock lock(mutex_);
    auto [it, inserted] = entries_.try_emplace(key, Entry{grid.keep_alive(), matrix});
    return it->second.matrix;
}

std::size_t KernelCache::size() const {
    std::shared_lock lock(mutex_);
    return entries_.size();
}

void KernelCache::clear() {
    std::unique_lock lock(mutex_);
    entries_.clear();
}

KernelCache& default_kernel_cache() {
    static KernelCache cache;
    return cache;
}

GridFunction apply(const KernelParams& params, double t, const GridFunction& f) {
    if (t == 0.0) {
        return f;
    }
    check_time(t);
    return default_kernel_cache().get(params, t, f.grid())->apply(f);
}

GridFunction apply_dx(const KernelParams& params, double t, const GridFunction& f) {
    check_time(t);
    auto& cache = default_kernel_cache();
    const auto here = cache.get(params, t, f.grid());
    const auto up = cache.get(params.shifted(), t, f.grid());
    const Grid& grid = f.grid();
    const std::size_t n = grid.size();
    const auto w = grid.mu_weights();
    std::vector<double> wf(n);
    for (std::size_t j = 0; j < n; ++j) {
        wf[j] = w[j] * f[j];
    }
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            s += (up->entry(i, j) - here->entry(i, j)) * wf[j];
        }
        out[i] = grid.node(i) / t * s;
    }
    return GridFunction(grid, std::move(out));
}

double apply_at(const KernelParams& params, double t, const GridFunction& f, double x) {
    if (t == 0.0) {
        throw std::domain_error("apply_at: t must be positive");
    }
    const Grid& grid = f.grid();
    const double extra = params.delta - grid.delta();
    double s = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        double k = kernel_density_mu(params, t, x, grid.node(j));
        if (extra != 0.0) {
            k *= std::pow(grid.node(j), extra);
        }
        s += k * grid.mu_weight(j) * f[j];
    }
    return s;
}

double invariance_defect(const KernelParams& params, double t, const GridFunction& f) {
    const GridFunction one(f.grid(), std::vector<double>(f.size(), 1.0));
    const double before = inner_mu(f, one);
    const double after = inner_mu(apply(params, t, f), one);
    return std::abs(after - before) / std::max(1.0, std::abs(before));
}

KernelCdf::KernelCdf(const KernelParams& params, double t, double x, double y_max, std::size_t cells)
    : params_(params), t_(t), x_(x) {
    check_time(t);
    if (!(y_max > 0.0) || cells == 0) {
        throw std::invalid_argument("KernelCdf: need y_max > 0 and at least one cell");
    }
    v_max_ = std::pow(y_max, params.delta);
    dv_ = v_max_ / static_cast<double>(cells);
    table_.assign(cells + 1, 0.0);
    for (std::size_t c = 0; c < cells; ++c) {
        table_[c + 1] = table_[c] + partial(c, static_cast<double>(c + 1) * dv_);
    }
}

double KernelCdf::partial(std::size_t cell, double v) const {
    using rule = boost::math::quadrature::gauss<double, 10>;
    const double a = static_cast<double>(cell) * dv_;
    if (v <= a) {
        return 0.0;
    }
    const double inv = 1.0 / params_.delta;
    return rule::integrate(
        [&](double s) { return kernel_density_mu(params_, t_, x_, std::pow(s, inv)) * inv; }, a, v);
}

double KernelCdf::operator()(double y) const {
    if (!(y > 0.0)) {
        return 0.0;
    }
    const double v = std::pow(y, params_.delta);
    if (v >= v_max_) {
        return table_.back();
    }
    const auto cell = std::min(static_cast<std::size_t>(v / dv_), table_.size() - 2);
    return table_[cell] + partial(cell, v);
}

} // namespace bessel
