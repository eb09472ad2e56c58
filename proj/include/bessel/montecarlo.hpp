#pragma once

#include "bessel/mspace.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace bessel {

/// Simulated Bessel paths X = sqrt(S), one row per path.
struct PathEnsemble {
    double delta = 0.0;
    double x0 = 0.0;
    std::vector<double> times;
    std::vector<double> paths; // row-major, n_paths x times.size()
    std::uint64_t seed = 0;

    std::size_t n_paths() const noexcept { return times.empty() ? 0 : paths.size() / times.size(); }
    std::size_t n_times() const noexcept { return times.size(); }
    double at(std::size_t path, std::size_t k) const { return paths[path * times.size() + k]; }
    /// Index of t in times; throws std::invalid_argument when t is not a mesh time.
    std::size_t time_index(double t) const;
    /// All path values at mesh index k.
    std::vector<double> column(std::size_t k) const;
};

struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
};

/// Sample mean and standard error (n - 1 normalization).
MCEstimate estimate(const std::vector<double>& samples);

/// Paths per independently seeded block. Block b draws from a generator
/// seeded by (seed, b), so output does not depend on the thread count.
inline constexpr std::size_t kPathBlock = 1024;

/// Exact transitions of the squared Bessel process dS = 2 sqrt(S) dW + delta dt:
/// N ~ Poisson(S / 2h), S' = h * Gamma(delta/2 + N, scale 2).
PathEnsemble sample_exact(double delta, double x0, const std::vector<double>& times, std::size_t n_paths,
                          std::uint64_t seed);

/// Euler-Maruyama on S with sqrt(|S|) in the noise and S clamped at 0 after
/// each substep. zero_noise drops the Brownian increments.
PathEnsemble sample_euler(double delta, double x0, const std::vector<double>& times, std::size_t n_substeps,
                          std::size_t n_paths, std::uint64_t seed, bool zero_noise = false);

/// Estimate of E[g(X_t)].
MCEstimate feynman_kac(const PathEnsemble& ensemble, const std::function<double(double)>& g, double t);

using Generator = std::function<double(const TestFunction&, double delta, double x)>;

/// Estimate of E[f(X_t) - f(x0) - int_0^t Lf(X_r) dr], trapezoid in time on the
/// ensemble mesh. An empty generator means apply_generator. The generator can be swapped out for negative controls.
/// Throws std::invalid_argument unless f is a test function plus a constant.
MCEstimate martingale_defect(const PathEnsemble& ensemble, const TestFunction& f, double t,
                             const Generator& generator = {});

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);

/// KS distance of the ensemble at time t to the transition kernel from x0.
double ks_against_kernel(const PathEnsemble& ensemble, double t);

} // namespace bessel
