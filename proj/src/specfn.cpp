#include "bessel/specfn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace bessel {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// log of the ascending series sum_k (z/2)^{2k+nu} / (k! Gamma(k+nu+1)), minus z.
double log_series_scaled(double nu, double z) {
    const double q = 0.25 * z * z;
    // Partial sums are kept relative to a running scale so that large z
    // cannot overflow.
    double log_scale = nu * std::log(0.5 * z) - log_gamma(nu + 1.0) - z;
    double term = 1.0;
    double sum = 1.0;
    for (int k = 0; k < 100000; ++k) {
        term *= q / ((k + 1.0) * (k + 1.0 + nu));
        sum += term;
        if (sum > 1e250) {
            log_scale += std::log(sum);
            term /= sum;
            sum = 1.0;
        }
        // Terms decay monotonically once k + 1 > z / 2.
        if (k + 1.0 > 0.5 * z && term < kEps * 0.25 * sum) {
            break;
        }
    }
    return log_scale + std::log(sum);
}

// Hankel expansion: e^{-z} I_nu(z) ~ (2 pi z)^{-1/2} sum_k (-1)^k a_k(nu) / z^k.
double asymptotic_scaled(double nu, double z) {
    const double mu = 4.0 * nu * nu;
    double term = 1.0;
    double sum = 1.0;
    double prev_abs = 1.0;
    for (int k = 1; k < 200; ++k) {
        const double odd = 2.0 * k - 1.0;
        term *= -(mu - odd * odd) / (8.0 * k * z);
        const double a = std::abs(term);
        if (a > prev_abs) {
            break; // divergent tail reached
        }
        sum += term;
        if (a < kEps * 0.25 * std::abs(sum)) {
            break;
        }
        prev_abs = a;
    }
    return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

} // namespace

BesselOrder::BesselOrder(double nu) : nu_(nu) {
    if (!(nu > -1.0) || !std::isfinite(nu)) {
        throw std::domain_error("BesselOrder: nu must be finite and > -1, got " + std::to_string(nu));
    }
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw std::domain_error("log_gamma: argument must be positive and finite");
    }
    int sign = 0;
    return ::lgamma_r(x, &sign);
}

double beta(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw std::domain_error("beta: arguments must be positive");
    }
    return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

double bessel_series_crossover(double nu) noexcept {
    return std::max(35.0, 2.0 * nu * nu);
}

double log_bessel_i_scaled(BesselOrder order, double z) {
    const double nu = order.nu();
    if (!(z >= 0.0) || !std::isfinite(z)) {
        throw std::domain_error("bessel_i_scaled: z must be finite and >= 0");
    }
    if (z == 0.0) {
        if (nu == 0.0) {
            return 0.0;
        }
        if (nu > 0.0) {
            return -std::numeric_limits<double>::infinity();
        }
        throw BesselPoleError("bessel_i_scaled: pole at z = 0 for negative order");
    }
    if (z <= bessel_series_crossover(nu)) {
        return log_series_scaled(nu, z);
    }
    return std::log(asymptotic_scaled(nu, z));
}

double bessel_i_scaled(BesselOrder order, double z) {
    if (z == 0.0) {
        const double nu = order.nu();
        if (nu == 0.0) {
            return 1.0;
        }
        if (nu > 0.0) {
            return 0.0;
        }
        throw BesselPoleError("bessel_i_scaled: pole at z = 0 for negative order");
    }
    const double nu = order.nu();
    if (z > 0.0 && z <= bessel_series_crossover(nu)) {
        return std::exp(log_series_scaled(nu, z));
    }
    if (z > 0.0 && std::isfinite(z)) {
        return asymptotic_scaled(nu, z);
    }
    throw std::domain_error("bessel_i_scaled: z must be finite and >= 0");
}

} // namespace bessel
