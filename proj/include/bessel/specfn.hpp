#pragma once

#include <stdexcept>

namespace bessel {

/// Raised when e^{-z} I_nu(z) is requested at z = 0 for a negative order.
/// The value is +inf there; callers must switch to the x = 0 kernel formula.
class BesselPoleError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Order of a modified Bessel function of the first kind. Must exceed -1.
class BesselOrder {
public:
    explicit BesselOrder(double nu);
    double nu() const noexcept { return nu_; }

private:
    double nu_;
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

/// Beta(a, b) = Gamma(a) Gamma(b) / Gamma(a + b) for a, b > 0.
double beta(double a, double b);

/// Exponentially scaled modified Bessel function e^{-z} I_nu(z), z >= 0.
///
/// Ascending series for z <= bessel_series_crossover(nu), Hankel asymptotic
/// expansion above it. Terms of the series are all positive when nu > -1, so
/// the sum has no cancellation; the crossover sits high enough that the
/// divergent asymptotic tail is below double precision.
///
/// At z = 0: returns 1 for nu = 0, 0 for nu > 0, and throws BesselPoleError
/// for nu < 0.
double bessel_i_scaled(BesselOrder order, double z);

/// log(e^{-z} I_nu(z)); finite for z > 0.
double log_bessel_i_scaled(BesselOrder order, double z);

/// Argument above which bessel_i_scaled switches to the asymptotic expansion.
double bessel_series_crossover(double nu) noexcept;

} // namespace bessel
