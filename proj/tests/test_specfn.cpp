#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bessel/specfn.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace bessel;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::abs(b);
}

// Closed forms of the half-integer orders, scaled by e^{-z}.
double scaled_minus_half(double z) {
    return std::sqrt(1.0 / (2.0 * std::numbers::pi * z)) * (1.0 + std::exp(-2.0 * z));
}
double scaled_plus_half(double z) {
    return std::sqrt(1.0 / (2.0 * std::numbers::pi * z)) * (-std::expm1(-2.0 * z));
}

} // namespace

TEST_CASE("log_gamma at exact points") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(rel_err(log_gamma(0.5), 0.5 * std::log(std::numbers::pi)) < 1e-14);
    CHECK(rel_err(log_gamma(5.0), std::log(24.0)) < 1e-14);
    // Gamma(x+1) = x Gamma(x)
    for (double x : {1e-3, 0.37, 2.5, 17.0, 999.0}) {
        CHECK(rel_err(log_gamma(x + 1.0), log_gamma(x) + std::log(x)) < 1e-12);
    }
    CHECK_THROWS_AS(log_gamma(0.0), std::domain_error);
    CHECK_THROWS_AS(log_gamma(-1.5), std::domain_error);
}

TEST_CASE("beta") {
    CHECK(rel_err(beta(0.5, 0.5), std::numbers::pi) < 1e-14);
    CHECK(rel_err(beta(1.0, 1.0), 1.0) < 1e-14);
    CHECK(rel_err(beta(2.0, 3.0), 1.0 / 12.0) < 1e-14);
    CHECK_THROWS_AS(beta(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(beta(1.0, -2.0), std::domain_error);
}

TEST_CASE("bessel_i_scaled reference values") {
    // mpmath, 30 digits
    CHECK(rel_err(bessel_i_scaled(BesselOrder(-0.5), 1.0), 0.452933246914620729890510260345) < 1e-13);
    CHECK(rel_err(bessel_i_scaled(BesselOrder(0.5), 1.0), 0.344951313888244625989381859524) < 1e-13);
    CHECK(bessel_i_scaled(BesselOrder(0.0), 0.0) == 1.0);
    CHECK(bessel_i_scaled(BesselOrder(0.3), 0.0) == 0.0);

    struct Ref {
        double nu, z, value;
    };
    const Ref refs[] = {
        {-0.75, 0.3, 0.924724413702329216671710376895},  {-0.75, 5.0, 0.172234061842151714922454764153},
        {-0.75, 40.0, 0.0628292506914517718611715855874}, {-0.75, 200.0, 0.0281873938120330536582590864808},
        {0.25, 1e-3, 0.164811385278754866783486243944},   {0.25, 20.0, 0.089636433474678664570824046067},
        {1.25, 36.0, 0.0652723985815232129608353888295},  {-0.25, 700.0, 0.0150806219128062771345250282446},
    };
    for (const auto& r : refs) {
        CAPTURE(r.nu);
        CAPTURE(r.z);
        CHECK(rel_err(bessel_i_scaled(BesselOrder(r.nu), r.z), r.value) < 1e-12);
    }
}

TEST_CASE("bessel_i_scaled errors") {
    CHECK_THROWS_AS(bessel_i_scaled(BesselOrder(-0.5), 0.0), BesselPoleError);
    CHECK_THROWS_AS(BesselOrder(-1.0), std::domain_error);
    CHECK_THROWS_AS(BesselOrder(-1.5), std::domain_error);
    CHECK_THROWS_AS(bessel_i_scaled(BesselOrder(0.5), -1.0), std::domain_error);
}

TEST_CASE("half-integer closed forms over [1e-6, 700]") {
    double worst = 0.0;
    for (int k = 0; k <= 2000; ++k) {
        const double z = 1e-6 * std::pow(7e8, k / 2000.0);
        worst = std::max(worst, rel_err(bessel_i_scaled(BesselOrder(-0.5), z), scaled_minus_half(z)));
        worst = std::max(worst, rel_err(bessel_i_scaled(BesselOrder(0.5), z), scaled_plus_half(z)));
    }
    CHECK(worst < 1e-10);
}

TEST_CASE("three-term recurrence in scaled form") {
    // I_{nu-1} - I_{nu+1} = (2 nu / z) I_nu; the e^{-z} factor is common.
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> nu_dist(0.01, 0.99);
    std::uniform_real_distribution<double> z_dist(0.1, 50.0);
    for (int k = 0; k < 500; ++k) {
        const double nu = nu_dist(rng);
        const double z = z_dist(rng);
        const double lo = bessel_i_scaled(BesselOrder(nu - 1.0), z);
        const double mid = bessel_i_scaled(BesselOrder(nu), z);
        const double hi = bessel_i_scaled(BesselOrder(nu + 1.0), z);
        CAPTURE(nu);
        CAPTURE(z);
        CHECK(std::abs(hi - lo + 2.0 * nu / z * mid) / mid <= 1e-9);
    }
}

TEST_CASE("positivity and monotonicity of I_nu") {
    for (double nu : {0.0, 0.25, 0.5, 1.3}) {
        double prev = 0.0;
        for (int k = 1; k <= 400; ++k) {
            const double z = 0.05 * k;
            // I_nu itself, not the scaled value, is increasing.
            const double raw = std::exp(log_bessel_i_scaled(BesselOrder(nu), z) + z);
            CHECK(raw > 0.0);
            CHECK(raw > prev);
            prev = raw;
        }
    }
    for (double nu : {-0.9, -0.75, -0.5}) {
        for (double z : {1e-8, 0.1, 3.0, 80.0}) {
            CHECK(bessel_i_scaled(BesselOrder(nu), z) > 0.0);
        }
    }
}

TEST_CASE("continuity across the series/asymptotic crossover") {
    for (double nu : {-0.75, -0.25, 0.25, 0.75, 1.25}) {
        const double zc = bessel_series_crossover(nu);
        const double below = bessel_i_scaled(BesselOrder(nu), std::nextafter(zc, 0.0));
        const double above = bessel_i_scaled(BesselOrder(nu), std::nextafter(zc, 1e300));
        CAPTURE(nu);
        CHECK(rel_err(above, below) < 1e-13);
    }
}

TEST_CASE("log form agrees with direct form") {
    for (double nu : {-0.75, 0.25}) {
        for (double z : {1e-4, 1.0, 34.0, 36.0, 500.0}) {
            const double direct = bessel_i_scaled(BesselOrder(nu), z);
            CHECK(rel_err(std::exp(log_bessel_i_scaled(BesselOrder(nu), z)), direct) < 1e-13);
        }
    }
}
