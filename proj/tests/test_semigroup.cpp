#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bessel/parallel.hpp"
#include "bessel/semigroup.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <thread>

using namespace bessel;

namespace {

double rel_err(double a, double b) {
    return std::abs(a - b) / std::abs(b);
}

double reflected_gaussian(double t, double x, double y) {
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    return c * (std::exp(-(x - y) * (x - y) / (2 * t)) + std::exp(-(x + y) * (x + y) / (2 * t)));
}

double reflected_gaussian_dx(double t, double x, double y) {
    const double c = 1.0 / std::sqrt(2.0 * std::numbers::pi * t);
    return c * (-(x - y) / t * std::exp(-(x - y) * (x - y) / (2 * t)) -
                (x + y) / t * std::exp(-(x + y) * (x + y) / (2 * t)));
}

Grid standard_grid(double delta, std::size_t cells = 512) {
    return Grid::make(delta, default_x_max(1.0, 3.0), cells, GridScheme::graded);
}

GridFunction smooth_source(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> radius(1.0, 3.0);
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    const auto f = shaped_bump(radius(rng), coef(rng), coef(rng), 1.0 + coef(rng));
    return GridFunction::sample(g, f.f);
}

} // namespace

TEST_CASE("kernel: delta = 1 reduces to the reflected Gaussian") {
    const auto p = KernelParams::from_delta(1.0);
    CHECK(p.nu == -0.5);
    CHECK(rel_err(kernel_density(p, 1.0, 1.0, 2.0), reflected_gaussian(1.0, 1.0, 2.0)) < 1e-12);
    for (double t : {0.1, 1.0}) {
        for (double x : {0.01, 0.3, 2.0, 5.0}) {
            for (double y : {0.01, 1.0, 4.5}) {
                CHECK(rel_err(kernel_density(p, t, x, y), reflected_gaussian(t, x, y)) < 1e-8);
            }
        }
    }
}

TEST_CASE("kernel: x = 0 form") {
    const auto p = KernelParams::from_delta(0.5);
    // 2^{-nu} t^{-(nu+1)} y^{2nu+1} e^{-y^2/2t} / Gamma(nu+1), nu = -3/4 (mpmath)
    CHECK(rel_err(kernel_density(p, 1.0, 0.0, 1.0), 0.281348225763182281307395811372) < 1e-13);
    // the cutoff branch agrees with the Bessel branch just above it
    for (double y : {0.2, 1.0, 3.0}) {
        const double at_zero = kernel_density(p, 0.7, 0.0, y);
        CHECK(rel_err(kernel_density(p, 0.7, 0.5 * kKernelXMin, y), at_zero) < 1e-14);
        CHECK(rel_err(kernel_density(p, 0.7, 2.0 * kKernelXMin, y), at_zero) < 1e-12);
        CHECK(rel_err(kernel_density(p, 0.7, 1e-4, y), at_zero) < 1e-6);
    }
}

TEST_CASE("kernel: domain errors") {
    const auto p = KernelParams::from_delta(0.5);
    CHECK_THROWS_AS(kernel_density(p, 0.0, 1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(kernel_density(p, 1.0, 1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(kernel_density(p, 1.0, -1.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(kernel_dx(p, 1.0, 0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(KernelParams::from_delta(0.0), std::invalid_argument);
}

TEST_CASE("kernel: large xy/t stays finite") {
    const auto p = KernelParams::from_delta(0.25);
    const double v = kernel_density(p, 0.01, 10.0, 10.0);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1.0 / std::sqrt(2 * std::numbers::pi * 0.01)).epsilon(1e-2));
}

TEST_CASE("kernel: symmetry identity p(x,y) y^{1-d} = p(y,x) x^{1-d}") {
    for (double delta : {0.25, 0.5, 0.75}) {
        const auto p = KernelParams::from_delta(delta);
        double worst = 0.0;
        for (int i = 1; i <= 100; ++i) {
            for (int j = 1; j <= 100; ++j) {
                const double x = 0.06 * i;
                const double y = 0.06 * j;
                const double a = kernel_density(p, 0.5, x, y) * std::pow(y, 1 - delta);
                const double b = kernel_density(p, 0.5, y, x) * std::pow(x, 1 - delta);
                worst = std::max(worst, std::abs(a - b) / b);
            }
        }
        CHECK(worst <= 1e-10);
    }
}

TEST_CASE("kernel: density integrates to one") {
    for (double delta : {0.25, 0.5, 0.75}) {
        const auto p = KernelParams::from_delta(delta);
        for (double t : {0.1, 1.0}) {
            for (double x : {0.0, 0.5, 2.0}) {
                const KernelCdf cdf(p, t, x, x + 12.0 * std::sqrt(t));
                CHECK(std::abs(cdf.total_mass() - 1.0) <= 1e-6);
            }
        }
    }
}

TEST_CASE("kernel cdf from the origin is a regularized incomplete gamma") {
    // X_t^2 / t is chi-square with delta degrees of freedom when X_0 = 0.
    for (double delta : {0.25, 0.75}) {
        const auto p = KernelParams::from_delta(delta);
        const KernelCdf cdf(p, 1.0, 0.0, 12.0);
        for (double y : {1e-6, 0.01, 0.3, 1.0, 2.5}) {
            CHECK(cdf(y) == doctest::Approx(boost::math::gamma_p(delta / 2, y * y / 2)).epsilon(1e-9));
        }
    }
}

TEST_CASE("kernel_dx: finite-difference and closed-form oracles") {
    const auto p = KernelParams::from_delta(0.5);
    const double h = 1e-5;
    const double fd = (kernel_density(p, 1.0, 1.0 + h, 1.0) - kernel_density(p, 1.0, 1.0 - h, 1.0)) / (2 * h);
    CHECK(rel_err(kernel_dx(p, 1.0, 1.0, 1.0), fd) <= 1e-6);

    const auto p1 = KernelParams::from_delta(1.0);
    for (double x : {0.05, 0.5, 1.0, 3.0}) {
        for (double y : {0.2, 1.0, 2.0}) {
            CHECK(rel_err(kernel_dx(p1, 1.0, x, y), reflected_gaussian_dx(1.0, x, y)) < 1e-10);
        }
    }
    // far to the right of y the density decreases in x
    CHECK(kernel_dx(p, 1.0, 4.0, 0.5) < 0.0);
    CHECK(kernel_dx(p, 0.3, 2.0, 0.2) < 0.0);
}

TEST_CASE("kernel matrix: normalization, symmetry, concentration") {
    for (double delta : {0.25, 0.5, 0.75}) {
        const Grid g = standard_grid(delta);
        const auto p = KernelParams::from_delta(delta);
        for (double t : {0.1, 1.0}) {
            const auto k = build_kernel_matrix(p, t, g);
            const auto d = k.diagnostics();
            CHECK(std::abs(d.row_mass_min_interior - 1.0) <= 1e-6);
            CHECK(std::abs(d.row_mass_max_interior - 1.0) <= 1e-6);
            CHECK(d.symmetry_defect_max <= 1e-10);
            CHECK(d.row_mass_min > 0.4); // the last row loses about half its mass
            for (std::size_t i = 1; i < g.size(); i += 37) {
                for (std::size_t j = 1; j < g.size(); j += 41) {
                    CHECK(k.entry(i, j) >= 0.0);
                    CHECK(std::isfinite(k.entry(i, j)));
                    const double lhs = k.density(i, j) * std::pow(g.node(j), 1 - delta);
                    const double rhs = kernel_density(p, t, g.node(j), g.node(i)) * std::pow(g.node(i), 1 - delta);
                    if (lhs > 1e-250) {
                        CHECK(rel_err(lhs, rhs) <= 1e-10);
                    }
                }
            }
        }
    }
    // small t: rows concentrate on the diagonal
    const Grid g = Grid::make(0.5, 4.0, 1024, GridScheme::uniform);
    const auto k = build_kernel_matrix(KernelParams::from_delta(0.5), 1e-3, g);
    for (std::size_t i = 200; i < 800; i += 50) {
        double near = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (std::abs(g.node(j) - g.node(i)) < 0.2) {
                near += k.entry(i, j) * g.mu_weight(j);
            }
        }
        CHECK(near == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("kernel matrix: renormalization is opt-in") {
    const Grid g = standard_grid(0.5, 128);
    const auto p = KernelParams::from_delta(0.5);
    const auto plain = build_kernel_matrix(p, 1.0, g);
    const auto normed = build_kernel_matrix(p, 1.0, g, {.renormalize = true});
    CHECK_FALSE(plain.renormalized());
    CHECK(normed.renormalized());
    const std::size_t last = g.size() - 1;
    double mass = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        mass += normed.entry(last, j) * g.mu_weight(j);
    }
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(plain.row_mass(last) < 0.6);
}

TEST_CASE("apply: identity at t = 0, constants preserved") {
    const Grid g = standard_grid(0.5);
    const auto p = KernelParams::from_delta(0.5);
    std::mt19937_64 rng(3);
    const auto f = smooth_source(g, rng);
    const auto same = apply(p, 0.0, f);
    for (std::size_t i = 0; i < g.size(); ++i) {
        CHECK(same[i] == f[i]);
    }
    const auto one = GridFunction::sample(g, [](double) { return 1.0; });
    const auto p1 = apply(p, 0.5, one);
    for (std::size_t i = 0; i < g.size() && g.node(i) <= g.x_max() / 2; ++i) {
        CHECK(std::abs(p1[i] - 1.0) <= 1e-6);
    }
}

TEST_CASE("apply: Chapman-Kolmogorov") {
    const Grid g = standard_grid(0.5);
    const auto p = KernelParams::from_delta(0.5);
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const auto f = smooth_source(g, rng);
        const auto lhs = apply(p, 1.0, f);
        const auto rhs = apply(p, 0.3, apply(p, 0.7, f));
        CHECK(norm_mu(lhs - rhs) <= 1e-5 * norm_mu(f));
    }
}

TEST_CASE("property: semigroup symmetry, contraction, positivity") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (double delta : {0.25, 0.5, 0.75}) {
        const Grid g = standard_grid(delta, 256);
        const auto p = KernelParams::from_delta(delta);
        for (double t : {0.01, 0.1, 1.0}) {
            for (int trial = 0; trial < 5; ++trial) {
                const auto f = smooth_source(g, rng);
                const auto h = smooth_source(g, rng);
                const auto pf = apply(p, t, f);
                const auto ph = apply(p, t, h);
                CHECK(std::abs(inner_mu(pf, h) - inner_mu(f, ph)) <= 1e-12 * norm_mu(f) * norm_mu(h));
                CHECK(norm_mu(pf) <= norm_mu(f) * (1 + 1e-6));
                // rough non-negative data
                std::vector<double> v(g.size());
                for (double& x : v) {
                    x = unit(rng) < 0.3 ? unit(rng) : 0.0;
                }
                for (double y : apply(p, t, GridFunction(g, v)).values()) {
                    CHECK(y >= 0.0);
                }
            }
        }
    }
}

TEST_CASE("apply_dx: Schauder bounds and agreement with differencing") {
    std::mt19937_64 rng(33);
    for (double delta : {0.25, 0.5, 0.75}) {
        const Grid g = standard_grid(delta);
        const auto p = KernelParams::from_delta(delta);
        for (double t : {0.05, 0.2, 1.0}) {
            const auto f = smooth_source(g, rng);
            const double nf = norm_mu(f);
            const auto d = apply_dx(p, t, f);
            CHECK(d[0] == 0.0);
            CHECK(norm_mu(d) <= nf / std::sqrt(t) * (1 + 1e-3));
            CHECK(norm_mu(d) <= nf / t * (1 + 1e-3));
            // H-bound of the smoothed function
            const auto pf = apply(p, t, f);
            const double h_norm = std::sqrt(norm_mu(pf) * norm_mu(pf) + 0.5 * norm_mu(d) * norm_mu(d));
            CHECK(h_norm <= (1 + 1 / std::sqrt(t)) * nf * (1 + 1e-6));
        }
    }
}

TEST_CASE("apply_dx agrees with differencing P_t f") {
    std::mt19937_64 rng(34);
    for (double delta : {0.25, 0.5, 0.75}) {
        const Grid g = standard_grid(delta, 2048);
        const auto p = KernelParams::from_delta(delta);
        for (double t : {0.05, 0.2, 1.0}) {
            const auto f = smooth_source(g, rng);
            const auto d = apply_dx(p, t, f);
            const auto fd = derivative(apply(p, t, f));
            double worst = 0.0;
            for (std::size_t i = 0; i < g.size(); ++i) {
                worst = std::max(worst, std::abs(fd[i] - d[i]));
            }
            CAPTURE(delta);
            CAPTURE(t);
            CHECK(worst <= 1e-4);
        }
    }
}

TEST_CASE("invariance of mu") {
    const Grid g = standard_grid(0.5);
    const auto p = KernelParams::from_delta(0.5);
    const auto f = GridFunction::sample(g, shaped_bump(2.0, 0.5, -0.2).f);
    CHECK(invariance_defect(p, 0.5, f) <= 1e-4);
    CHECK(invariance_defect(p, 0.5, GridFunction(g)) == 0.0);
}

TEST_CASE("generator consistency: (P_t f - f)/t -> L f at first order") {
    const double delta = 0.5;
    const Grid g = Grid::make(delta, 9.0, 1024, GridScheme::graded);
    const auto p = KernelParams::from_delta(delta);
    // Even, entire profile: L^k f stays in the test space with tame growth, so
    // the expansion P_t f = f + t L f + O(t^2) is visible at moderate t.
    const TestFunction tf{
        [](double x) { return (1 + 0.3 * x * x) * std::exp(-x * x / 2); },
        [](double x) { return (0.6 * x - x * (1 + 0.3 * x * x)) * std::exp(-x * x / 2); },
        [](double x) {
            const double a = -0.4 * x - 0.3 * x * x * x;
            return (-0.4 - 0.9 * x * x - x * a) * std::exp(-x * x / 2);
        }};
    REQUIRE(in_test_space(tf, g.x_max(), 1e-10));
    const auto f = GridFunction::sample(g, tf.f);
    const auto lf = apply_generator(tf, g);
    std::vector<double> errs;
    for (double t : {0.04, 0.02, 0.01}) {
        auto diff = apply(p, t, f) - f;
        diff *= 1.0 / t;
        errs.push_back(norm_mu(diff - lf));
    }
    CHECK(errs[2] < 2e-3);
    CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.1));
    CHECK(errs[1] / errs[2] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("kernel cache: reuse and concurrent access") {
    KernelCache cache;
    const Grid g = standard_grid(0.5, 64);
    const auto p = KernelParams::from_delta(0.5);
    const auto a = cache.get(p, 0.25, g);
    const auto b = cache.get(p, 0.25, g);
    CHECK(a == b);
    CHECK(cache.size() == 1);
    CHECK(cache.get(p, 0.25, g, {.renormalize = true}) != a);
    CHECK(cache.get(p, std::nextafter(0.25, 1.0), g) != a);

    std::vector<std::thread> pool;
    std::vector<std::shared_ptr<const KernelMatrix>> got(8);
    for (int k = 0; k < 8; ++k) {
        pool.emplace_back([&, k] { got[k] = cache.get(p, 0.1 * (1 + k % 2), g); });
    }
    for (auto& th : pool) {
        th.join();
    }
    CHECK(got[0] == got[2]);
    CHECK(got[1] == got[3]);
    cache.clear();
    CHECK(cache.size() == 0);
}

TEST_CASE("parallel construction matches serial") {
    const Grid g = standard_grid(0.5, 128);
    const auto p = KernelParams::from_delta(0.5);
    const auto serial = build_kernel_matrix(p, 0.3, g);
    set_thread_count(4);
    const auto threaded = build_kernel_matrix(p, 0.3, g);
    set_thread_count(1);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            CHECK(serial.entry(i, j) == threaded.entry(i, j));
        }
    }
}
