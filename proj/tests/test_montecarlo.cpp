#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bessel/montecarlo.hpp"
#include "bessel/parallel.hpp"
#include "bessel/semigroup.hpp"

#include <cmath>

using namespace bessel;

namespace {

std::vector<double> uniform_times(double horizon, std::size_t steps) {
    std::vector<double> ts(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        ts[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    return ts;
}

double square(double x) {
    return x * x;
}

} // namespace

TEST_CASE("estimate") {
    const auto e = estimate({1.0, 2.0, 3.0, 4.0});
    CHECK(e.n == 4);
    CHECK(e.mean == doctest::Approx(2.5));
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    CHECK(estimate({7.0}).std_error == 0.0);
    CHECK_THROWS_AS(estimate({}), std::invalid_argument);
}

TEST_CASE("exact sampler: shape of the ensemble") {
    const auto ts = uniform_times(1.0, 4);
    const auto e = sample_exact(0.5, 1.3, ts, 3000, 1);
    CHECK(e.n_paths() == 3000);
    CHECK(e.n_times() == 5);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        CHECK(e.at(p, 0) == 1.3);
    }
    for (double x : e.paths) {
        CHECK(x >= 0.0);
    }
    CHECK(e.seed == 1);
}

TEST_CASE("exact sampler: domain errors") {
    CHECK_THROWS_AS(sample_exact(1.0, 0.0, {0.0, 1.0}, 10, 1), std::domain_error);
    CHECK_THROWS_AS(sample_exact(0.5, -1.0, {0.0, 1.0}, 10, 1), std::domain_error);
    CHECK_THROWS_AS(sample_exact(0.5, 0.0, {0.1, 1.0}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_exact(0.5, 0.0, {0.0, 1.0, 1.0}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_exact(0.5, 0.0, {0.0, 1.0}, 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_euler(0.5, 0.0, {0.0, 1.0}, 0, 10, 1), std::invalid_argument);
}

TEST_CASE("exact sampler: first two moments of S") {
    // E S_t = x0^2 + delta t; at x0 = 0, S_t = t Gamma(delta/2, 2) exercises shape < 1
    const auto ts = uniform_times(2.0, 4);
    for (double delta : {0.25, 0.5, 0.75}) {
        for (double x0 : {0.0, 1.0}) {
            const auto e = sample_exact(delta, x0, ts, 40000, 21);
            for (double t : {0.5, 2.0}) {
                const auto m = feynman_kac(e, square, t);
                CHECK(std::abs(m.mean - (x0 * x0 + delta * t)) <= 4 * m.std_error);
            }
            if (x0 == 0.0) {
                const auto m2 = feynman_kac(e, [](double x) { return std::pow(x, 4); }, 2.0);
                const double expected = 2 * delta * 4.0 + delta * delta * 4.0;
                CHECK(std::abs(m2.mean - expected) <= 4 * m2.std_error);
            }
        }
    }
}

TEST_CASE("exact sampler: law matches the kernel") {
    for (double x0 : {0.0, 1.0}) {
        const auto e = sample_exact(0.5, x0, {0.0, 0.5, 1.0}, 100000, 5);
        CHECK(ks_against_kernel(e, 1.0) < 0.01);
        CHECK(ks_against_kernel(e, 0.5) < 0.01);
    }
    // from 0 the kernel is the closed form density at the origin: same law
    const auto e = sample_exact(0.25, 0.0, {0.0, 1.0}, 20000, 6);
    CHECK(ks_against_kernel(e, 1.0) < 0.02);
    // a wrong dimension is detected
    auto shifted = e;
    shifted.delta = 0.75;
    CHECK(ks_against_kernel(shifted, 1.0) > 0.05);
}

TEST_CASE("KS statistic") {
    std::vector<double> grid;
    for (int i = 0; i < 1000; ++i) {
        grid.push_back((i + 0.5) / 1000.0);
    }
    const auto uniform = [](double y) { return std::clamp(y, 0.0, 1.0); };
    CHECK(ks_statistic(grid, uniform) == doctest::Approx(0.0005));
    CHECK(ks_statistic({0.5}, uniform) == doctest::Approx(0.5));
    CHECK_THROWS_AS(ks_statistic({}, uniform), std::invalid_argument);
}

TEST_CASE("reproducibility") {
    const auto ts = uniform_times(1.0, 3);
    const auto a = sample_exact(0.5, 0.7, ts, 5000, 99);
    const auto b = sample_exact(0.5, 0.7, ts, 5000, 99);
    CHECK(a.paths == b.paths);
    const auto c = sample_exact(0.5, 0.7, ts, 5000, 100);
    CHECK(a.paths != c.paths);

    set_thread_count(3);
    const auto threaded = sample_exact(0.5, 0.7, ts, 5000, 99);
    const auto euler_threaded = sample_euler(0.5, 0.7, ts, 4, 5000, 99);
    set_thread_count(1);
    CHECK(threaded.paths == a.paths);
    CHECK(euler_threaded.paths == sample_euler(0.5, 0.7, ts, 4, 5000, 99).paths);

    // a prefix of a larger ensemble is the smaller ensemble
    const auto big = sample_exact(0.5, 0.7, ts, 6000, 99);
    CHECK(std::equal(a.paths.begin(), a.paths.end(), big.paths.begin()));
}

TEST_CASE("std error scales like 1/sqrt(n)") {
    const auto g = [](double x) { return std::exp(-x * x); };
    const auto small = feynman_kac(sample_exact(0.5, 1.0, {0.0, 1.0}, 10000, 3), g, 1.0);
    const auto large = feynman_kac(sample_exact(0.5, 1.0, {0.0, 1.0}, 40000, 4), g, 1.0);
    CHECK(small.std_error / large.std_error == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("Feynman-Kac agrees with the semigroup") {
    const auto bump_g = shaped_bump(2.5, 0.4, 0.0);
    for (double delta : {0.25, 0.5, 0.75}) {
        const Grid grid = Grid::make(delta, default_x_max(1.0, 2.5), 512, GridScheme::graded);
        const auto g = GridFunction::sample(grid, bump_g.f);
        const auto params = KernelParams::from_delta(delta);
        for (double x0 : {0.0, 1.0}) {
            const auto e = sample_exact(delta, x0, {0.0, 0.4, 1.0}, 40000, 17);
            for (double t : {0.4, 1.0}) {
                const auto m = feynman_kac(e, bump_g.f, t);
                CHECK(std::abs(m.mean - apply_at(params, t, g, x0)) <= 4 * m.std_error + 1e-4);
            }
        }
    }
}

TEST_CASE("Feynman-Kac trivial cases") {
    const auto e = sample_exact(0.5, 1.0, {0.0, 1.0}, 2000, 8);
    const auto one = feynman_kac(e, [](double) { return 1.0; }, 1.0);
    CHECK(one.mean == 1.0);
    CHECK(one.std_error == 0.0);
    const auto far = feynman_kac(e, [](double x) { return x > 100.0 ? 1.0 : 0.0; }, 1.0);
    CHECK(far.mean == 0.0);
    CHECK(feynman_kac(e, square, 0.0).mean == doctest::Approx(1.0));
    CHECK_THROWS_AS(feynman_kac(e, square, 0.5), std::invalid_argument);
}

TEST_CASE("martingale defect") {
    const auto e = sample_exact(0.5, 1.0, uniform_times(1.0, 50), 40000, 31);
    for (const auto& f : {bump(2.0), shaped_bump(2.5, 0.5, 0.0), shaped_bump(3.0, -0.2, 0.1)}) {
        const auto m = martingale_defect(e, f, 1.0);
        CHECK(std::abs(m.mean) <= 4 * m.std_error);
        const auto half = martingale_defect(e, f, 0.5);
        CHECK(std::abs(half.mean) <= 4 * half.std_error);

        const auto no_drift = martingale_defect(e, f, 1.0, [](const TestFunction& h, double, double x) {
            return 0.5 * h.d2f(x);
        });
        CHECK(std::abs(no_drift.mean) > 4 * no_drift.std_error);
    }

    const TestFunction constant{[](double) { return 2.0; }, [](double) { return 0.0; }, [](double) { return 0.0; }};
    const auto c = martingale_defect(e, constant, 1.0);
    CHECK(c.mean == 0.0);
    CHECK(c.std_error == 0.0);

    const TestFunction tilted{[](double x) { return x * std::exp(-x * x); },
                              [](double x) { return (1 - 2 * x * x) * std::exp(-x * x); },
                              [](double x) { return (4 * x * x * x - 6 * x) * std::exp(-x * x); }};
    CHECK_THROWS_AS(martingale_defect(e, tilted, 1.0), std::invalid_argument);
    const TestFunction ramp{[](double x) { return x * x; }, [](double x) { return 2 * x; }, [](double) { return 2.0; }};
    CHECK_THROWS_AS(martingale_defect(e, ramp, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(martingale_defect(e, bump(2.0), 0.37), std::invalid_argument);
}

TEST_CASE("martingale defect from the origin") {
    const auto e = sample_exact(0.25, 0.0, uniform_times(1.0, 50), 40000, 32);
    const auto m = martingale_defect(e, bump(2.0), 1.0);
    CHECK(std::abs(m.mean) <= 4 * m.std_error);
}

TEST_CASE("Euler: zero noise is the drift ODE") {
    const auto ts = uniform_times(2.0, 8);
    const auto e = sample_euler(0.5, 1.2, ts, 16, 10, 4, true);
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        for (std::size_t k = 0; k < ts.size(); ++k) {
            CHECK(square(e.at(p, k)) == doctest::Approx(1.44 + 0.5 * ts[k]).epsilon(1e-13));
        }
    }
}

TEST_CASE("Euler: non-negative, converges to the exact law from above in S") {
    // the clamp at 0 biases S upward; the bias decays slowly (about dt^(1/4))
    const auto g = [](double x) { return std::exp(-x * x); };
    const auto exact = sample_exact(0.5, 1.0, {0.0, 1.0}, 40000, 61);
    const auto target = feynman_kac(exact, g, 1.0);
    const auto drift = feynman_kac(exact, square, 1.0);
    CHECK(std::abs(drift.mean - 1.5) <= 4 * drift.std_error);
    double prev_gap = 1e9;
    for (std::size_t sub : {10u, 160u, 2560u}) {
        const auto e = sample_euler(0.5, 1.0, {0.0, 1.0}, sub, 40000, 62);
        for (double x : e.paths) {
            REQUIRE(x >= 0.0);
        }
        const auto m = feynman_kac(e, g, 1.0);
        const double joint = std::hypot(m.std_error, target.std_error);
        const double gap = std::abs(m.mean - target.mean);
        CHECK(gap <= 4 * joint + 0.25 * std::pow(1.0 / static_cast<double>(sub), 0.25));
        CHECK(gap < prev_gap);
        prev_gap = gap;
        const auto s = feynman_kac(e, square, 1.0);
        CHECK(s.mean >= 1.5 - 4 * s.std_error);
    }
}
