#include "bessel/montecarlo.hpp"

#include "bessel/parallel.hpp"
#include "bessel/semigroup.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bessel {

namespace {

void check_inputs(double delta, double x0, const std::vector<double>& times, std::size_t n_paths) {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::domain_error("delta must lie in (0, 1)");
    }
    if (!(x0 >= 0.0) || !std::isfinite(x0)) {
        throw std::domain_error("x0 must be finite and non-negative");
    }
    if (times.empty() || times.front() != 0.0) {
        throw std::invalid_argument("times must start at 0");
    }
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (!(times[k] > times[k - 1]) || !std::isfinite(times[k])) {
            throw std::invalid_argument("times must be strictly increasing");
        }
    }
    if (n_paths == 0) {
        throw std::invalid_argument("n_paths must be positive");
    }
}

boost::random::mt19937_64 block_engine(std::uint64_t seed, std::size_t block) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(std::uint64_t(block) >> 32)};
    return boost::random::mt19937_64(seq);
}

template <class Step>
PathEnsemble simulate(double delta, double x0, const std::vector<double>& times, std::size_t n_paths,
                      std::uint64_t seed, Step step) {
    PathEnsemble out{delta, x0, times, std::vector<double>(n_paths * times.size()), seed};
    const std::size_t m = times.size();
    const std::size_t blocks = (n_paths + kPathBlock - 1) / kPathBlock;
    parallel_for(blocks, [&](std::size_t b) {
        auto rng = block_engine(seed, b);
        const std::size_t end = std::min(n_paths, (b + 1) * kPathBlock);
        for (std::size_t p = b * kPathBlock; p < end; ++p) {
            double* row = &out.paths[p * m];
            double s = x0 * x0;
            row[0] = x0;
            for (std::size_t k = 1; k < m; ++k) {
                s = step(s, times[k] - times[k - 1], rng);
                row[k] = std::sqrt(s);
            }
        }
    });
    return out;
}

} // namespace

std::size_t PathEnsemble::time_index(double t) const {
    const auto it = std::find(times.begin(), times.end(), t);
    if (it == times.end()) {
        std::ostringstream msg;
        msg << "t = " << t << " is not on the ensemble time mesh";
        throw std::invalid_argument(msg.str());
    }
    return static_cast<std::size_t>(it - times.begin());
}

std::vector<double> PathEnsemble::column(std::size_t k) const {
    std::vector<double> out(n_paths());
    for (std::size_t p = 0; p < out.size(); ++p) {
        out[p] = at(p, k);
    }
    return out;
}

MCEstimate estimate(const std::vector<double>& samples) {
    MCEstimate e;
    e.n = samples.size();
    if (e.n == 0) {
        throw std::invalid_argument("estimate of an empty sample");
    }
    double sum = 0.0;
    for (double s : samples) {
        sum += s;
    }
    e.mean = sum / static_cast<double>(e.n);
    if (e.n > 1) {
        double ss = 0.0;
        for (double s : samples) {
            ss += (s - e.mean) * (s - e.mean);
        }
        e.std_error = std::sqrt(ss / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
    }
    return e;
}

PathEnsemble sample_exact(double delta, double x0, const std::vector<double>& times, std::size_t n_paths,
                          std::uint64_t seed) {
    check_inputs(delta, x0, times, n_paths);
    return simulate(delta, x0, times, n_paths, seed, [delta](double s, double h, auto& rng) {
        // Poisson(0) is degenerate and the boost distribution wants a positive mean
        long n = 0;
        if (s > 0.0) {
            n = boost::random::poisson_distribution<long, double>(s / (2.0 * h))(rng);
        }
        return h * boost::random::gamma_distribution<double>(0.5 * delta + static_cast<double>(n), 2.0)(rng);
    });
}

PathEnsemble sample_euler(double delta, double x0, const std::vector<double>& times, std::size_t n_substeps,
                          std::size_t n_paths, std::uint64_t seed, bool zero_noise) {
    check_inputs(delta, x0, times, n_paths);
    if (n_substeps == 0) {
        throw std::invalid_argument("n_substeps must be at least 1");
    }
    return simulate(delta, x0, times, n_paths, seed, [=](double s, double h, auto& rng) {
        const double dt = h / static_cast<double>(n_substeps);
        const double sd = std::sqrt(dt);
        boost::random::normal_distribution<double> normal;
        for (std::size_t j = 0; j < n_substeps; ++j) {
            const double dw = zero_noise ? 0.0 : sd * normal(rng);
            s = std::max(0.0, s + 2.0 * std::sqrt(std::abs(s)) * dw + delta * dt);
        }
        return s;
    });
}

MCEstimate feynman_kac(const PathEnsemble& ensemble, const std::function<double(double)>& g, double t) {
    const std::size_t k = ensemble.time_index(t);
    std::vector<double> values(ensemble.n_paths());
    for (std::size_t p = 0; p < values.size(); ++p) {
        values[p] = g(ensemble.at(p, k));
    }
    return estimate(values);
}

MCEstimate martingale_defect(const PathEnsemble& ensemble, const TestFunction& f, double t,
                             const Generator& generator) {
    const std::size_t k_end = ensemble.time_index(t);
    // the window must reach past where the paths go; 50 covers any realistic ensemble
    double reach = 50.0;
    for (double x : ensemble.paths) {
        reach = std::max(reach, x);
    }
    // constants are admissible too: L kills them and they cancel in the defect
    const double tail = f.f(reach);
    const TestFunction shifted{[&](double x) { return f.f(x) - tail; }, f.df, f.d2f};
    if (!in_test_space(shifted, reach, 1e-10)) {
        throw std::invalid_argument("martingale_defect: f is not in the test space (flat at 0, compact support)");
    }
    const Generator gen = generator ? generator : [](const TestFunction& h, double d, double x) {
        return apply_generator(h, d, x);
    };
    const double f0 = f.f(ensemble.x0);
    std::vector<double> values(ensemble.n_paths());
    for (std::size_t p = 0; p < values.size(); ++p) {
        double integral = 0.0;
        double prev = gen(f, ensemble.delta, ensemble.at(p, 0));
        for (std::size_t k = 1; k <= k_end; ++k) {
            const double cur = gen(f, ensemble.delta, ensemble.at(p, k));
            integral += 0.5 * (ensemble.times[k] - ensemble.times[k - 1]) * (prev + cur);
            prev = cur;
        }
        values[p] = f.f(ensemble.at(p, k_end)) - f0 - integral;
    }
    return estimate(values);
}

double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) {
        throw std::invalid_argument("ks_statistic of an empty sample");
    }
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double c = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - c, c - static_cast<double>(i) / n});
    }
    return d;
}

double ks_against_kernel(const PathEnsemble& ensemble, double t) {
    const std::size_t k = ensemble.time_index(t);
    if (t <= 0.0) {
        throw std::invalid_argument("ks_against_kernel needs t > 0");
    }
    auto sample = ensemble.column(k);
    const double top = std::max(*std::max_element(sample.begin(), sample.end()), default_x_max(t, ensemble.x0));
    const KernelCdf cdf(KernelParams::from_delta(ensemble.delta), t, ensemble.x0, top);
    return ks_statistic(std::move(sample), [&](double y) { return cdf(y); });
}

} // namespace bessel
