#include "bessel/solver.hpp"

#include "bessel/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bessel {

TimeMesh TimeMesh::uniform(double horizon, std::size_t n_steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("TimeMesh: horizon must be positive");
    }
    if (n_steps == 0) {
        throw std::invalid_argument("TimeMesh: need at least one step");
    }
    TimeMesh mesh;
    mesh.step_ = horizon / static_cast<double>(n_steps);
    mesh.times_.resize(n_steps + 1);
    for (std::size_t k = 0; k < n_steps; ++k) {
        mesh.times_[k] = mesh.lag(k);
    }
    mesh.times_.back() = horizon;
    return mesh;
}

double TimeMesh::lag(std::size_t j) const noexcept {
    return static_cast<double>(j) * step_;
}

SpaceTimeFunction SpaceTimeFunction::zeros(const TimeMesh& mesh, const Grid& grid) {
    return SpaceTimeFunction{mesh, std::vector<GridFunction>(mesh.times().size(), GridFunction(grid))};
}

SpaceTimeFunction operator-(const SpaceTimeFunction& a, const SpaceTimeFunction& b) {
    if (a.slices.size() != b.slices.size()) {
        throw std::invalid_argument("SpaceTimeFunction: mesh mismatch");
    }
    SpaceTimeFunction out = a;
    for (std::size_t k = 0; k < out.slices.size(); ++k) {
        out.slices[k] -= b.slices[k];
    }
    return out;
}

void SemilinearProblem::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw std::invalid_argument("problem: horizon must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("problem: delta must lie in (0,1)");
    }
    if (!(lipschitz_c > 0.0) || !std::isfinite(lipschitz_c)) {
        throw std::invalid_argument("problem: Lipschitz constant must be positive");
    }
    if (!f) {
        throw std::invalid_argument("problem: nonlinearity is empty");
    }
    if (terminal.grid().delta() != delta) {
        throw std::invalid_argument("problem: terminal datum lives on a grid of another dimension");
    }
}

double lipschitz_spot_check(const SemilinearProblem& problem, std::size_t samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> time(0.0, problem.horizon);
    std::uniform_real_distribution<double> space(0.0, problem.terminal.grid().x_max());
    std::uniform_real_distribution<double> value(-5.0, 5.0);
    std::uniform_real_distribution<double> nudge(-1e-2, 1e-2);
    double worst = 0.0;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = time(rng);
        const double x = space(rng);
        const double y1 = value(rng);
        const double z1 = value(rng);
        // alternate far and nearby pairs to probe global and local slopes
        const bool near = (k % 2) == 1;
        const double y2 = near ? y1 + nudge(rng) : value(rng);
        const double z2 = near ? z1 + nudge(rng) : value(rng);
        const double dist = std::abs(y1 - y2) + std::abs(z1 - z2);
        if (dist == 0.0) {
            continue;
        }
        worst = std::max(worst, std::abs(problem.f(t, x, y1, z1) - problem.f(t, x, y2, z2)) / dist);
    }
    return worst;
}

double contraction_constant(const SemilinearProblem& problem) {
    return std::numbers::sqrt2 * problem.lipschitz_c * (std::sqrt(problem.horizon) + 1.0);
}

double lambda_threshold(const SemilinearProblem& problem) {
    const double ct = contraction_constant(problem);
    return ct * ct * problem.horizon * std::numbers::pi;
}

double b_lambda_norm(const SpaceTimeFunction& u, double lambda) {
    const auto times = u.mesh.times();
    std::vector<double> integrand(times.size());
    for (std::size_t k = 0; k < times.size(); ++k) {
        integrand[k] = std::exp(lambda * times[k]) * norms(u.slices[k]).h;
    }
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        s += 0.5 * (times[k + 1] - times[k]) * (integrand[k] + integrand[k + 1]);
    }
    return s;
}

DuhamelPropagator::DuhamelPropagator(KernelParams params, TimeMesh mesh, Grid grid)
    : params_(params), mesh_(std::move(mesh)), grid_(std::move(grid)) {
    const std::size_t n = mesh_.n_steps();
    lags_.resize(n + 1);
    for (std::size_t j = 1; j <= n; ++j) {
        lags_[j] = cache_.get(params_, mesh_.lag(j), grid_);
    }
    half_step_ = cache_.get(params_, 0.5 * mesh_.step(), grid_);
}

GridFunction DuhamelPropagator::apply(std::size_t lag_index, const GridFunction& f) const {
    if (lag_index == 0) {
        return f;
    }
    return lags_.at(lag_index)->apply(f);
}

SpaceTimeFunction DuhamelPropagator::linear_solution(const GridFunction& g, const SpaceTimeFunction& l) const {
    const std::size_t n = mesh_.n_steps();
    if (l.slices.size() != n + 1) {
        throw std::invalid_argument("linear_solution: source is not on the propagator mesh");
    }
    const double dt = mesh_.step();
    std::vector<GridFunction> out(n + 1, GridFunction(grid_));
    parallel_for(n + 1, [&](std::size_t k) {
        GridFunction v = apply(n - k, g);
        if (k < n) {
            // first cell: smoothed midpoint dt * P_{dt/2}[(l_k + l_{k+1}) / 2]
            GridFunction mid = l.slices[k] + l.slices[k + 1];
            mid *= 0.5 * dt;
            v += half_step_->apply(mid);
            // remaining cells: trapezoid
            for (std::size_t m = k + 1; m <= n && k + 1 < n; ++m) {
                const double w = (m == k + 1 || m == n) ? 0.5 * dt : dt;
                GridFunction term = apply(m - k, l.slices[m]);
                term *= w;
                v += term;
            }
        }
        out[k] = std::move(v);
    });
    return SpaceTimeFunction{mesh_, std::move(out)};
}

SpaceTimeFunction linear_solution(const GridFunction& g, const SpaceTimeFunction& l, const KernelParams& params,
                                  const TimeMesh& mesh) {
    const DuhamelPropagator propagator(params, mesh, g.grid());
    return propagator.linear_solution(g, l);
}

SpaceTimeFunction nonlinearity_field(const SemilinearProblem& problem, const SpaceTimeFunction& u) {
    const auto times = u.mesh.times();
    std::vector<GridFunction> field(times.size(), GridFunction(u.grid()));
    parallel_for(times.size(), [&](std::size_t m) {
        const GridFunction& slice = u.slices[m];
        const GridFunction du = derivative(slice);
        const auto x = slice.grid().nodes();
        std::vector<double> v(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            v[j] = problem.f(times[m], x[j], slice[j], du[j]);
            if (!std::isfinite(v[j])) {
                std::ostringstream msg;
                msg << "nonlinearity returned a non-finite value at (s, x) = (" << times[m] << ", " << x[j]
                    << "), u = " << slice[j] << ", du = " << du[j];
                throw std::runtime_error(msg.str());
            }
        }
        field[m] = GridFunction(slice.grid(), std::move(v));
    });
    return SpaceTimeFunction{u.mesh, std::move(field)};
}

SpaceTimeFunction apply_A(const SemilinearProblem& problem, const SpaceTimeFunction& u,
                          const DuhamelPropagator& propagator) {
    return propagator.linear_solution(problem.terminal, nonlinearity_field(problem, u));
}

SpaceTimeFunction apply_A(const SemilinearProblem& problem, const SpaceTimeFunction& u) {
    const DuhamelPropagator propagator(problem.kernel_params(), u.mesh, u.grid());
    return apply_A(problem, u, propagator);
}

std::vector<double> mild_residual(const SemilinearProblem& problem, const SpaceTimeFunction& u,
                                  const DuhamelPropagator& propagator) {
    const auto au = apply_A(problem, u, propagator);
    std::vector<double> r(u.slices.size());
    for (std::size_t k = 0; k < r.size(); ++k) {
        r[k] = norm_mu(u.slices[k] - au.slices[k]);
    }
    return r;
}

SolveResult solve(const SemilinearProblem& problem, const TimeMesh& mesh, const Grid& grid,
                  const SolveOptions& options) {
    if (!(problem.terminal.grid() == grid)) {
        throw std::invalid_argument("solve: terminal datum is not on the solver grid");
    }
    const DuhamelPropagator propagator(problem.kernel_params(), mesh, grid);
    return solve(problem, propagator, options);
}

SolveResult solve(const SemilinearProblem& problem, const DuhamelPropagator& propagator,
                  const SolveOptions& options) {
    problem.validate();
    if (!(options.tol > 0.0)) {
        throw std::invalid_argument("solve: tolerance must be positive");
    }
    if (options.max_iter == 0) {
        throw std::invalid_argument("solve: max_iter must be positive");
    }
    const TimeMesh& mesh = propagator.mesh();
    SolverReport report;
    report.lambda = options.lambda.value_or(2.0 * lambda_threshold(problem));
    if (!(report.lambda >= 0.0)) {
        throw std::invalid_argument("solve: lambda must be non-negative");
    }

    SpaceTimeFunction u = [&] {
        if (options.initial) {
            if (options.initial->slices.size() != mesh.times().size()) {
                throw std::invalid_argument("solve: initial guess is not on the mesh");
            }
            return *options.initial;
        }
        const auto zero = SpaceTimeFunction::zeros(mesh, propagator.grid());
        return propagator.linear_solution(problem.terminal, zero);
    }();

    const double floor = 1e-12;
    for (std::size_t iter = 1; iter <= options.max_iter; ++iter) {
        SpaceTimeFunction next = apply_A(problem, u, propagator);
        const SpaceTimeFunction diff = next - u;
        const double step_norm = b_lambda_norm(diff, report.lambda);
        const double scale = std::max(1.0, b_lambda_norm(next, report.lambda));
        double mild = 0.0;
        double size = 0.0;
        for (std::size_t k = 0; k < diff.slices.size(); ++k) {
            mild = std::max(mild, norm_mu(diff.slices[k]));
            size = std::max(size, norm_mu(u.slices[k]));
        }
        report.iterations = iter;
        report.residual_history.push_back(step_norm);
        report.final_mild_residual = mild;
        const auto& h = report.residual_history;
        const std::size_t n = h.size();
        if (n >= 2 && h[n - 2] > 0.0) {
            report.one_step_ratios.push_back(h[n - 1] / h[n - 2]);
        }
        if (n >= 3 && h[n - 3] > floor * scale) {
            const double ratio = h[n - 1] / h[n - 3];
            report.two_step_ratios.push_back(ratio);
            report.contraction_estimate = std::max(report.contraction_estimate, ratio);
        }
        if (step_norm <= options.tol * scale && mild <= options.tol * std::max(1.0, size)) {
            report.converged = true;
            report.message = "converged";
            return {std::move(u), std::move(report)};
        }
        u = std::move(next);
    }
    std::ostringstream msg;
    msg << "no convergence after " << options.max_iter << " iterations (last step "
        << report.residual_history.back() << ", mild residual " << report.final_mild_residual << ")";
    report.message = msg.str();
    return {std::move(u), std::move(report)};
}

std::vector<double> weak_residual(const SpaceTimeFunction& u, const SemilinearProblem& problem,
                                  const std::vector<TestFunction>& test_functions) {
    const Grid& grid = u.grid();
    for (const auto& phi : test_functions) {
        if (!in_test_space(phi, grid.x_max(), 1e-8)) {
            throw std::invalid_argument("weak_residual: test function is not in the test space");
        }
    }
    const auto field = nonlinearity_field(problem, u);
    const auto times = u.mesh.times();
    const std::size_t n = times.size() - 1;
    const double dt = u.mesh.step();
    std::vector<double> out;
    out.reserve(test_functions.size());
    for (const auto& phi : test_functions) {
        const auto phi_g = GridFunction::sample(grid, phi.f);
        const auto lphi = apply_generator(phi, grid);
        const double terminal = inner_mu(problem.terminal, phi_g);
        std::vector<double> integrand(n + 1);
        for (std::size_t m = 0; m <= n; ++m) {
            integrand[m] = inner_mu(u.slices[m], lphi) + inner_mu(field.slices[m], phi_g);
        }
        double tail = 0.0; // ∫_{t_k}^T, accumulated backwards
        double worst = std::abs(inner_mu(u.slices[n], phi_g) - terminal);
        for (std::size_t k = n; k-- > 0;) {
            tail += 0.5 * dt * (integrand[k] + integrand[k + 1]);
            worst = std::max(worst, std::abs(inner_mu(u.slices[k], phi_g) - terminal - tail));
        }
        out.push_back(worst);
    }
    return out;
}

std::vector<double> duhamel_h_bound(const SpaceTimeFunction& l) {
    const auto times = l.mesh.times();
    const std::size_t n = times.size() - 1;
    std::vector<double> size(n + 1);
    for (std::size_t m = 0; m <= n; ++m) {
        size[m] = norm_mu(l.slices[m]);
    }
    std::vector<double> bound(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double s = 0.0;
        for (std::size_t m = k; m < n; ++m) {
            const double a = times[m] - times[k];
            const double b = times[m + 1] - times[k];
            const double weight = (b - a) + 2.0 * (std::sqrt(b) - std::sqrt(a));
            s += weight * 0.5 * (size[m] + size[m + 1]);
        }
        bound[k] = s;
    }
    return bound;
}

} // namespace bessel
