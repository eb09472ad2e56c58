#pragma once

#include "bessel/mspace.hpp"
#include "bessel/semigroup.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace bessel {

/// Uniform mesh 0 = t_0 < ... < t_n = T.
class TimeMesh {
public:
    static TimeMesh uniform(double horizon, std::size_t n_steps);

    std::span<const double> times() const noexcept { return times_; }
    double time(std::size_t k) const noexcept { return times_[k]; }
    std::size_t n_steps() const noexcept { return times_.size() - 1; }
    double horizon() const noexcept { return times_.back(); }
    double step() const noexcept { return step_; }
    /// t_{k+j} - t_k, computed as j * step so that equal lags are bit-identical.
    double lag(std::size_t j) const noexcept;

private:
    std::vector<double> times_;
    double step_ = 0.0;
};

/// One GridFunction per mesh time, all on the same Grid.
struct SpaceTimeFunction {
    TimeMesh mesh;
    std::vector<GridFunction> slices;

    static SpaceTimeFunction zeros(const TimeMesh& mesh, const Grid& grid);
    const Grid& grid() const { return slices.front().grid(); }
};

SpaceTimeFunction operator-(const SpaceTimeFunction& a, const SpaceTimeFunction& b);

/// f(t, x, u, v) with v standing for ∂_x u.
using Nonlinearity = std::function<double(double, double, double, double)>;

/// Backward problem ∂_t u + L u + f(t, x, u, ∂_x u) = 0 on [0, T), u(T) = g.
struct SemilinearProblem {
    double horizon = 1.0;
    double delta = 0.5;
    GridFunction terminal;
    Nonlinearity f;
    /// Declared Lipschitz constant of f in (u, v).
    double lipschitz_c = 1.0;

    double f0(double t, double x) const { return f(t, x, 0.0, 0.0); }
    KernelParams kernel_params() const { return KernelParams::from_delta(delta); }
    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Largest |f(t,x,y1,z1) - f(t,x,y2,z2)| / (|y1-y2| + |z1-z2|) over random
/// quadruples; compare against lipschitz_c.
double lipschitz_spot_check(const SemilinearProblem& problem, std::size_t samples, std::uint64_t seed);

/// C_T = sqrt(2) C (sqrt(T) + 1).
double contraction_constant(const SemilinearProblem& problem);
/// C_T^2 T pi: A^2 contracts in ||.||_{B,lambda} for lambda above this.
double lambda_threshold(const SemilinearProblem& problem);

/// Trapezoid in time of e^{lambda t} ||u(t)||_H.
double b_lambda_norm(const SpaceTimeFunction& u, double lambda);

/// Kernel matrices for every lag of a uniform mesh on one grid.
class DuhamelPropagator {
public:
    DuhamelPropagator(KernelParams params, TimeMesh mesh, Grid grid);

    const TimeMesh& mesh() const noexcept { return mesh_; }
    const Grid& grid() const noexcept { return grid_; }
    const KernelParams& params() const noexcept { return params_; }

    /// P_{lag(j)} f; j = 0 returns f.
    GridFunction apply(std::size_t lag_index, const GridFunction& f) const;

    /// v(t_k) = P_{T - t_k} g + ∫_{t_k}^T P_{s - t_k} l(s) ds.
    ///
    /// Time quadrature: the cell [t_k, t_{k+1}] uses dt P_{dt/2}[(l_k + l_{k+1})/2],
    /// the remaining cells the trapezoid rule. The integrand is never evaluated
    /// at s = t_k, where P_0 = id would feed ∂_x of the source back unsmoothed.
    SpaceTimeFunction linear_solution(const GridFunction& g, const SpaceTimeFunction& l) const;

private:
    KernelParams params_;
    TimeMesh mesh_;
    Grid grid_;
    KernelCache cache_;
    std::vector<std::shared_ptr<const KernelMatrix>> lags_;
    std::shared_ptr<const KernelMatrix> half_step_;
};

/// Convenience wrapper building a propagator on g's grid.
SpaceTimeFunction linear_solution(const GridFunction& g, const SpaceTimeFunction& l, const KernelParams& params,
                                  const TimeMesh& mesh);

/// The field (s, x) -> f(s, x, u(s, x), ∂_x u(s, x)) with ∂_x u from derivative().
/// Throws std::runtime_error naming (s, x) when f returns a non-finite value.
SpaceTimeFunction nonlinearity_field(const SemilinearProblem& problem, const SpaceTimeFunction& u);

/// Au(t) = P_{T-t} g + ∫_t^T P_{s-t}[f(s, ., u(s), ∂_x u(s))] ds.
SpaceTimeFunction apply_A(const SemilinearProblem& problem, const SpaceTimeFunction& u,
                          const DuhamelPropagator& propagator);
SpaceTimeFunction apply_A(const SemilinearProblem& problem, const SpaceTimeFunction& u);

/// ||u(t_k) - Au(t_k)||_{L2(mu)} for every mesh time.
std::vector<double> mild_residual(const SemilinearProblem& problem, const SpaceTimeFunction& u,
                                  const DuhamelPropagator& propagator);

struct SolverReport {
    std::size_t iterations = 0;
    /// ||u_{k+1} - u_k||_{B,lambda} per Picard step.
    std::vector<double> residual_history;
    std::vector<double> one_step_ratios;
    std::vector<double> two_step_ratios;
    double lambda = 0.0;
    /// Largest two-step ratio measured above round-off (empirical A^2 factor).
    double contraction_estimate = 0.0;
    /// max_t ||u(t) - Au(t)||_{L2(mu)} of the returned iterate.
    double final_mild_residual = 0.0;
    bool converged = false;
    std::string message;
};

struct SolveOptions {
    double tol = 1e-6;
    std::size_t max_iter = 50;
    /// Defaults to 2 * lambda_threshold(problem).
    std::optional<double> lambda;
    /// Defaults to u_0(t) = P_{T-t} g.
    std::optional<SpaceTimeFunction> initial;
};

struct SolveResult {
    SpaceTimeFunction solution;
    SolverReport report;
};

/// Picard iteration u_{k+1} = A u_k. Declares convergence when
/// ||u_{k+1} - u_k||_{B,lambda} <= tol * max(1, ||u_{k+1}||_{B,lambda}) and the
/// mild residual max_t ||u - Au||_mu <= tol * max(1, max_t ||u||_mu). The
/// returned iterate is the last one whose mild residual was measured. After
/// max_iter steps without convergence the report has converged = false.
SolveResult solve(const SemilinearProblem& problem, const TimeMesh& mesh, const Grid& grid,
                  const SolveOptions& options = {});
SolveResult solve(const SemilinearProblem& problem, const DuhamelPropagator& propagator,
                  const SolveOptions& options = {});

/// For each test function phi, max over mesh times t of
/// |<u(t),phi> - <g,phi> - ∫_t^T <u(s), L phi> ds - ∫_t^T <f(s,.,u,∂_x u), phi> ds|
/// (trapezoid in time). Throws std::invalid_argument when phi fails in_test_space.
std::vector<double> weak_residual(const SpaceTimeFunction& u, const SemilinearProblem& problem,
                                  const std::vector<TestFunction>& test_functions);

/// Right side of the smoothing estimate for the Duhamel term at each mesh time:
/// ∫_t^T (1 + 1/sqrt(s - t)) ||l(s)||_mu ds, with ||l|| interpolated linearly
/// between mesh points and the singular weight integrated exactly per cell, so
/// s = t is never sampled.
std::vector<double> duhamel_h_bound(const SpaceTimeFunction& l);

} // namespace bessel
