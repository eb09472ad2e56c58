#include "commands.hpp"

#include "bessel/io.hpp"
#include "bessel/montecarlo.hpp"
#include "bessel/parallel.hpp"
#include "bessel/semigroup.hpp"
#include "bessel/solver.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <random>

namespace bessel::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Suite {
    std::string name;
    std::string status; // passed, failed, skipped
    double measured = 0.0;
    double threshold = 0.0;
    json details = json::object();
};

json suite_json(const Suite& s) {
    return {{"name", s.name}, {"status", s.status}, {"measured", s.measured}, {"threshold", s.threshold},
            {"details", s.details}};
}

Suite judge(std::string name, double measured, double threshold, json details = json::object()) {
    return {std::move(name), measured <= threshold ? "passed" : "failed", measured, threshold, std::move(details)};
}

void log_suite(std::ostream& log, const Suite& s) {
    if (s.status == "skipped") {
        log << "SKIPPED  " << s.name << "  underpowered: n_paths=" << s.details.at("n_paths").get<std::size_t>()
            << " < " << s.details.at("n_paths_needed").get<std::size_t>() << '\n';
        return;
    }
    log << (s.status == "passed" ? "PASS" : "FAIL") << "  " << s.name << "  measured=" << format_double(s.measured)
        << " threshold=" << format_double(s.threshold) << '\n';
}

fs::path prepare_outputs(const RunConfig& config) {
    const fs::path dir(config.outputs);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw ConfigError("cannot create output directory '" + config.outputs + "': " + ec.message());
    }
    return dir;
}

json report_header(const std::string& command, const RunConfig& config) {
    return {{"command", command}, {"version", version_string()}, {"threads", thread_count()},
            {"config", config.to_json()}, {"config_text", config.serialize()}};
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    out.imbue(std::locale::classic());
    body(out);
    if (!out) {
        throw ConfigError("error writing '" + path.string() + "'");
    }
}

void write_json(const fs::path& path, const json& j) {
    write_file(path, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
}

int finish(const std::string& command, const RunConfig& config, const std::vector<Suite>& suites, json extra,
           const fs::path& file, std::ostream& log) {
    json report = report_header(command, config);
    report["suites"] = json::array();
    bool failed = false;
    for (const auto& s : suites) {
        report["suites"].push_back(suite_json(s));
        failed = failed || s.status == "failed";
    }
    for (auto& [k, v] : extra.items()) {
        report[k] = v;
    }
    report["passed"] = !failed;
    const int code = failed ? kExitCheckFailed : kExitPass;
    report["exit_code"] = code;
    write_json(file, report);
    log << command << ": " << (failed ? "FAILED" : "passed") << " (report " << file.string() << ")\n";
    return code;
}

GridFunction random_smooth(const Grid& g, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> radius(1.0, 3.0);
    std::uniform_real_distribution<double> coef(-0.5, 0.5);
    return GridFunction::sample(g, shaped_bump(radius(rng), coef(rng), coef(rng), 1.0 + coef(rng)).f);
}

std::vector<TestFunction> standard_test_functions() {
    return {bump(2.0), shaped_bump(2.5, 0.5, 0.0), shaped_bump(3.0, -0.2, 0.1)};
}

// --- kernel-check ----------------------------------------------------------

Suite normalization_suite(const KernelParams& p, const Grid& g, double tol) {
    double worst = 0.0;
    json per_t = json::array();
    for (double t : {0.1, 1.0}) {
        const auto d = build_kernel_matrix(p, t, g).diagnostics();
        const double defect = std::max(std::abs(d.row_mass_min_interior - 1.0), std::abs(d.row_mass_max_interior - 1.0));
        worst = std::max(worst, defect);
        per_t.push_back({{"t", t}, {"defect", defect}});
    }
    return judge("normalization", worst, tol, {{"nodes", "x <= x_max/2"}, {"per_t", per_t}});
}

Suite symmetry_suite(const KernelParams& p, double x_max, double tol) {
    double worst = 0.0;
    const double top = x_max / 2;
    for (double t : {0.1, 1.0}) {
        for (int i = 0; i < 100; ++i) {
            const double x = top * (i + 0.5) / 100.0;
            for (int j = 0; j < 100; ++j) {
                const double y = top * (j + 0.5) / 100.0;
                const double a = kernel_density(p, t, x, y) * std::pow(y, 1 - p.delta);
                const double b = kernel_density(p, t, y, x) * std::pow(x, 1 - p.delta);
                if (a > 0.0 || b > 0.0) {
                    worst = std::max(worst, std::abs(a - b) / std::max(a, b));
                }
            }
        }
    }
    return judge("symmetry", worst, tol, {{"sample", "100x100"}, {"t", {0.1, 1.0}}});
}

Suite invariance_suite(const KernelParams& p, const Grid& g, double tol) {
    double worst = 0.0;
    for (const auto& f : standard_test_functions()) {
        const auto fg = GridFunction::sample(g, f.f);
        for (double t : {0.1, 0.5}) {
            worst = std::max(worst, invariance_defect(p, t, fg));
        }
    }
    return judge("invariance", worst, tol, {{"t", {0.1, 0.5}}});
}

Suite chapman_kolmogorov_suite(const KernelParams& p, const Grid& g, double tol) {
    double worst = 0.0;
    for (const auto& f : standard_test_functions()) {
        const auto fg = GridFunction::sample(g, f.f);
        const auto direct = apply(p, 1.0, fg);
        const auto composed = apply(p, 0.3, apply(p, 0.7, fg));
        worst = std::max(worst, norm_mu(direct - composed) / norm_mu(fg));
    }
    return judge("chapman_kolmogorov", worst, tol, {{"s", 0.3}, {"t", 0.7}});
}

Suite schauder_suite(const KernelParams& p, const Grid& g, std::optional<double> override_tol) {
    const double contraction_tol = override_tol.value_or(1e-6);
    const double derivative_tol = override_tol.value_or(1e-3);
    std::mt19937_64 rng(5);
    double worst_contraction = 0.0, worst_derivative = 0.0;
    for (int k = 0; k < 50; ++k) {
        const auto f = random_smooth(g, rng);
        const double nf = norm_mu(f);
        for (double t : {0.05, 0.2, 1.0}) {
            worst_contraction = std::max(worst_contraction, norm_mu(apply(p, t, f)) / nf);
            worst_derivative = std::max(worst_derivative, norm_mu(apply_dx(p, t, f)) * std::sqrt(t) / nf);
        }
    }
    // measured is the larger overshoot past its bound; <= 0 passes
    const double overshoot = std::max(worst_contraction - (1.0 + contraction_tol), worst_derivative - (1.0 + derivative_tol));
    Suite s = judge("schauder", overshoot, 0.0,
                    {{"functions", 50},
                     {"max_contraction_ratio", worst_contraction},
                     {"contraction_tol", contraction_tol},
                     {"max_sqrt_t_derivative_ratio", worst_derivative},
                     {"derivative_tol", derivative_tol}});
    return s;
}

// --- mc-validate -----------------------------------------------------------

Suite skipped(std::string name, std::size_t needed, std::size_t have) {
    return {std::move(name), "skipped", 0.0, 0.0,
            {{"reason", "underpowered"}, {"n_paths", have}, {"n_paths_needed", needed}}};
}

std::vector<double> uniform_times(double horizon, std::size_t steps) {
    std::vector<double> ts(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) {
        ts[k] = horizon * static_cast<double>(k) / static_cast<double>(steps);
    }
    ts.back() = horizon;
    return ts;
}

// 4-sigma test: measured is |mean - expected| / (4 se + slack)
Suite z_suite(std::string name, double diff, double se, double slack, json details) {
    const double allowance = 4 * se + slack;
    details["difference"] = diff;
    details["std_error"] = se;
    return judge(std::move(name), std::abs(diff), allowance, std::move(details));
}

} // namespace

int cmd_kernel_check(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto dir = prepare_outputs(config);
    const Grid g = config.make_grid();
    const auto p = KernelParams::from_delta(config.delta);
    const auto tol = [&](double preset) { return config.check_tol.value_or(preset); };

    std::vector<Suite> suites{normalization_suite(p, g, tol(1e-6)), symmetry_suite(p, g.x_max(), tol(1e-10)),
                              invariance_suite(p, g, tol(1e-4)), chapman_kolmogorov_suite(p, g, tol(1e-5)),
                              schauder_suite(p, g, config.check_tol)};
    for (const auto& s : suites) {
        log_suite(log, s);
    }
    const auto k = build_kernel_matrix(p, 1.0, g);
    write_file(dir / "kernel_t1.csv", [&](std::ostream& os) { write_csv(os, k); });
    return finish("kernel-check", config, suites, {{"diagnostics_t1", to_json(k.diagnostics())}},
                  dir / "kernel_check.json", log);
}

int cmd_solve(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto dir = prepare_outputs(config);
    const Grid g = config.make_grid();
    const TimeMesh mesh = config.make_mesh();
    const auto problem = config.make_problem(g);

    const double measured_c = lipschitz_spot_check(problem, 4000, config.mc_seed);
    if (measured_c > problem.lipschitz_c * (1 + 1e-9)) {
        throw ConfigError("problem.lipschitz = " + format_double(problem.lipschitz_c) +
                          " is violated: spot check found slope " + format_double(measured_c));
    }

    const DuhamelPropagator propagator(problem.kernel_params(), mesh, g);
    SolveOptions opts;
    opts.tol = config.solver_tol;
    opts.max_iter = config.solver_max_iter;
    opts.lambda = config.solver_lambda;
    const auto result = solve(problem, propagator, opts);
    const auto& r = result.report;

    std::vector<Suite> suites;
    suites.push_back({"converged", r.converged ? "passed" : "failed", static_cast<double>(r.iterations),
                      static_cast<double>(config.solver_max_iter), {{"message", r.message}}});
    double scale = 1.0;
    for (const auto& s : result.solution.slices) {
        scale = std::max(scale, norm_mu(s));
    }
    suites.push_back(judge("mild_residual", r.final_mild_residual, config.solver_tol * scale,
                           {{"relative_to", "tol * max(1, max_t ||u(t)||_mu)"}}));
    if (config.problem == "linear") {
        auto oracle = propagator.apply(mesh.n_steps(), problem.terminal);
        oracle *= std::exp(config.T);
        const double err = norm_mu(result.solution.slices[0] - oracle) / norm_mu(oracle);
        suites.push_back(judge("duhamel_oracle", err, 1e-3, {{"oracle", "u(0) = e^T P_T g"}}));
    }
    const auto weak = weak_residual(result.solution, problem, standard_test_functions());

    for (const auto& s : suites) {
        log_suite(log, s);
    }
    write_file(dir / "solution.csv", [&](std::ostream& os) { write_csv(os, result.solution); });
    write_json(dir / "solution.json", to_json(result.solution));
    json report_json = to_json(r);
    write_json(dir / "solver_report.json", report_json);
    return finish("solve", config, suites,
                  {{"solver_report", report_json},
                   {"lipschitz_spot_check", measured_c},
                   {"weak_residual", weak},
                   {"lambda_threshold", lambda_threshold(problem)}},
                  dir / "solve.json", log);
}

int cmd_mc_validate(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto dir = prepare_outputs(config);
    const std::size_t n = config.mc_n_paths;
    const double T = config.T;
    const double delta = config.delta;
    // thresholds on n below which a check could not tell right from wrong
    constexpr std::size_t kMinClt = 1000;
    constexpr std::size_t kMinKs = 26569; // 1.63 / sqrt(n) <= 0.01, the 99% KS quantile
    constexpr std::size_t kMinControl = 10000;

    std::vector<Suite> suites;
    json estimates = json::object();
    const Grid g = config.make_grid();
    const auto params = KernelParams::from_delta(delta);
    const auto terminal = config.terminal();
    const auto g_grid = GridFunction::sample(g, terminal.f);

    for (double x0 : {0.0, 1.0}) {
        const std::string tag = "x0=" + format_double(x0);
        const auto e = sample_exact(delta, x0, {0.0, T}, n, config.mc_seed + static_cast<std::uint64_t>(x0));
        if (n >= kMinKs) {
            suites.push_back(judge("law_ks " + tag, ks_against_kernel(e, T), 0.01));
        } else {
            suites.push_back(skipped("law_ks " + tag, kMinKs, n));
        }
        if (n >= kMinClt) {
            const auto m = feynman_kac(e, [](double x) { return x * x; }, T);
            suites.push_back(z_suite("mean_square " + tag, m.mean - (x0 * x0 + delta * T), m.std_error, 0.0,
                                     {{"expected", x0 * x0 + delta * T}}));
            const auto fk = feynman_kac(e, terminal.f, T);
            const double semigroup = apply_at(params, T, g_grid, x0);
            suites.push_back(z_suite("feynman_kac " + tag, fk.mean - semigroup, fk.std_error, 1e-4,
                                     {{"semigroup", semigroup}, {"quadrature_slack", 1e-4}}));
            estimates["feynman_kac " + tag] = to_json(fk);
        } else {
            suites.push_back(skipped("mean_square " + tag, kMinClt, n));
            suites.push_back(skipped("feynman_kac " + tag, kMinClt, n));
        }
    }

    const auto paths = sample_exact(delta, 1.0, uniform_times(T, config.mc_n_steps), n, config.mc_seed + 7);
    const auto no_drift = [](const TestFunction& h, double, double x) { return 0.5 * h.d2f(x); };
    const auto fns = standard_test_functions();
    const char* names[] = {"bump(2)", "shaped(2.5,0.5,0)", "shaped(3,-0.2,0.1)"};
    for (std::size_t i = 0; i < fns.size(); ++i) {
        const std::string tag = std::string(" f=") + names[i];
        if (n >= kMinClt) {
            const auto m = martingale_defect(paths, fns[i], T);
            suites.push_back(z_suite("martingale" + tag, m.mean, m.std_error, 0.0, json::object()));
            estimates["martingale" + tag] = to_json(m);
        } else {
            suites.push_back(skipped("martingale" + tag, kMinClt, n));
        }
        if (n >= kMinControl) {
            // the broken generator must be rejected by the same 4-sigma test
            const auto bad = martingale_defect(paths, fns[i], T, no_drift);
            const bool rejected = std::abs(bad.mean) > 4 * bad.std_error;
            suites.push_back({"negative_control" + tag, rejected ? "passed" : "failed",
                              std::abs(bad.mean) / bad.std_error, 4.0,
                              {{"expectation", "drift-dropped generator fails: |mean| > 4 std_error"},
                               {"estimate", to_json(bad)}}});
        } else {
            suites.push_back(skipped("negative_control" + tag, kMinControl, n));
        }
    }
    for (const auto& s : suites) {
        log_suite(log, s);
    }
    return finish("mc-validate", config, suites, {{"estimates", estimates}}, dir / "mc_validate.json", log);
}

int cmd_properties(const RunConfig& config, std::ostream& log) {
    config.validate();
    const auto dir = prepare_outputs(config);
    int worst = kExitPass;
    json summary = report_header("properties", config);
    for (const auto& [name, fn] : std::vector<std::pair<std::string, int (*)(const RunConfig&, std::ostream&)>>{
             {"kernel-check", cmd_kernel_check}, {"solve", cmd_solve}, {"mc-validate", cmd_mc_validate}}) {
        const int code = fn(config, log);
        summary["commands"][name] = code;
        worst = std::max(worst, code);
    }
    summary["passed"] = worst == kExitPass;
    summary["exit_code"] = worst;
    write_json(dir / "properties.json", summary);
    return worst;
}

} // namespace bessel::cli
