#include "config.hpp"

#include "expr.hpp"

#include "bessel/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef BESSEL_VERSION
#define BESSEL_VERSION "unknown"
#endif

namespace bessel::cli {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

double to_real(std::string_view key, std::string_view value) {
    try {
        return parse_double(value);
    } catch (const std::invalid_argument&) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
    }
}

std::optional<double> to_optional_real(std::string_view key, std::string_view value) {
    if (value == "auto") {
        return std::nullopt;
    }
    return to_real(key, value);
}

std::uint64_t to_count(std::string_view key, std::string_view value) {
    std::uint64_t n = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), n);
    if (value.empty() || res.ec != std::errc() || res.ptr != value.data() + value.size()) {
        throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
    }
    return n;
}

std::string optional_text(const std::optional<double>& v) {
    return v ? format_double(*v) : "auto";
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

double sin_f(double, double, double u, double) {
    return std::sin(u);
}

} // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    key = trim(key);
    value = trim(value);
    if (key == "delta") {
        delta = to_real(key, value);
    } else if (key == "T") {
        T = to_real(key, value);
    } else if (key == "grid.x_max") {
        grid_x_max = to_optional_real(key, value);
    } else if (key == "grid.n") {
        grid_n = to_count(key, value);
    } else if (key == "grid.scheme") {
        try {
            grid_scheme = parse_grid_scheme(std::string(value));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("grid.scheme: ") + e.what());
        }
    } else if (key == "mesh.n_steps") {
        mesh_n_steps = to_count(key, value);
    } else if (key == "solver.tol") {
        solver_tol = to_real(key, value);
    } else if (key == "solver.max_iter") {
        solver_max_iter = to_count(key, value);
    } else if (key == "solver.lambda") {
        solver_lambda = to_optional_real(key, value);
    } else if (key == "mc.n_paths") {
        mc_n_paths = to_count(key, value);
    } else if (key == "mc.seed") {
        mc_seed = to_count(key, value);
    } else if (key == "mc.n_steps") {
        mc_n_steps = to_count(key, value);
    } else if (key == "problem") {
        problem = std::string(value);
    } else if (key == "problem.lipschitz") {
        problem_lipschitz = to_optional_real(key, value);
    } else if (key == "problem.g") {
        problem_g = std::string(value);
    } else if (key == "check.tol") {
        check_tol = to_optional_real(key, value);
    } else if (key == "outputs") {
        outputs = std::string(value);
    } else {
        throw ConfigError("unknown config key '" + std::string(key) + "'");
    }
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig c;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key=value, got '" + std::string(line) +
                              "'");
        }
        c.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string RunConfig::serialize() const {
    std::ostringstream os;
    os << "delta=" << format_double(delta) << '\n'
       << "T=" << format_double(T) << '\n'
       << "grid.x_max=" << optional_text(grid_x_max) << '\n'
       << "grid.n=" << grid_n << '\n'
       << "grid.scheme=" << to_string(grid_scheme) << '\n'
       << "mesh.n_steps=" << mesh_n_steps << '\n'
       << "solver.tol=" << format_double(solver_tol) << '\n'
       << "solver.max_iter=" << solver_max_iter << '\n'
       << "solver.lambda=" << optional_text(solver_lambda) << '\n'
       << "mc.n_paths=" << mc_n_paths << '\n'
       << "mc.seed=" << mc_seed << '\n'
       << "mc.n_steps=" << mc_n_steps << '\n'
       << "problem=" << problem << '\n'
       << "problem.lipschitz=" << optional_text(problem_lipschitz) << '\n'
       << "problem.g=" << problem_g << '\n'
       << "check.tol=" << optional_text(check_tol) << '\n'
       << "outputs=" << outputs << '\n';
    return os.str();
}

nlohmann::json RunConfig::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json("auto"); };
    return {{"delta", delta},
            {"T", T},
            {"grid", {{"x_max", opt(grid_x_max)}, {"x_max_resolved", x_max()}, {"n", grid_n}, {"scheme", to_string(grid_scheme)}}},
            {"mesh", {{"n_steps", mesh_n_steps}}},
            {"solver", {{"tol", solver_tol}, {"max_iter", solver_max_iter}, {"lambda", opt(solver_lambda)}}},
            {"mc", {{"n_paths", mc_n_paths}, {"seed", mc_seed}, {"n_steps", mc_n_steps}}},
            {"problem", {{"spec", problem}, {"lipschitz", opt(problem_lipschitz)}, {"g", problem_g}}},
            {"check", {{"tol", opt(check_tol)}}},
            {"outputs", outputs}};
}

void RunConfig::validate() const {
    require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1), got " + format_double(delta));
    require(T > 0.0 && T <= 100.0, "T must lie in (0, 100]");
    require(!grid_x_max || (*grid_x_max > 0.0 && std::isfinite(*grid_x_max)), "grid.x_max must be positive");
    require(grid_n >= 16 && grid_n <= 8192, "grid.n must lie in [16, 8192]");
    require(mesh_n_steps >= 1 && mesh_n_steps <= 100000, "mesh.n_steps must lie in [1, 100000]");
    require(solver_tol > 0.0 && solver_tol < 1.0, "solver.tol must lie in (0, 1)");
    require(solver_max_iter >= 1 && solver_max_iter <= 100000, "solver.max_iter must lie in [1, 100000]");
    require(!solver_lambda || (*solver_lambda >= 0.0 && std::isfinite(*solver_lambda)),
            "solver.lambda must be non-negative");
    require(mc_n_paths >= 1 && mc_n_paths <= 100000000, "mc.n_paths must lie in [1, 1e8]");
    require(mc_n_steps >= 1 && mc_n_steps <= 100000, "mc.n_steps must lie in [1, 100000]");
    require(!problem_lipschitz || *problem_lipschitz > 0.0, "problem.lipschitz must be positive");
    require(!check_tol || *check_tol > 0.0, "check.tol must be positive");
    require(!outputs.empty(), "outputs must name a directory");
    try {
        const auto p = parse_problem(problem);
        require(p.lipschitz || problem_lipschitz, "problem.lipschitz is required for expression problems");
        (void)parse_terminal(problem_g);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    require(parse_terminal(problem_g).f(0.98 * x_max()) == 0.0, "problem.g must vanish near grid.x_max");
}

double RunConfig::x_max() const {
    return grid_x_max ? *grid_x_max : default_x_max(T, std::sqrt(2.0 * T * std::log(1e12)));
}

Grid RunConfig::make_grid() const {
    return Grid::make(delta, x_max(), grid_n, grid_scheme);
}

TimeMesh RunConfig::make_mesh() const {
    return TimeMesh::uniform(T, mesh_n_steps);
}

TestFunction RunConfig::terminal() const {
    return parse_terminal(problem_g);
}

SemilinearProblem RunConfig::make_problem(const Grid& grid) const {
    auto named = parse_problem(problem);
    const double c = problem_lipschitz ? *problem_lipschitz : named.lipschitz.value_or(1.0);
    return SemilinearProblem{T, delta, GridFunction::sample(grid, terminal().f), std::move(named.f), c};
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    return a.serialize() == b.serialize();
}

TestFunction parse_terminal(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string_view kind = spec.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string_view::npos) {
        std::string_view rest = spec.substr(colon + 1);
        while (true) {
            const auto comma = rest.find(',');
            args.push_back(parse_double(rest.substr(0, comma)));
            if (comma == std::string_view::npos) {
                break;
            }
            rest = rest.substr(comma + 1);
        }
    }
    if (kind == "bump" && args.size() == 1 && args[0] > 0.0) {
        return bump(args[0]);
    }
    if (kind == "shaped" && args.size() == 3 && args[0] > 0.0) {
        return shaped_bump(args[0], args[1], args[2]);
    }
    throw std::invalid_argument("terminal condition must be bump:R or shaped:R,c2,c3 with R > 0, got '" +
                                std::string(spec) + "'");
}

NamedNonlinearity parse_problem(std::string_view spec) {
    if (spec == "zero") {
        return {[](double, double, double, double) { return 0.0; }, 1.0};
    }
    if (spec == "linear") {
        return {[](double, double, double u, double) { return u; }, 1.0};
    }
    if (spec == "sin") {
        return {sin_f, 1.0};
    }
    if (spec == "u_plus_ux") {
        return {[](double, double, double u, double v) { return u + v; }, 1.0};
    }
    if (spec.rfind("expr:", 0) == 0) {
        return {compile_expression(spec.substr(5)), std::nullopt};
    }
    throw std::invalid_argument("problem must be zero, linear, sin, u_plus_ux or expr:<expression>, got '" +
                                std::string(spec) + "'");
}

std::string version_string() {
    return BESSEL_VERSION;
}

} // namespace bessel::cli
