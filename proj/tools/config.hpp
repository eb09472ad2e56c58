#pragma once

#include "bessel/mspace.hpp"
#include "bessel/solver.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

namespace bessel::cli {

/// Bad configuration or command line; maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Settings for one run. Text form is one key=value per line, '#' comments.
/// Optional values serialize as "auto".
struct RunConfig {
    double delta = 0.5;
    double T = 1.0;
    std::optional<double> grid_x_max;
    std::size_t grid_n = 512;
    GridScheme grid_scheme = GridScheme::graded;
    std::size_t mesh_n_steps = 64;
    double solver_tol = 1e-6;
    std::size_t solver_max_iter = 50;
    std::optional<double> solver_lambda;
    std::size_t mc_n_paths = 100000;
    std::uint64_t mc_seed = 1;
    std::size_t mc_n_steps = 50;
    std::string problem = "sin";
    std::optional<double> problem_lipschitz;
    std::string problem_g = "bump:2";
    std::optional<double> check_tol;
    std::string outputs = "out";

    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::string& path);

    /// Sets one key from text; throws ConfigError on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    std::string serialize() const;
    nlohmann::json to_json() const;
    /// Range checks across all fields; throws ConfigError.
    void validate() const;

    /// x_max, or the truncation default 2 sqrt(2 T ln 1e12) when unset.
    double x_max() const;
    Grid make_grid() const;
    TimeMesh make_mesh() const;
    TestFunction terminal() const;
    SemilinearProblem make_problem(const Grid& grid) const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

/// Parses "bump:R" or "shaped:R,c2,c3" into a test function.
TestFunction parse_terminal(std::string_view spec);

/// Nonlinearity and its default Lipschitz constant for a preset name or "expr:...".
struct NamedNonlinearity {
    Nonlinearity f;
    std::optional<double> lipschitz;
};
NamedNonlinearity parse_problem(std::string_view spec);

std::string version_string();

} // namespace bessel::cli
