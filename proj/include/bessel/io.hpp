#pragma once

#include "bessel/montecarlo.hpp"
#include "bessel/mspace.hpp"
#include "bessel/semigroup.hpp"
#include "bessel/solver.hpp"

#include <iosfwd>
#include <string>
#include <string_view>

#include <json.hpp>

namespace bessel {

/// Shortest decimal text that reads back to the same double. Locale independent.
std::string format_double(double x);
/// Strict parse of a whole field; throws std::invalid_argument.
double parse_double(std::string_view text);

// GridFunction as CSV columns x,mu_weight,value with a "# delta=... scheme=..." header line.
void write_csv(std::ostream& os, const GridFunction& f);
GridFunction read_grid_function_csv(std::istream& is);

nlohmann::json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const nlohmann::json& j);

/// Kernel matrix in the mu-symmetric form p(x,y) y^{1-delta}, one row per x node.
void write_csv(std::ostream& os, const KernelMatrix& k);
nlohmann::json to_json(const KernelDiagnostics& d);

/// Long format t,x,u,ux.
void write_csv(std::ostream& os, const SpaceTimeFunction& u);
nlohmann::json to_json(const SpaceTimeFunction& u);

nlohmann::json to_json(const SolverReport& r);

/// One row per path: path,x(t_0),x(t_1),... with a header of mesh times.
void write_csv(std::ostream& os, const PathEnsemble& e);
nlohmann::json to_json(const MCEstimate& e);

} // namespace bessel
