#include "bessel/io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace bessel {

std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    if (res.ec != std::errc()) {
        throw std::runtime_error("format_double: buffer too small");
    }
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) {
        text.remove_prefix(1);
    }
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    // from_chars rejects a leading '+', which people do write in configs
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double x = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    }
    return x;
}

namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) {
            return out;
        }
        start = pos + 1;
    }
}

} // namespace

void write_csv(std::ostream& os, const GridFunction& f) {
    const Grid& g = f.grid();
    os << "# delta=" << format_double(g.delta()) << " scheme=" << to_string(g.scheme()) << '\n';
    os << "x,mu_weight,value\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << format_double(g.node(i)) << ',' << format_double(g.mu_weight(i)) << ',' << format_double(f[i]) << '\n';
    }
}

GridFunction read_grid_function_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("# delta=", 0) != 0) {
        throw std::invalid_argument("grid function CSV: missing '# delta=' header");
    }
    const auto fields = split(std::string_view(line).substr(2), ' ');
    double delta = 0.0;
    GridScheme scheme = GridScheme::graded;
    for (auto field : fields) {
        if (field.rfind("delta=", 0) == 0) {
            delta = parse_double(field.substr(6));
        } else if (field.rfind("scheme=", 0) == 0) {
            scheme = parse_grid_scheme(std::string(field.substr(7)));
        }
    }
    if (!std::getline(is, line) || line.rfind("x,mu_weight,value", 0) != 0) {
        throw std::invalid_argument("grid function CSV: missing column header");
    }
    std::vector<double> nodes, values;
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        const auto cols = split(line, ',');
        if (cols.size() != 3) {
            throw std::invalid_argument("grid function CSV: expected 3 columns in '" + line + "'");
        }
        nodes.push_back(parse_double(cols[0]));
        values.push_back(parse_double(cols[2]));
    }
    return GridFunction(Grid::from_nodes(delta, std::move(nodes), scheme), std::move(values));
}

nlohmann::json to_json(const GridFunction& f) {
    const Grid& g = f.grid();
    return {{"delta", g.delta()},
            {"scheme", to_string(g.scheme())},
            {"x", std::vector<double>(g.nodes().begin(), g.nodes().end())},
            {"mu_weight", std::vector<double>(g.mu_weights().begin(), g.mu_weights().end())},
            {"value", std::vector<double>(f.values().begin(), f.values().end())}};
}

GridFunction grid_function_from_json(const nlohmann::json& j) {
    try {
        const Grid g = Grid::from_nodes(j.at("delta").get<double>(), j.at("x").get<std::vector<double>>(),
                                        parse_grid_scheme(j.at("scheme").get<std::string>()));
        return GridFunction(g, j.at("value").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("grid function JSON: ") + e.what());
    }
}

void write_csv(std::ostream& os, const KernelMatrix& k) {
    const Grid& g = k.grid();
    os << "# t=" << format_double(k.t()) << " delta=" << format_double(k.params().delta)
       << " entry=p(x,y)*y^(1-delta)\n";
    os << "x";
    for (std::size_t j = 0; j < g.size(); ++j) {
        os << ',' << format_double(g.node(j));
    }
    os << '\n';
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << format_double(g.node(i));
        for (std::size_t j = 0; j < g.size(); ++j) {
            os << ',' << format_double(k.entry(i, j));
        }
        os << '\n';
    }
}

nlohmann::json to_json(const KernelDiagnostics& d) {
    return {{"delta", d.delta},
            {"t", d.t},
            {"row_mass_min", d.row_mass_min},
            {"row_mass_max", d.row_mass_max},
            {"row_mass_min_interior", d.row_mass_min_interior},
            {"row_mass_max_interior", d.row_mass_max_interior},
            {"symmetry_defect_max", d.symmetry_defect_max}};
}

void write_csv(std::ostream& os, const SpaceTimeFunction& u) {
    const Grid& g = u.grid();
    os << "t,x,u,ux\n";
    for (std::size_t k = 0; k < u.slices.size(); ++k) {
        const auto ux = derivative(u.slices[k]);
        const std::string t = format_double(u.mesh.time(k));
        for (std::size_t i = 0; i < g.size(); ++i) {
            os << t << ',' << format_double(g.node(i)) << ',' << format_double(u.slices[k][i]) << ','
               << format_double(ux[i]) << '\n';
        }
    }
}

nlohmann::json to_json(const SpaceTimeFunction& u) {
    auto values = nlohmann::json::array();
    for (const auto& s : u.slices) {
        values.push_back(std::vector<double>(s.values().begin(), s.values().end()));
    }
    const Grid& g = u.grid();
    return {{"t", u.mesh.times()}, {"x", std::vector<double>(g.nodes().begin(), g.nodes().end())}, {"u", values}};
}

nlohmann::json to_json(const SolverReport& r) {
    return {{"iterations", r.iterations},
            {"converged", r.converged},
            {"lambda", r.lambda},
            {"contraction_estimate", r.contraction_estimate},
            {"final_mild_residual", r.final_mild_residual},
            {"residual_history", r.residual_history},
            {"one_step_ratios", r.one_step_ratios},
            {"two_step_ratios", r.two_step_ratios},
            {"message", r.message}};
}

void write_csv(std::ostream& os, const PathEnsemble& e) {
    os << "# delta=" << format_double(e.delta) << " x0=" << format_double(e.x0) << " seed=" << e.seed << '\n';
    os << "path";
    for (double t : e.times) {
        os << ",t=" << format_double(t);
    }
    os << '\n';
    for (std::size_t p = 0; p < e.n_paths(); ++p) {
        os << p;
        for (std::size_t k = 0; k < e.n_times(); ++k) {
            os << ',' << format_double(e.at(p, k));
        }
        os << '\n';
    }
}

nlohmann::json to_json(const MCEstimate& e) {
    return {{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}};
}

} // namespace bessel
