#pragma once

// Run configuration from INI-style files:
//
//   [problem]     l, potential (expression) or potential_file (one value per
//                 line at uniform nodes; relative to the config file)
//   [numerics]    grid_n, modes, shoot_tol, cfl, horizon, snapshots, seed, export_modes
//   [gauge]       e, e1, e2 as "c0_re c0_im cl_re cl_im" in the (phi0, phil) basis
//   [controls]    f0, fl (expressions in t)
//   [tolerances]  any field of Tolerances
//
// Missing keys keep their defaults.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "verification.hpp"
#include "wave_model.hpp"

namespace wavemodel {

struct RunConfig {
    double l = 1.0;
    std::string potential = "const(0)";
    std::string potential_file;
    int grid_n = 2000;
    int modes = 300;
    double shoot_tol = 1e-10;
    double cfl = 0.5;
    double horizon = 0.0;  // 0 means l
    int snapshots = 20;
    int export_modes = 10;
    std::uint64_t seed = 1;
    GaugeSpec gauge;
    std::string f0 = "bump(0.1,0.1,1)";
    std::string fl = "const(0)";
    Tolerances tol;
    std::string out_dir = ".";
    std::string format = "csv";

    double effective_horizon() const { return horizon > 0.0 ? horizon : l; }

    /// Potential expression, or cubic interpolation of the sampled file.
    Expr potential_expr() const
    {
        if (potential_file.empty()) return parse_expr(potential);
        std::ifstream in(potential_file);
        if (!in) throw ConfigError("cannot open potential file " + potential_file);
        std::vector<double> v;
        std::string line;
        while (std::getline(in, line)) {
            const auto pos = line.find_first_not_of(" \t\r");
            if (pos == std::string::npos || line[pos] == '#') continue;
            try {
                v.push_back(std::stod(line.substr(pos)));
            } catch (const std::exception&) {
                throw ConfigError("potential file " + potential_file + ": not a number: " + line);
            }
        }
        return Expr::sampled(std::move(v), l);
    }

    ControlSignal control() const { return {parse_expr(f0), parse_expr(fl)}; }

    VerifyOptions verify_options() const
    {
        VerifyOptions o;
        o.l = l;
        o.grid_n = grid_n;
        o.modes = modes;
        o.cfl = cfl;
        o.seed = seed;
        o.potential = potential_expr();
        o.gauge = gauge;
        o.tol = tol;
        return o;
    }

    void validate() const
    {
        auto positive = [](const char* name, double v) {
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
        };
        positive("l", l);
        positive("grid_n", grid_n);
        positive("modes", modes);
        positive("shoot_tol", shoot_tol);
        positive("cfl", cfl);
        positive("snapshots", snapshots);
        if (horizon < 0.0) throw ConfigError("horizon must be positive");
        if (export_modes < 0) throw ConfigError("export_modes must be non-negative");
        if (grid_n % 2 != 0 || grid_n < 16) throw ConfigError("grid_n must be an even number >= 16");
        if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
        Tolerances t = tol;
        t.for_each([](const char* name, double& v) {
            if (!(v >= 100.0 * std::numeric_limits<double>::epsilon()) || !std::isfinite(v))
                throw ConfigError(std::string("tolerance ") + name + " must be at least 100 machine epsilons");
        });
        potential_expr();
        control();
    }
};

namespace detail {

inline KernelVector parse_kernel_vector(const std::string& key, const std::string& text)
{
    std::istringstream in(text);
    std::vector<double> v;
    double x;
    while (in >> x) v.push_back(x);
    if (!in.eof()) throw ConfigError("gauge." + key + ": expected numbers, got '" + text + "'");
    if (v.size() == 2) return {v[0], v[1]};
    if (v.size() == 4) return {cplx(v[0], v[1]), cplx(v[2], v[3])};
    throw ConfigError("gauge." + key + ": expected 2 (real) or 4 (complex) coefficients");
}

template <class T>
T get_value(const boost::property_tree::ptree& pt, const std::string& path, T fallback)
{
    const auto node = pt.get_optional<std::string>(path);
    if (!node) return fallback;
    std::istringstream in(*node);
    T v{};
    in >> v;
    if (!in.fail() && !in.eof()) in >> std::ws;
    if (in.fail() || !in.eof()) throw ConfigError(path + ": cannot read '" + *node + "'");
    return v;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    static const std::map<std::string, std::set<std::string>> known{
        {"problem", {"l", "potential", "potential_file"}},
        {"numerics", {"grid_n", "modes", "shoot_tol", "cfl", "horizon", "snapshots", "seed", "export_modes"}},
        {"gauge", {"e", "e1", "e2"}},
        {"controls", {"f0", "fl"}},
        {"tolerances", {}}};
    std::set<std::string> tol_keys;
    Tolerances probe;
    probe.for_each([&](const char* name, double&) { tol_keys.insert(name); });
    for (const auto& [section, body] : tree) {
        const auto it = known.find(section);
        if (it == known.end()) throw ConfigError("config: unknown section [" + section + "]");
        for (const auto& [key, value] : body) {
            const auto& allowed = section == "tolerances" ? tol_keys : it->second;
            if (!allowed.count(key)) throw ConfigError("config: unknown key " + section + "." + key);
        }
    }

    RunConfig c;
    using detail::get_value;
    c.l = get_value(tree, "problem.l", c.l);
    c.potential = tree.get("problem.potential", c.potential);
    c.potential_file = tree.get("problem.potential_file", c.potential_file);
    if (tree.get_optional<std::string>("problem.potential") && !c.potential_file.empty())
        throw ConfigError("config: give either problem.potential or problem.potential_file, not both");
    c.grid_n = get_value(tree, "numerics.grid_n", c.grid_n);
    c.modes = get_value(tree, "numerics.modes", c.modes);
    c.shoot_tol = get_value(tree, "numerics.shoot_tol", c.shoot_tol);
    c.cfl = get_value(tree, "numerics.cfl", c.cfl);
    c.horizon = get_value(tree, "numerics.horizon", c.horizon);
    c.snapshots = get_value(tree, "numerics.snapshots", c.snapshots);
    c.export_modes = get_value(tree, "numerics.export_modes", c.export_modes);
    c.seed = get_value(tree, "numerics.seed", c.seed);
    if (auto v = tree.get_optional<std::string>("gauge.e")) c.gauge.e = detail::parse_kernel_vector("e", *v);
    if (auto v = tree.get_optional<std::string>("gauge.e1")) c.gauge.e1 = detail::parse_kernel_vector("e1", *v);
    if (auto v = tree.get_optional<std::string>("gauge.e2")) c.gauge.e2 = detail::parse_kernel_vector("e2", *v);
    c.f0 = tree.get("controls.f0", c.f0);
    c.fl = tree.get("controls.fl", c.fl);
    c.tol.for_each([&](const char* name, double& v) { v = get_value(tree, std::string("tolerances.") + name, v); });
    return c;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    RunConfig c = parse_config(in);
    const std::filesystem::path file(c.potential_file);
    if (!c.potential_file.empty() && file.is_relative()) c.potential_file = (std::filesystem::path(path).parent_path() / file).string();
    return c;
}

}  // namespace wavemodel
