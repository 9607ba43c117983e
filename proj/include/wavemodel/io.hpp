#pragma once

// CSV and JSON writers for the batch tool. Numbers are printed with 17
// significant digits so identical inputs give byte-identical files.

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "boundary_control.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model_operator.hpp"
#include "sl_solver.hpp"
#include "wave_geometry.hpp"
#include "wave_model.hpp"

namespace wavemodel {

using ojson = nlohmann::ordered_json;

namespace detail {

inline void put_complex(std::ostream& os, cplx z) { os << ',' << format_double(z.real()) << ',' << format_double(z.imag()); }

inline void put_matrix(std::ostream& os, const Mat2& m)
{
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) put_complex(os, m(a, b));
}

inline std::string matrix_header(const std::string& name)
{
    std::string s;
    for (const char* ij : {"11", "12", "21", "22"}) s += ",re(" + name + ij + "),im(" + name + ij + ")";
    return s;
}

inline ojson matrix_json(const Mat2& m)
{
    ojson rows = ojson::array();
    for (int a = 0; a < 2; ++a) {
        ojson row = ojson::array();
        for (int b = 0; b < 2; ++b) row.push_back({m(a, b).real(), m(a, b).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<std::string> split_csv(const std::string& line)
{
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace detail

/// Writes j with two-space indentation and a trailing newline.
inline void write_json(std::ostream& os, const ojson& j) { os << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------
// Eigensystem

inline void write_eigenvalues_csv(std::ostream& os, const EigenSystem& es)
{
    os << "n,lambda\n";
    for (std::size_t n = 0; n < es.size(); ++n) os << n + 1 << ',' << format_double(es.eigenvalues[n]) << '\n';
}

/// x followed by the first `count` eigenfunctions.
inline void write_modes_csv(std::ostream& os, const EigenSystem& es, std::size_t count)
{
    count = std::min(count, es.size());
    os << 'x';
    for (std::size_t n = 0; n < count; ++n) os << ",phi" << n + 1;
    os << '\n';
    for (std::size_t j = 0; j < es.grid.size(); ++j) {
        os << format_double(es.grid.node(j));
        for (std::size_t n = 0; n < count; ++n) os << ',' << format_double(es.modes[n][j].real());
        os << '\n';
    }
}

inline ojson eigensystem_json(const EigenSystem& es, double kappa, std::size_t mode_count)
{
    ojson j;
    j["l"] = es.grid.length();
    j["grid_n"] = es.grid.intervals();
    j["kappa"] = kappa;
    j["eigenvalues"] = es.eigenvalues;
    ojson modes = ojson::array();
    for (std::size_t n = 0; n < std::min(mode_count, es.size()); ++n) {
        std::vector<double> v(es.grid.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = es.modes[n][k].real();
        modes.push_back(std::move(v));
    }
    j["x"] = es.grid.nodes();
    j["modes"] = std::move(modes);
    return j;
}

// ---------------------------------------------------------------------------
// Wave fields

inline void write_wavefield_csv(std::ostream& os, const WaveField& f)
{
    os << "t,x,re,im\n";
    for (std::size_t k = 0; k < f.times.size(); ++k) {
        const auto& u = f.snapshots[k];
        const std::string t = format_double(f.times[k]);
        for (std::size_t j = 0; j < u.size(); ++j) {
            os << t << ',' << format_double(u.grid.node(j));
            detail::put_complex(os, u[j]);
            os << '\n';
        }
    }
}

inline ojson wavefield_json(const WaveField& f)
{
    ojson j;
    j["t"] = f.times;
    j["x"] = f.snapshots.empty() ? std::vector<double>{} : f.snapshots.front().grid.nodes();
    ojson re = ojson::array(), im = ojson::array();
    for (const auto& u : f.snapshots) {
        std::vector<double> r(u.size()), i(u.size());
        for (std::size_t k = 0; k < u.size(); ++k) {
            r[k] = u[k].real();
            i[k] = u[k].imag();
        }
        re.push_back(std::move(r));
        im.push_back(std::move(i));
    }
    j["re"] = std::move(re);
    j["im"] = std::move(im);
    return j;
}

inline ojson support_json(double t, const SupportReport& r)
{
    return {{"t", t}, {"inside_mass", r.inside_mass}, {"outside_mass", r.outside_mass}, {"trivial", r.trivial}, {"pass", r.pass}};
}

// ---------------------------------------------------------------------------
// Gauge and model coefficients

/// One row per half-grid node: T, G, rho and |det T|.
inline void write_gauge_csv(std::ostream& os, const GaugeData& gd)
{
    os << 'x' << detail::matrix_header("T") << detail::matrix_header("G") << ",rho,det\n";
    for (std::size_t j = 0; j < gd.half_size(); ++j) {
        os << format_double(gd.node(j));
        detail::put_matrix(os, gd.T(j));
        detail::put_matrix(os, gd.G(j));
        os << ',' << format_double(gd.rho(j)) << ',' << format_double(gd.det_T(j)) << '\n';
    }
}

inline ojson gauge_json(const GaugeData& gd)
{
    ojson rows = ojson::array();
    for (std::size_t j = 0; j < gd.half_size(); ++j)
        rows.push_back({{"x", gd.node(j)}, {"T", detail::matrix_json(gd.T(j))}, {"G", detail::matrix_json(gd.G(j))}, {"rho", gd.rho(j)},
                        {"det", gd.det_T(j)}});
    return rows;
}

/// P and Q on admissible nodes; the guard band near l/2 has no rows.
inline void write_coefficients_csv(std::ostream& os, const ModelCoefficients& mc)
{
    os << 'x' << detail::matrix_header("P") << detail::matrix_header("Q") << '\n';
    for (std::size_t j = 0; j < mc.size(); ++j) {
        if (!mc.admissible[j]) continue;
        os << format_double(mc.x[j]);
        detail::put_matrix(os, mc.P[j]);
        detail::put_matrix(os, mc.Q[j]);
        os << '\n';
    }
}

inline ojson coefficients_json(const ModelCoefficients& mc)
{
    ojson rows = ojson::array();
    for (std::size_t j = 0; j < mc.size(); ++j)
        if (mc.admissible[j]) rows.push_back({{"x", mc.x[j]}, {"P", detail::matrix_json(mc.P[j])}, {"Q", detail::matrix_json(mc.Q[j])}});
    return rows;
}

/// Reads the CSV written by write_coefficients_csv. Nodes must be uniform and
/// start at x = 0; `half_length` is l/2.
inline ModelCoefficients read_coefficients_csv(std::istream& is, double half_length)
{
    std::string line;
    std::ostringstream expected;
    expected << 'x' << detail::matrix_header("P") << detail::matrix_header("Q");
    if (!std::getline(is, line) || line != expected.str()) throw ConfigError("coefficient CSV has an unexpected header");
    ModelCoefficients mc;
    mc.half_length = half_length;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto cells = detail::split_csv(line);
        if (cells.size() != 17) throw ConfigError("coefficient CSV row needs 17 columns: " + line);
        std::vector<double> v(17);
        for (std::size_t i = 0; i < 17; ++i) {
            try {
                v[i] = std::stod(cells[i]);
            } catch (const std::exception&) {
                throw ConfigError("coefficient CSV: not a number: " + cells[i]);
            }
        }
        Mat2 P, Q;
        for (int k = 0; k < 4; ++k) {
            P(k / 2, k % 2) = cplx(v[1 + 2 * k], v[2 + 2 * k]);
            Q(k / 2, k % 2) = cplx(v[9 + 2 * k], v[10 + 2 * k]);
        }
        mc.x.push_back(v[0]);
        mc.admissible.push_back(true);
        mc.P.push_back(P);
        mc.Q.push_back(Q);
    }
    if (mc.x.size() < 9) throw ConfigError("coefficient CSV has too few rows");
    const double h = mc.x[1] - mc.x[0];
    if (mc.x[0] != 0.0 || !(h > 0.0)) throw ConfigError("coefficient CSV must start at x = 0 with increasing nodes");
    for (std::size_t j = 1; j < mc.x.size(); ++j)
        if (std::abs(mc.x[j] - mc.x[0] - h * static_cast<double>(j)) > 1e-9 * half_length)
            throw ConfigError("coefficient CSV nodes are not uniform");
    const std::size_t m = mc.size();
    mc.dP.assign(m, Mat2::Zero());
    mc.S.assign(m, Mat2::Zero());
    mc.qdiag.assign(m, Eigen::Vector2d::Zero());
    return mc;
}

// ---------------------------------------------------------------------------
// Geometry and recovery

inline ojson symmetric_set_json(const SymmetricSet& s)
{
    ojson iv = ojson::array();
    for (const auto& i : s.intervals()) iv.push_back({i.a, i.b});
    return {{"l", s.length()}, {"intervals", std::move(iv)}, {"points", s.points()}};
}

inline SymmetricSet symmetric_set_from_json(const ojson& j)
{
    try {
        std::vector<Interval> iv;
        for (const auto& p : j.at("intervals")) iv.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        return SymmetricSet(j.at("l").get<double>(), std::move(iv), j.at("points").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("symmetric set JSON: ") + e.what());
    }
}

/// Branch table; q columns are added when the true potential is known.
inline void write_branches_csv(std::ostream& os, const RecoveryReport& r, const std::vector<double>* q_x = nullptr,
                               const std::vector<double>* q_mirror = nullptr)
{
    os << "x,branch1,branch2,collision";
    if (q_x) os << ",q_x,q_mirror";
    os << '\n';
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        os << format_double(r.x[i]) << ',' << format_double(r.branch1[i]) << ',' << format_double(r.branch2[i]) << ','
           << (r.collision[i] ? 1 : 0);
        if (q_x) os << ',' << format_double((*q_x)[i]) << ',' << format_double((*q_mirror)[i]);
        os << '\n';
    }
}

inline ojson recovery_json(const RecoveryReport& r)
{
    ojson j;
    j["branches"] = {{"x", r.x}, {"branch1", r.branch1}, {"branch2", r.branch2}};
    std::vector<int> flags;
    for (bool c : r.collision) flags.push_back(c ? 1 : 0);
    j["collision_flags"] = std::move(flags);
    j["any_collision"] = r.any_collision;
    j["max_imag"] = r.max_imag;
    j["reflection_note"] = r.reflection_note;
    return j;
}

}  // namespace wavemodel
