#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>

#include "wavemodel/config.hpp"
#include "wavemodel/io.hpp"
#include "wavemodel/verification.hpp"

using namespace wavemodel;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kNumerical = 3, kVerification = 4 };

struct Overrides {
    std::string config;
    std::string out = ".";
    std::optional<std::string> format;
    std::optional<std::uint64_t> seed;
    std::optional<int> modes;
    std::optional<int> grid_n;
    std::optional<double> cfl;
    std::optional<double> horizon;
};

RunConfig resolve(const Overrides& o)
{
    RunConfig c = o.config.empty() ? RunConfig{} : load_config(o.config);
    if (o.format) c.format = *o.format;
    if (o.seed) c.seed = *o.seed;
    if (o.modes) c.modes = *o.modes;
    if (o.grid_n) c.grid_n = *o.grid_n;
    if (o.cfl) c.cfl = *o.cfl;
    if (o.horizon) c.horizon = *o.horizon;
    c.out_dir = o.out;
    c.validate();
    fs::create_directories(c.out_dir);
    return c;
}

std::ofstream open_out(const RunConfig& c, const std::string& name)
{
    const fs::path p = fs::path(c.out_dir) / name;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw ConfigError("cannot write " + p.string());
    return os;
}

template <class F>
void emit(const RunConfig& c, const std::string& name, F&& write)
{
    auto os = open_out(c, name);
    write(os);
    std::cout << (fs::path(c.out_dir) / name).string() << '\n';
}

Potential make_potential(const RunConfig& c) { return Potential(build_grid(c.l, c.grid_n), c.potential_expr()); }

int run_eigs(const RunConfig& c)
{
    const auto q = make_potential(c);
    const auto es = dirichlet_eigensystem(q, c.modes, {c.shoot_tol, 400});
    const double kappa = check_lower_bound(es);
    const auto count = static_cast<std::size_t>(c.export_modes);
    if (c.format == "json") {
        emit(c, "eigensystem.json", [&](std::ostream& os) { write_json(os, eigensystem_json(es, kappa, count)); });
    } else {
        emit(c, "eigenvalues.csv", [&](std::ostream& os) { write_eigenvalues_csv(os, es); });
        emit(c, "modes.csv", [&](std::ostream& os) { write_modes_csv(os, es, count); });
        emit(c, "kappa.json", [&](std::ostream& os) { write_json(os, {{"kappa", kappa}, {"count", es.size()}}); });
    }
    return kOk;
}

int run_simulate(const RunConfig& c)
{
    const auto q = make_potential(c);
    const auto control = c.control();
    const double horizon = c.effective_horizon();
    const auto samples = static_cast<std::size_t>(c.snapshots);
    // The oracle validates cfl before any spectral work is done.
    const auto oracle = fdtd_oracle(control, horizon, q, c.cfl, samples);
    const auto kb = kernel_basis(q);
    const auto es = dirichlet_eigensystem(q, c.modes, {c.shoot_tol, 400});
    check_lower_bound(es);
    const auto h = control_to_kernel(control, kb);
    const auto proj = kernel_projections(es, kb);

    WaveField field;
    ojson support = ojson::array();
    double oracle_l2 = 0.0;
    for (std::size_t k = 0; k < oracle.times.size(); ++k) {
        const double t = oracle.times[k];
        GridFunction u = t > 0.0 ? smooth_wave(h, t, es, kb, proj).u : GridFunction(q.grid);
        support.push_back(support_json(t, support_report(u, t, c.tol.support_mass)));
        oracle_l2 = std::max(oracle_l2, l2_norm(u - oracle.snapshots[k]));
        field.times.push_back(t);
        field.snapshots.push_back(std::move(u));
    }
    if (c.format == "json")
        emit(c, "wavefield.json", [&](std::ostream& os) { write_json(os, wavefield_json(field)); });
    else
        emit(c, "wavefield.csv", [&](std::ostream& os) { write_wavefield_csv(os, field); });
    ojson rep;
    rep["horizon"] = horizon;
    rep["snapshots"] = field.times.size();
    rep["modes"] = es.size();
    rep["support"] = std::move(support);
    rep["oracle"] = {{"method", "leapfrog"}, {"cfl", c.cfl}, {"max_l2_difference", oracle_l2}, {"tolerance", c.tol.oracle_l2},
                     {"pass", oracle_l2 <= c.tol.oracle_l2}};
    emit(c, "simulate_report.json", [&](std::ostream& os) { write_json(os, rep); });
    return kOk;
}

int run_model(const RunConfig& c)
{
    const auto q = make_potential(c);
    const auto kb = kernel_basis(q);
    const GaugeData gd(kb, q, c.gauge);
    const auto mc = assemble_coefficients(gd, q);
    const auto res = gauge_residuals(gd);
    const auto sim = similarity_residuals(mc, gd);
    if (c.format == "json") {
        emit(c, "gauge.json", [&](std::ostream& os) { write_json(os, gauge_json(gd)); });
        emit(c, "coefficients.json", [&](std::ostream& os) { write_json(os, coefficients_json(mc)); });
    } else {
        emit(c, "gauge.csv", [&](std::ostream& os) { write_gauge_csv(os, gd); });
        emit(c, "coefficients.csv", [&](std::ostream& os) { write_coefficients_csv(os, mc); });
    }
    const std::size_t last = gd.last_admissible();
    ojson rep;
    rep["gram_residual"] = res.gram;
    rep["inverse_residual"] = res.inverse;
    rep["min_rho"] = res.min_rho;
    rep["last_admissible_x"] = gd.node(last);
    rep["guard_band"] = {gd.node(last + 1), 0.5 * c.l};
    rep["similarity"] = {{"trace", sim.trace}, {"det", sim.det}, {"direct", sim.direct}};
    emit(c, "model_report.json", [&](std::ostream& os) { write_json(os, rep); });
    return kOk;
}

int run_recover(const RunConfig& c, const std::string& coefficients)
{
    RecoveryReport r;
    std::string path;
    std::optional<Potential> q;
    if (coefficients.empty()) {
        q = make_potential(c);
        const auto kb = kernel_basis(*q);
        const GaugeData gd(kb, *q, c.gauge);
        r = recover_potential(assemble_coefficients(gd, *q));
        path = "analytic";
    } else {
        std::ifstream in(coefficients);
        if (!in) throw ConfigError("cannot open coefficient file " + coefficients);
        r = recover_potential_observed(read_coefficients_csv(in, 0.5 * c.l));
        path = "observed";
    }
    ojson rep = recovery_json(r);
    rep["path"] = path;
    std::vector<double> qx, qm;
    if (q) {
        for (double x : r.x) {
            qx.push_back((*q)(x));
            qm.push_back((*q)(c.l - x));
        }
        rep["max_error"] = r.max_error(qx, qm);
    }
    if (c.format == "csv")
        emit(c, "branches.csv", [&](std::ostream& os) { write_branches_csv(os, r, q ? &qx : nullptr, q ? &qm : nullptr); });
    emit(c, "recovery.json", [&](std::ostream& os) { write_json(os, rep); });
    if (r.any_collision) std::cerr << "note: eigenvalue branches collide on part of the interval\n";
    return kOk;
}

int run_verify(const RunConfig& c, const std::set<int>& only, double fault, bool timing)
{
    auto opt = c.verify_options();
    opt.only = only;
    opt.fault = fault;
    opt.on_check = [](const CheckRecord& r) {
        const auto& b = r.binding();
        std::printf("%s %2d %-20s measured %-24s %s %s\n", r.pass() ? "PASS" : "FAIL", r.id, r.name.c_str(), format_double(b.measured).c_str(),
                    b.lower_bound ? ">=" : "<=", format_double(b.tolerance).c_str());
        std::fflush(stdout);
    };
    const auto rep = run_verification(opt);
    emit(c, "report.json", [&](std::ostream& os) { write_json(os, rep.to_json(timing)); });
    return rep.all_pass() ? kOk : kVerification;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Boundary-control wave model toolkit"};
    app.require_subcommand(1);
    Overrides ov;
    auto common = [&](CLI::App* s) {
        s->add_option("--config", ov.config, "INI configuration file")->check(CLI::ExistingFile);
        s->add_option("--out", ov.out, "output directory");
        s->add_option("--format", ov.format, "table format")->check(CLI::IsMember({"csv", "json"}));
        s->add_option("--seed", ov.seed, "seed for random controls");
        s->add_option("--modes", ov.modes, "number of Dirichlet modes");
        s->add_option("--grid-n", ov.grid_n, "grid intervals");
        s->add_option("--cfl", ov.cfl, "leapfrog Courant number");
        s->add_option("--horizon", ov.horizon, "simulation end time");
    };
    auto* eigs = app.add_subcommand("eigs", "Dirichlet eigenvalues, eigenfunctions and the lower bound");
    auto* simulate = app.add_subcommand("simulate", "boundary-controlled wave field with support and oracle report");
    auto* model = app.add_subcommand("model", "gauge matrices and model operator coefficients");
    auto* verify = app.add_subcommand("verify", "run the verification suite");
    auto* recover = app.add_subcommand("recover", "potential branches from the model coefficients");
    for (auto* s : {eigs, simulate, model, verify, recover}) common(s);
    std::set<int> only;
    double fault = 0.0;
    bool timing = false;
    verify->add_option("--only", only, "check ids to run")->delimiter(',')->check(CLI::Range(1, 12));
    verify->add_option("--inject-fault", fault, "corrupt the coordinate map by this relative amount (self-test)");
    verify->add_flag("--timing", timing, "record runtimes in the report");
    std::string coefficients;
    recover->add_option("--coefficients", coefficients, "coefficient CSV from `model`; uses the sampled-coefficient path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        const RunConfig c = resolve(ov);
        if (*eigs) return run_eigs(c);
        if (*simulate) return run_simulate(c);
        if (*model) return run_model(c);
        if (*verify) return run_verify(c, only, fault, timing);
        if (*recover) return run_recover(c, coefficients);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const DomainError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kFailure;
}
