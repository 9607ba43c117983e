#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "grid.hpp"
#include "sl_solver.hpp"

namespace wavemodel {

/// Dirichlet boundary data u(0,t) = f0(t), u(l,t) = fl(t). Both must vanish
/// identically on [0, dead_time] and have a vanishing 2-jet at t = 0.
struct ControlSignal {
    Expr f0;
    Expr fl;
    double dead_time = 0.0;

    ControlSignal() = default;
    ControlSignal(Expr left, Expr right, double dead = 0.0) : f0(std::move(left)), fl(std::move(right)), dead_time(dead)
    {
        validate();
    }

    static ControlSignal zero() { return {Expr(0.0), Expr(0.0)}; }

    void validate() const
    {
        for (const Expr* f : {&f0, &fl}) {
            for (int k = 0; k <= 2; ++k)
                if (std::abs(f->derivative(0.0, k)) > 1e-12)
                    throw ConfigError("control must vanish to second order at t = 0 (derivative " + std::to_string(k) + " is " +
                                      std::to_string(f->derivative(0.0, k)) + ")");
            for (int i = 0; i <= 64 && dead_time > 0.0; ++i)
                if ((*f)(dead_time * i / 64.0) != 0.0) throw ConfigError("control is active during the dead time");
        }
    }

    friend ControlSignal operator+(const ControlSignal& a, const ControlSignal& b)
    {
        return {a.f0 + b.f0, a.fl + b.fl, std::min(a.dead_time, b.dead_time)};
    }
};

/// K-valued control h(t) = a(t) phi0 + b(t) phil.
struct KernelControl {
    Expr a;
    Expr b;

    KernelControl differentiated(int k = 1) const { return {a.differentiated(k), b.differentiated(k)}; }
};

/// Coefficients of an element of K in the basis (phi0, phil).
struct KernelCoefficients {
    cplx a;
    cplx b;
};

/// Time samples t_k = k * dt with one grid function per sample.
struct WaveField {
    std::vector<double> times;
    std::vector<GridFunction> snapshots;
};

inline GridFunction kernel_element(const KernelBasis& kb, cplx a, cplx b)
{
    GridFunction out = a * kb.phi0.u;
    out.axpy(b, kb.phil.u);
    return out;
}

/// Gamma_1 u = -(u(l)/phi0(l)) phi0 - (u(0)/phil(0)) phil.
inline KernelCoefficients gamma1(const GridFunction& u, const KernelBasis& kb)
{
    return {-u.values.back() / kb.phi0_at_l, -u.values.front() / kb.phil_at_0};
}

/// Gamma_2 u = P_K L0* u: orthogonal projection of the supplied L0* u onto
/// span{phi0, phil}, via the 2x2 Gram system.
inline KernelCoefficients gamma2(const GridFunction& lu, const KernelBasis& kb)
{
    Eigen::Matrix2cd gram;
    const GridFunction* basis[2] = {&kb.phi0.u, &kb.phil.u};
    Eigen::Vector2cd rhs;
    for (int i = 0; i < 2; ++i) {
        rhs(i) = inner(lu, *basis[i]);
        for (int j = 0; j < 2; ++j) gram(i, j) = inner(*basis[j], *basis[i]);
    }
    const cplx det = gram.determinant();
    if (std::abs(det) <= 1e-14 * gram.norm() * gram.norm()) throw NumericalError("kernel basis Gram matrix is singular");
    const Eigen::Vector2cd c = gram.partialPivLu().solve(rhs);
    return {c(0), c(1)};
}

/// Boundary data to K-valued control: a = -fl/phi0(l), b = -f0/phil(0), so
/// h(t)(0) = -f0(t) and h(t)(l) = -fl(t).
inline KernelControl control_to_kernel(const ControlSignal& c, const KernelBasis& kb)
{
    return {(-1.0 / kb.phi0_at_l) * c.fl, (-1.0 / kb.phil_at_0) * c.f0};
}

inline GridFunction evaluate_kernel_control(const KernelControl& h, double t, const KernelBasis& kb)
{
    return kernel_element(kb, h.a(t), h.b(t));
}

/// Projections (phi0, phi_n) and (phil, phi_n) by Green's identity:
/// lambda_n (phi0, phi_n) = -phi0(l) phi_n'(l), lambda_n (phil, phi_n) = phil(0) phi_n'(0).
struct KernelProjections {
    std::vector<double> phi0;
    std::vector<double> phil;
};

inline KernelProjections kernel_projections(const EigenSystem& es, const KernelBasis& kb)
{
    KernelProjections p;
    p.phi0.resize(es.size());
    p.phil.resize(es.size());
    for (std::size_t n = 0; n < es.size(); ++n) {
        p.phi0[n] = -kb.phi0_at_l * es.slopes[n].values.back().real() / es.eigenvalues[n];
        p.phil[n] = kb.phil_at_0 * es.slopes[n].values.front().real() / es.eigenvalues[n];
    }
    return p;
}

namespace detail {

/// Simpson intervals for the Duhamel integral on [0, t].
inline std::size_t duhamel_steps(const EigenSystem& es, double t)
{
    const double k_max = es.frequency(es.size() - 1);
    const double ds = std::min(1.0 / (10.0 * k_max), t / 64.0);
    std::size_t m = static_cast<std::size_t>(std::ceil(t / ds));
    return m + (m % 2);
}

/// int_0^t sin(k (t - s)) g(s) ds / k for every mode, g given at the Simpson nodes.
inline std::vector<double> duhamel_modal(const EigenSystem& es, double t, std::span<const double> g_a, std::span<const double> g_b,
                                         const std::vector<double>& proj_a, const std::vector<double>& proj_b)
{
    const std::size_t m = g_a.size() - 1;
    const double ds = t / static_cast<double>(m);
    std::vector<double> out(es.size());
    std::vector<double> integrand(m + 1);
    for (std::size_t n = 0; n < es.size(); ++n) {
        const double k = es.frequency(n);
        // sin(k(t - s_i)) by rotation from s = t backwards.
        const double c1 = std::cos(k * ds), s1 = std::sin(k * ds);
        double sn = 0.0, cs = 1.0;  // sin, cos of k(t - s_i) at i = m
        for (std::size_t i = m + 1; i-- > 0;) {
            integrand[i] = sn * (proj_a[n] * g_a[i] + proj_b[n] * g_b[i]);
            const double next_sn = sn * c1 + cs * s1;
            cs = cs * c1 - sn * s1;
            sn = next_sn;
        }
        out[n] = simpson<double>(integrand, ds, 0, m) / k;
    }
    return out;
}

}  // namespace detail

/// A wave state with the diagnostics of its modal/time discretization.
struct WaveSample {
    GridFunction u;
    std::vector<double> modal;   // coefficients c_n of the Duhamel part
    std::size_t time_steps = 0;  // Simpson intervals in s
    double tail_coefficient = 0.0;  // |c_N|, the last retained coefficient
};

/// Smooth wave u^h(t) = -h(t) + int_0^t L^(-1/2) sin((t-s) L^(1/2)) h''(s) ds.
inline WaveSample smooth_wave(const KernelControl& h, double t, const EigenSystem& es, const KernelBasis& kb,
                              const KernelProjections& proj)
{
    if (t < 0.0) throw ContractError("smooth_wave time must be non-negative");
    WaveSample out;
    out.u = evaluate_kernel_control(h, t, kb);
    out.u *= -1.0;
    out.modal.assign(es.size(), 0.0);
    if (t == 0.0) return out;
    const std::size_t m = detail::duhamel_steps(es, t);
    std::vector<double> a2(m + 1), b2(m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        const double s = t * static_cast<double>(i) / static_cast<double>(m);
        a2[i] = h.a.derivative(s, 2);
        b2[i] = h.b.derivative(s, 2);
    }
    out.modal = detail::duhamel_modal(es, t, a2, b2, proj.phi0, proj.phil);
    for (std::size_t n = 0; n < es.size(); ++n) out.u.axpy(out.modal[n], es.modes[n]);
    out.time_steps = m;
    out.tail_coefficient = std::abs(out.modal.back());
    return out;
}

inline WaveSample smooth_wave(const KernelControl& h, double t, const EigenSystem& es, const KernelBasis& kb)
{
    return smooth_wave(h, t, es, kb, kernel_projections(es, kb));
}

/// Separable source g(s, x) = sum_i profile_i(s) * shape_i(x).
struct SourceTerm {
    std::vector<std::pair<Expr, GridFunction>> terms;
};

/// v^g(t) = int_0^t L^(-1/2) sin((t-s) L^(1/2)) g(s) ds.
inline WaveSample source_wave(const SourceTerm& g, double t, const EigenSystem& es)
{
    if (t < 0.0) throw ContractError("source_wave time must be non-negative");
    WaveSample out;
    out.u = GridFunction(es.grid);
    out.modal.assign(es.size(), 0.0);
    if (t == 0.0 || g.terms.empty()) return out;
    const std::size_t m = detail::duhamel_steps(es, t);
    std::vector<double> zeros(m + 1, 0.0), profile(m + 1), none(es.size(), 0.0);
    std::vector<cplx> coeff(es.size(), cplx{});
    for (const auto& [time_profile, shape] : g.terms) {
        if (std::abs(time_profile(0.0)) > 1e-12) throw ContractError("source must vanish at s = 0");
        for (std::size_t i = 0; i <= m; ++i) profile[i] = time_profile(t * static_cast<double>(i) / static_cast<double>(m));
        const auto proj = project_modes(es, shape);
        std::vector<double> re(es.size()), im(es.size());
        for (std::size_t n = 0; n < es.size(); ++n) {
            re[n] = proj[n].real();
            im[n] = proj[n].imag();
        }
        const auto cr = detail::duhamel_modal(es, t, profile, zeros, re, none);
        const auto ci = detail::duhamel_modal(es, t, profile, zeros, im, none);
        for (std::size_t n = 0; n < es.size(); ++n) coeff[n] += cplx(cr[n], ci[n]);
    }
    out.u = synthesize(es, coeff);
    for (std::size_t n = 0; n < es.size(); ++n) out.modal[n] = std::abs(coeff[n]);
    out.time_steps = m;
    out.tail_coefficient = std::abs(coeff.back());
    return out;
}

/// Explicit leapfrog for u_tt = u_xx - q u with Dirichlet data from the
/// control and zero Cauchy data. Stores `samples` + 1 evenly spaced snapshots
/// including t = 0 and t = horizon.
inline WaveField fdtd_oracle(const ControlSignal& c, double horizon, const Potential& q, double cfl, std::size_t samples = 100)
{
    if (!(cfl > 0.0) || cfl > 0.9) throw ConfigError("cfl must lie in (0, 0.9], got " + std::to_string(cfl));
    if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
    if (samples == 0) samples = 1;
    const Grid& g = q.grid;
    const double h = g.spacing();
    std::size_t steps = static_cast<std::size_t>(std::ceil(horizon / (cfl * h)));
    steps = ((steps + samples - 1) / samples) * samples;
    const std::size_t stride = steps / samples;
    const double dt = horizon / static_cast<double>(steps);
    const double r2 = (dt / h) * (dt / h);
    const std::size_t n = g.size();

    double control_sup = 0.0;
    for (std::size_t k = 0; k <= steps; ++k) {
        const double t = dt * static_cast<double>(k);
        control_sup = std::max({control_sup, std::abs(c.f0(t)), std::abs(c.fl(t))});
    }
    const double blowup = 1e6 * control_sup;

    std::vector<double> prev(n, 0.0), cur(n, 0.0), next(n, 0.0);
    WaveField field;
    field.times.push_back(0.0);
    field.snapshots.emplace_back(g);
    // Zero Cauchy data give u = O(t^3) in the interior, so u(dt) = 0 there.
    cur.front() = c.f0(dt);
    cur.back() = c.fl(dt);
    auto record = [&](std::size_t k, const std::vector<double>& u) {
        GridFunction snap(g);
        for (std::size_t j = 0; j < n; ++j) snap[j] = u[j];
        field.times.push_back(dt * static_cast<double>(k));
        field.snapshots.push_back(std::move(snap));
    };
    if (stride == 1) record(1, cur);
    for (std::size_t k = 1; k < steps; ++k) {
        const double t_next = dt * static_cast<double>(k + 1);
        double sup = 0.0;
        for (std::size_t j = 1; j + 1 < n; ++j) {
            next[j] = 2.0 * cur[j] - prev[j] + r2 * (cur[j + 1] - 2.0 * cur[j] + cur[j - 1]) - dt * dt * q.samples[j] * cur[j];
            sup = std::max(sup, std::abs(next[j]));
        }
        next.front() = c.f0(t_next);
        next.back() = c.fl(t_next);
        if (!(sup <= blowup) && control_sup > 0.0)
            throw NumericalError("leapfrog blew up at t = " + std::to_string(t_next) + "; reduce cfl");
        std::swap(prev, cur);
        std::swap(cur, next);
        if ((k + 1) % stride == 0) record(k + 1, cur);
    }
    return field;
}

struct SupportReport {
    double inside_mass = 0.0;
    double outside_mass = 0.0;
    bool trivial = false;  // t > l/2: nothing to confine
    bool pass = true;
};

/// L2 mass (integral of |u|^2) of u on [t + 2h, l - t - 2h] against the total.
inline SupportReport support_report(const GridFunction& u, double t, double tol)
{
    SupportReport r;
    const Grid& g = u.grid;
    const double l = g.length(), h = g.spacing();
    std::vector<double> mass(g.size());
    for (std::size_t j = 0; j < mass.size(); ++j) mass[j] = std::norm(u[j]);
    const double total = simpson<double>(mass, h, 0, mass.size() - 1);
    if (t > 0.5 * l) {
        r.inside_mass = total;
        r.trivial = true;
        return r;
    }
    const double eps = 2.0 * h;
    const double lo = t + eps, hi = l - t - eps;
    if (hi > lo) {
        const auto j0 = static_cast<std::size_t>(std::ceil(lo / h - 1e-9));
        const auto j1 = static_cast<std::size_t>(std::floor(hi / h + 1e-9));
        r.outside_mass = simpson<double>(mass, h, j0, j1);
    }
    r.inside_mass = total - r.outside_mass;
    r.pass = total == 0.0 || r.outside_mass <= tol * total;
    return r;
}

/// Singular values of snapshots u^h(t) over random controls, restricted to a
/// coarse set of interior nodes.
struct SpanProfile {
    std::vector<double> coarse_nodes;
    Eigen::MatrixXd snapshots;              // coarse nodes x samples
    std::vector<double> singular_values;    // descending

    double condition_ratio() const
    {
        if (singular_values.empty() || singular_values.front() == 0.0) return 0.0;
        return singular_values.back() / singular_values.front();
    }

    /// max |snapshot| on coarse nodes inside [a, b], relative to the overall max.
    double relative_peak_in(double a, double b) const
    {
        const double all = snapshots.cwiseAbs().maxCoeff();
        double inside = 0.0;
        for (std::size_t i = 0; i < coarse_nodes.size(); ++i)
            if (coarse_nodes[i] >= a && coarse_nodes[i] <= b)
                inside = std::max(inside, snapshots.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff());
        return all == 0.0 ? 0.0 : inside / all;
    }
};

/// A random admissible control: one bump at each end, supported in (0, t).
inline ControlSignal random_bump_control(double t, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> amp(0.0, 1.0);
    auto one = [&] {
        const double width = t * (0.25 + 0.35 * unit(rng));
        const double center = 0.5 * width + (t - width) * unit(rng);
        return Expr::bump(center, width, amp(rng));
    };
    Expr left = one();
    Expr right = one();
    return {left, right};
}

inline SpanProfile reachable_span_estimate(double t, const EigenSystem& es, const KernelBasis& kb, std::size_t samples,
                                           std::size_t coarse = 24, std::uint64_t seed = 1)
{
    if (samples < coarse) throw ContractError("need at least as many random controls as coarse nodes");
    const Grid& g = es.grid;
    SpanProfile p;
    std::vector<std::size_t> idx(coarse);
    for (std::size_t i = 0; i < coarse; ++i) {
        const double x = g.length() * static_cast<double>(i + 1) / static_cast<double>(coarse + 1);
        idx[i] = static_cast<std::size_t>(std::lround(x / g.spacing()));
        p.coarse_nodes.push_back(g.node(idx[i]));
    }
    p.snapshots = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(coarse), static_cast<Eigen::Index>(samples));
    if (t > 0.0) {
        std::mt19937_64 rng(seed);
        const auto proj = kernel_projections(es, kb);
        for (std::size_t s = 0; s < samples; ++s) {
            const auto h = control_to_kernel(random_bump_control(t, rng), kb);
            const auto w = smooth_wave(h, t, es, kb, proj);
            for (std::size_t i = 0; i < coarse; ++i)
                p.snapshots(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s)) = w.u[idx[i]].real();
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(p.snapshots);
    const auto& sv = svd.singularValues();
    p.singular_values.assign(sv.data(), sv.data() + sv.size());
    return p;
}

}  // namespace wavemodel
