#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "grid.hpp"

namespace wavemodel {

/// Real potential q on [0, l] with a closed-form evaluator for off-node values.
struct Potential {
    Grid grid;
    Expr q;
    std::vector<double> samples;  // q at the grid nodes
    double min = 0.0;
    double max = 0.0;

    Potential() = default;
    Potential(const Grid& g, Expr expr) : grid(g), q(std::move(expr)), samples(g.size())
    {
        for (std::size_t j = 0; j < samples.size(); ++j) samples[j] = q(g.node(j));
        // Also probe cell midpoints so min/max bound what the integrator sees.
        min = max = samples[0];
        for (std::size_t j = 0; j < samples.size(); ++j) {
            min = std::min(min, samples[j]);
            max = std::max(max, samples[j]);
            if (j + 1 < samples.size()) {
                const double v = q(g.node(j) + 0.5 * g.spacing());
                min = std::min(min, v);
                max = std::max(max, v);
            }
            if (!std::isfinite(samples[j])) throw ConfigError("potential is not finite at x = " + std::to_string(g.node(j)));
        }
    }

    double operator()(double x) const { return q(x); }
};

enum class Endpoint { Left, Right };

/// Solution of -u'' + q u = lambda u sampled at the grid nodes, with u'.
struct IvpSolution {
    GridFunction u;
    GridFunction du;
};

namespace detail {

/// Fixed-step RK4 on (u, u') with `substeps` steps per grid cell. The
/// potential is tabulated once at every half substep.
class ShootingIntegrator {
public:
    ShootingIntegrator(const Potential& pot, int substeps) : pot_(&pot), substeps_(substeps)
    {
        const std::size_t cells = pot.grid.size() - 1;
        const std::size_t half_steps = 2 * cells * static_cast<std::size_t>(substeps);
        table_.resize(half_steps + 1);
        const double dx = pot.grid.spacing() / (2.0 * substeps);
        for (std::size_t i = 0; i <= half_steps; ++i) table_[i] = pot.q(static_cast<double>(i) * dx);
        // Endpoint exactly at l.
        table_.back() = pot.q(pot.grid.length());
    }

    int substeps() const { return substeps_; }

    /// Integrates from `start` across the interval. If `u_out`/`du_out` are
    /// non-null, fills node samples. Returns the far-end value and, when
    /// integrating from the left, counts sign changes of u on (0, l].
    template <class Scalar>
    Scalar run(double lambda, Endpoint start, Scalar u0, Scalar du0, std::vector<Scalar>* u_out = nullptr,
               std::vector<Scalar>* du_out = nullptr, int* sign_changes = nullptr) const
    {
        const std::size_t cells = pot_->grid.size() - 1;
        const std::size_t steps = cells * static_cast<std::size_t>(substeps_);
        const bool forward = start == Endpoint::Left;
        const double hs = (forward ? 1.0 : -1.0) * pot_->grid.spacing() / substeps_;
        if (u_out) {
            u_out->assign(cells + 1, Scalar{});
            du_out->assign(cells + 1, Scalar{});
        }
        Scalar u = u0, du = du0;
        auto node_of_step = [&](std::size_t k) { return forward ? k / substeps_ : cells - k / substeps_; };
        auto store = [&](std::size_t k) {
            if (u_out && k % static_cast<std::size_t>(substeps_) == 0) {
                (*u_out)[node_of_step(k)] = u;
                (*du_out)[node_of_step(k)] = du;
            }
        };
        store(0);
        int changes = 0;
        int last_sign = 0;
        const std::size_t last_half = 2 * steps;
        for (std::size_t k = 0; k < steps; ++k) {
            // Table indices of x_k, x_k + hs/2, x_k + hs.
            const std::size_t i0 = forward ? 2 * k : last_half - 2 * k;
            const std::size_t i1 = forward ? i0 + 1 : i0 - 1;
            const std::size_t i2 = forward ? i0 + 2 : i0 - 2;
            const double c0 = table_[i0] - lambda, c1 = table_[i1] - lambda, c2 = table_[i2] - lambda;
            const Scalar k1u = du, k1d = c0 * u;
            const Scalar k2u = du + 0.5 * hs * k1d, k2d = c1 * (u + 0.5 * hs * k1u);
            const Scalar k3u = du + 0.5 * hs * k2d, k3d = c1 * (u + 0.5 * hs * k2u);
            const Scalar k4u = du + hs * k3d, k4d = c2 * (u + hs * k3u);
            u += hs / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            du += hs / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            if (std::abs(u) + std::abs(du) > 1e150)
                throw NumericalError("shooting integration overflowed at lambda = " + std::to_string(lambda));
            store(k + 1);
            if constexpr (std::is_same_v<Scalar, double>) {
                if (sign_changes) {
                    const int s = (u > 0.0) - (u < 0.0);
                    if (s != 0) {
                        if (last_sign != 0 && s != last_sign) ++changes;
                        last_sign = s;
                    }
                }
            }
        }
        if (sign_changes) *sign_changes = changes;
        return u;
    }

private:
    const Potential* pot_;
    int substeps_;
    std::vector<double> table_;
};

/// Substeps per cell keeping (local wavenumber) * step <= 0.1.
inline int substeps_for(const Potential& pot, double lambda)
{
    const double k = std::sqrt(std::max(std::abs(lambda - pot.min), std::abs(lambda - pot.max)));
    return std::max(1, static_cast<int>(std::ceil(k * pot.grid.spacing() / 0.1)));
}

}  // namespace detail

/// Solves -u'' + q u = lambda u with Cauchy data (value, slope) at `start`.
inline IvpSolution solve_ivp(const Potential& q, double lambda, Endpoint start, cplx value, cplx slope)
{
    detail::ShootingIntegrator integ(q, detail::substeps_for(q, lambda));
    std::vector<cplx> u, du;
    integ.run<cplx>(lambda, start, value, slope, &u, &du);
    return {GridFunction(q.grid, std::move(u)), GridFunction(q.grid, std::move(du))};
}

/// Basis phi0, phil of Ker(-d^2/dx^2 + q): phi0(0) = 0, phi0'(0) = 1 and
/// phil(l) = 0, phil'(l) = 1. Derivatives are integration states.
struct KernelBasis {
    IvpSolution phi0;
    IvpSolution phil;
    double phi0_at_l = 0.0;
    double phil_at_0 = 0.0;

    const Grid& grid() const { return phi0.u.grid; }
};

inline KernelBasis kernel_basis(const Potential& q)
{
    KernelBasis kb;
    kb.phi0 = solve_ivp(q, 0.0, Endpoint::Left, 0.0, 1.0);
    kb.phil = solve_ivp(q, 0.0, Endpoint::Right, 0.0, 1.0);
    kb.phi0_at_l = kb.phi0.u.values.back().real();
    kb.phil_at_0 = kb.phil.u.values.front().real();
    const double threshold = 1e-10 * q.grid.length();
    if (std::abs(kb.phi0_at_l) < threshold || std::abs(kb.phil_at_0) < threshold)
        throw AdmissibilityError("zero is (numerically) a Dirichlet eigenvalue: phi0(l) = " + std::to_string(kb.phi0_at_l) +
                                 ", phil(0) = " + std::to_string(kb.phil_at_0));
    return kb;
}

/// First N Dirichlet eigenpairs, ascending. Eigenfunctions are L2-normalized
/// with positive slope at x = 0.
struct EigenSystem {
    Grid grid;
    std::vector<double> eigenvalues;
    std::vector<GridFunction> modes;
    std::vector<GridFunction> slopes;  // derivatives of the modes

    std::size_t size() const { return eigenvalues.size(); }
    double frequency(std::size_t n) const { return std::sqrt(eigenvalues[n]); }
};

struct EigenOptions {
    double tolerance = 1e-10;  // relative, on each eigenvalue
    int max_iterations = 400;
};

inline EigenSystem dirichlet_eigensystem(const Potential& q, int count, EigenOptions opts = {})
{
    if (count < 1) throw ConfigError("mode count must be at least 1");
    const double l = q.grid.length();
    const double pi2 = std::numbers::pi * std::numbers::pi / (l * l);

    // One integrator per substep count; modes with similar frequency share it.
    std::vector<std::unique_ptr<detail::ShootingIntegrator>> cache;
    auto integrator = [&](double lambda) -> const detail::ShootingIntegrator& {
        const int s = detail::substeps_for(q, lambda);
        if (cache.size() <= static_cast<std::size_t>(s)) cache.resize(static_cast<std::size_t>(s) + 1);
        if (!cache[s]) cache[s] = std::make_unique<detail::ShootingIntegrator>(q, s);
        return *cache[s];
    };
    auto zeros = [&](double lambda) {
        int c = 0;
        integrator(lambda).run<double>(lambda, Endpoint::Left, 0.0, 1.0, nullptr, nullptr, &c);
        return c;
    };
    auto shoot = [&](double lambda) { return integrator(lambda).run<double>(lambda, Endpoint::Left, 0.0, 1.0); };

    EigenSystem es;
    es.grid = q.grid;
    double prev = -std::numeric_limits<double>::infinity();
    for (int n = 1; n <= count; ++n) {
        // Comparison with constant potentials brackets lambda_n; pad for discretization error.
        const double base = pi2 * n * n;
        const double pad = 1e-4 * (std::abs(base) + std::abs(q.min) + std::abs(q.max)) + 1e-8;
        double lo = std::max(base + q.min - pad, prev);
        double hi = base + q.max + pad;
        int c_lo = zeros(lo), c_hi = zeros(hi);
        int guard = 0;
        while (c_hi < n) {
            hi += pi2 * (2 * n + 1) * (1 << std::min(guard, 20));
            c_hi = zeros(hi);
            if (++guard > 60) throw NumericalError("cannot bracket eigenvalue " + std::to_string(n) + " from above");
        }
        guard = 0;
        while (c_lo > n - 1) {
            lo -= pi2 * (2 * n + 1) * (1 << std::min(guard, 20));
            c_lo = zeros(lo);
            if (++guard > 60) throw NumericalError("cannot bracket eigenvalue " + std::to_string(n) + " from below");
        }
        guard = 0;
        while (!(c_lo == n - 1 && c_hi == n)) {
            const double mid = 0.5 * (lo + hi);
            const int c = zeros(mid);
            if (c >= n) {
                hi = mid;
                c_hi = c;
            } else {
                lo = mid;
                c_lo = c;
            }
            if (++guard > opts.max_iterations)
                throw NumericalError("eigenvalue " + std::to_string(n) + ": oscillation counts did not separate, zeros(lo) = " +
                                     std::to_string(c_lo) + ", zeros(hi) = " + std::to_string(c_hi));
        }

        // Illinois-modified regula falsi on u_lambda(l), with bisection when
        // the bracket stalls.
        double f_lo = shoot(lo), f_hi = shoot(hi);
        if (f_lo * f_hi > 0.0)
            throw NumericalError("eigenvalue " + std::to_string(n) + ": shooting function has no sign change on bracket");
        int side = 0;
        double lambda = 0.5 * (lo + hi);
        for (int it = 0; it < opts.max_iterations; ++it) {
            const double width = hi - lo;
            if (width <= opts.tolerance * std::max(1.0, std::abs(lambda))) break;
            double trial = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
            if (!(trial > lo && trial < hi) || it % 4 == 3) trial = 0.5 * (lo + hi);
            const double f = shoot(trial);
            lambda = trial;
            if (f == 0.0) {
                lo = hi = trial;
                break;
            }
            if ((f < 0.0) == (f_lo < 0.0)) {
                lo = trial;
                f_lo = f;
                if (side == -1) f_hi *= 0.5;
                side = -1;
            } else {
                hi = trial;
                f_hi = f;
                if (side == 1) f_lo *= 0.5;
                side = 1;
            }
        }
        lambda = 0.5 * (lo + hi);

        std::vector<double> u, du;
        integrator(lambda).run<double>(lambda, Endpoint::Left, 0.0, 1.0, &u, &du);
        std::vector<double> sq(u.size());
        for (std::size_t j = 0; j < u.size(); ++j) sq[j] = u[j] * u[j];
        const double norm = std::sqrt(simpson<double>(sq, q.grid.spacing(), 0, u.size() - 1));
        GridFunction mode(q.grid), slope(q.grid);
        for (std::size_t j = 0; j < u.size(); ++j) {
            mode[j] = u[j] / norm;
            slope[j] = du[j] / norm;
        }
        // The far end is a numerical zero of the shooting function; pin it.
        mode.values.back() = 0.0;
        es.eigenvalues.push_back(lambda);
        es.modes.push_back(std::move(mode));
        es.slopes.push_back(std::move(slope));
        prev = lambda;
    }
    return es;
}

/// Returns kappa = lambda_1 > 0, the lower bound of the operator.
inline double check_lower_bound(const EigenSystem& es)
{
    if (es.eigenvalues.empty()) throw ContractError("empty eigensystem");
    const double k = es.eigenvalues.front();
    if (!(k > 0.0)) throw AdmissibilityError("potential not admissible: lowest Dirichlet eigenvalue " + std::to_string(k) + " <= 0");
    return k;
}

/// Modal coefficients (g, phi_n).
inline std::vector<cplx> project_modes(const EigenSystem& es, const GridFunction& g)
{
    std::vector<cplx> c(es.size());
    for (std::size_t n = 0; n < es.size(); ++n) c[n] = inner(g, es.modes[n]);
    return c;
}

/// Sum of c_n phi_n.
inline GridFunction synthesize(const EigenSystem& es, const std::vector<cplx>& c)
{
    GridFunction out(es.grid);
    for (std::size_t n = 0; n < es.size(); ++n) out.axpy(c[n], es.modes[n]);
    return out;
}

struct PropagatorResult {
    GridFunction value;
    /// ||g||^2 - sum_{n<=N} |(g, phi_n)|^2: the L2 mass of g beyond the retained modes.
    double tail = 0.0;
};

/// Modal realization of L^(-1/2) sin(t L^(1/2)) g.
inline PropagatorResult wave_propagator_apply(const EigenSystem& es, double t, const GridFunction& g)
{
    if (t < 0.0) throw ContractError("propagator time must be non-negative");
    auto c = project_modes(es, g);
    double captured = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        captured += std::norm(c[n]);
        const double k = es.frequency(n);
        c[n] *= std::sin(k * t) / k;
    }
    return {synthesize(es, c), std::max(0.0, norm2(g) - captured)};
}

}  // namespace wavemodel
