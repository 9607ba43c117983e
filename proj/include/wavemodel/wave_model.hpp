#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "grid.hpp"
#include "sl_solver.hpp"
#include "wave_geometry.hpp"

namespace wavemodel {

using Mat2 = Eigen::Matrix2cd;
using Vec2 = Eigen::Vector2cd;

/// Coefficients (c0, cl) of c0 phi0 + cl phil.
struct KernelVector {
    cplx c0;
    cplx cl;
};

/// Gauge e and the basis e1, e2 of K, all in the (phi0, phil) basis.
struct GaugeSpec {
    KernelVector e{1.0, cplx(0.0, 1.0)};
    KernelVector e1{1.0, 0.0};
    KernelVector e2{0.0, 1.0};
};

/// Values and x-derivatives of a function on the full grid.
struct Jet {
    GridFunction u;
    GridFunction du;
    GridFunction d2u;
};

inline Jet sample_jet(const Expr& f, const Grid& g)
{
    Jet j{GridFunction(g), GridFunction(g), GridFunction(g)};
    for (std::size_t k = 0; k < g.size(); ++k) {
        const double x = g.node(k);
        j.u[k] = f(x);
        j.du[k] = f.derivative(x, 1);
        j.d2u[k] = f.derivative(x, 2);
    }
    return j;
}

/// Element of K with its derivatives; the second derivative is q times the value.
inline Jet kernel_jet(const KernelBasis& kb, const Potential& q, const KernelVector& c)
{
    Jet j{c.c0 * kb.phi0.u, c.c0 * kb.phi0.du, GridFunction(kb.grid())};
    j.u.axpy(c.cl, kb.phil.u);
    j.du.axpy(c.cl, kb.phil.du);
    for (std::size_t k = 0; k < j.u.size(); ++k) j.d2u[k] = q.samples[k] * j.u[k];
    return j;
}

/// Gauge, weight rho, coordinate matrix T with two x-derivatives and Gram
/// matrix G on the half-grid x_j = j h, j = 0..n/2.
class GaugeData {
public:
    static constexpr double det_floor = 1e-8;
    static constexpr std::size_t guard_nodes = 3;

    GaugeData(const KernelBasis& kb, const Potential& q, const GaugeSpec& spec = {}) : grid_(kb.grid()), spec_(spec)
    {
        if (!(q.grid == grid_)) throw ContractError("potential and kernel basis live on different grids");
        e_ = kernel_jet(kb, q, spec.e);
        e1_ = kernel_jet(kb, q, spec.e1);
        e2_ = kernel_jet(kb, q, spec.e2);
        check_wronskian();
        const std::size_t m = grid_.midpoint();
        const std::size_t n = grid_.size() - 1;
        rho_.resize(m + 1);
        T_.resize(m + 1);
        dT_.resize(m + 1);
        d2T_.resize(m + 1);
        G_.resize(m + 1);
        det_.resize(m + 1);
        admissible_.resize(m + 1);
        for (std::size_t j = 0; j <= m; ++j) {
            const std::size_t r = n - j;
            const double qx = q.samples[j], qr = q.samples[r];
            const double rho = std::norm(e_.u[j]) + std::norm(e_.u[r]);
            if (!(rho > 1e-12)) throw GaugeError("gauge weight rho vanishes near x = " + format_double(grid_.node(j)));
            const double drho = 2.0 * (e_.du[j] * std::conj(e_.u[j])).real() - 2.0 * (e_.du[r] * std::conj(e_.u[r])).real();
            const double d2rho = 2.0 * (std::norm(e_.du[j]) + qx * std::norm(e_.u[j])) + 2.0 * (std::norm(e_.du[r]) + qr * std::norm(e_.u[r]));
            Mat2 M, dM, d2M;
            M << std::conj(e1_.u[j]), std::conj(e1_.u[r]), std::conj(e2_.u[j]), std::conj(e2_.u[r]);
            dM << std::conj(e1_.du[j]), -std::conj(e1_.du[r]), std::conj(e2_.du[j]), -std::conj(e2_.du[r]);
            d2M = M * Eigen::Vector2cd(qx, qr).asDiagonal();
            rho_[j] = rho;
            T_[j] = M / rho;
            dT_[j] = dM / rho - M * (drho / (rho * rho));
            d2T_[j] = d2M / rho - dM * (2.0 * drho / (rho * rho)) - M * (d2rho / (rho * rho)) + M * (2.0 * drho * drho / (rho * rho * rho));
            // Gram matrix G_ik = <e_k, e_i>_x from the boundary forms.
            const std::array<const Jet*, 2> basis{&e1_, &e2_};
            for (int i = 0; i < 2; ++i)
                for (int k = 0; k < 2; ++k)
                    G_[j](i, k) = (basis[k]->u[j] * std::conj(basis[i]->u[j]) + basis[k]->u[r] * std::conj(basis[i]->u[r])) / rho;
            det_[j] = std::abs(T_[j].determinant());
            admissible_[j] = j + guard_nodes <= m && det_[j] > det_floor;
        }
    }

    const Grid& grid() const { return grid_; }
    const GaugeSpec& spec() const { return spec_; }
    std::size_t half_size() const { return rho_.size(); }
    double node(std::size_t j) const { return grid_.node(j); }

    const Jet& e() const { return e_; }
    const Jet& e1() const { return e1_; }
    const Jet& e2() const { return e2_; }
    double rho(std::size_t j) const { return rho_[j]; }
    const Mat2& T(std::size_t j) const { return T_[j]; }
    const Mat2& dT(std::size_t j) const { return dT_[j]; }
    const Mat2& d2T(std::size_t j) const { return d2T_[j]; }
    const Mat2& G(std::size_t j) const { return G_[j]; }
    double det_T(std::size_t j) const { return det_[j]; }
    bool admissible(std::size_t j) const { return admissible_[j]; }

    /// Last admissible half-grid index.
    std::size_t last_admissible() const
    {
        for (std::size_t j = half_size(); j-- > 0;)
            if (admissible_[j]) return j;
        throw GaugeError("no admissible node on the half-grid");
    }

    /// Test hook: replaces the coordinate map T by c(x) T with
    /// c = 1 + eps (1 + x/l), derivative fields included. G and rho keep the
    /// uncorrupted gauge, as do model coefficients assembled beforehand.
    void inject_fault(double eps)
    {
        fault_ = eps;
        const double l = grid_.length();
        for (std::size_t j = 0; j < T_.size(); ++j) {
            const double c = 1.0 + eps * (1.0 + grid_.node(j) / l), dc = eps / l;
            d2T_[j] = c * d2T_[j] + 2.0 * dc * dT_[j];
            dT_[j] = c * dT_[j] + dc * T_[j];
            T_[j] *= c;
        }
    }
    bool faulted() const { return fault_ != 0.0; }

private:
    void check_wronskian() const
    {
        const std::size_t n = grid_.size() - 1;
        for (std::size_t j : {std::size_t{0}, n / 3, n}) {
            const cplx w = e1_.u[j] * e2_.du[j] - e1_.du[j] * e2_.u[j];
            if (std::abs(w) < 1e-10) throw GaugeError("gauge basis e1, e2 is linearly dependent");
        }
    }

    Grid grid_;
    GaugeSpec spec_;
    Jet e_, e1_, e2_;
    std::vector<double> rho_, det_;
    std::vector<Mat2> T_, dT_, d2T_, G_;
    std::vector<bool> admissible_;
    double fault_ = 0.0;
};

inline GaugeData default_gauge(const KernelBasis& kb, const Potential& q) { return GaugeData(kb, q); }

/// Pointwise algebraic identities of the gauge on admissible nodes.
struct GaugeResiduals {
    double gram = 0.0;     // max |G - rho T T*|
    double inverse = 0.0;  // max |T* G^-1 T - I / rho|
    double min_rho = 0.0;
};

inline GaugeResiduals gauge_residuals(const GaugeData& gd)
{
    GaugeResiduals r;
    r.min_rho = gd.rho(0);
    for (std::size_t j = 0; j < gd.half_size(); ++j) {
        r.min_rho = std::min(r.min_rho, gd.rho(j));
        if (gd.det_T(j) <= GaugeData::det_floor) continue;
        const Mat2& T = gd.T(j);
        r.gram = std::max(r.gram, (gd.G(j) - gd.rho(j) * T * T.adjoint()).cwiseAbs().maxCoeff());
        const Mat2 lhs = T.adjoint() * gd.G(j).inverse() * T;
        r.inverse = std::max(r.inverse, (lhs - Mat2::Identity() / gd.rho(j)).cwiseAbs().maxCoeff());
    }
    return r;
}

/// Coordinate values u_hat(x) = T(x) (u(x), u(l - x)) on the half-grid, with
/// optional first and second x-derivatives.
struct HatField {
    std::vector<double> x;
    std::vector<Vec2> value;
    std::vector<Vec2> d1;
    std::vector<Vec2> d2;

    std::size_t size() const { return value.size(); }
    bool has_derivatives() const { return d1.size() == value.size() && d2.size() == value.size(); }
};

/// Boundary form <u, v>_x with off-node values by cubic interpolation.
inline cplx boundary_form(const GridFunction& u, const GridFunction& v, double x, const GaugeData& gd)
{
    const double l = gd.grid().length(), y = l - x;
    const double rho = std::norm(interpolate_cubic(gd.e().u, x)) + std::norm(interpolate_cubic(gd.e().u, y));
    return (interpolate_cubic(u, x) * std::conj(interpolate_cubic(v, x)) + interpolate_cubic(u, y) * std::conj(interpolate_cubic(v, y))) /
           rho;
}

namespace detail {

inline cplx node_form(const GridFunction& u, const GridFunction& v, std::size_t j, const GaugeData& gd)
{
    const std::size_t r = gd.grid().mirror(j);
    return (u[j] * std::conj(v[j]) + u[r] * std::conj(v[r])) / gd.rho(j);
}

}  // namespace detail

inline HatField hat_value(const GridFunction& u, const GaugeData& gd)
{
    if (!(u.grid == gd.grid())) throw ContractError("hat_value: function and gauge live on different grids");
    HatField h;
    h.x.resize(gd.half_size());
    h.value.resize(gd.half_size());
    for (std::size_t j = 0; j < gd.half_size(); ++j) {
        const std::size_t r = gd.grid().mirror(j);
        h.x[j] = gd.node(j);
        h.value[j] = gd.T(j) * Vec2(u[j], u[r]);
        if (gd.faulted()) continue;
        const Vec2 forms(detail::node_form(u, gd.e1().u, j, gd), detail::node_form(u, gd.e2().u, j, gd));
        const double scale = std::max({1.0, std::abs(u[j]), std::abs(u[r])}) * std::max(1.0, gd.T(j).cwiseAbs().maxCoeff());
        if ((forms - h.value[j]).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw InternalError("hat value disagrees with the boundary forms at x = " + format_double(h.x[j]));
    }
    return h;
}

/// Hat value with derivatives by the product rule on T(x) (u(x), u(l - x)).
inline HatField hat_value(const Jet& u, const GaugeData& gd)
{
    HatField h = hat_value(u.u, gd);
    h.d1.resize(h.size());
    h.d2.resize(h.size());
    for (std::size_t j = 0; j < h.size(); ++j) {
        const std::size_t r = gd.grid().mirror(j);
        const Vec2 U(u.u[j], u.u[r]), dU(u.du[j], -u.du[r]), d2U(u.d2u[j], u.d2u[r]);
        h.d1[j] = gd.dT(j) * U + gd.T(j) * dU;
        h.d2[j] = gd.d2T(j) * U + 2.0 * gd.dT(j) * dU + gd.T(j) * d2U;
    }
    return h;
}

/// Hat value of a sampled function with derivatives by high-order differencing.
inline HatField hat_value_differenced(const GridFunction& u, const GaugeData& gd, int accuracy = 6)
{
    const double h = u.grid.spacing();
    Jet jet{u, GridFunction(u.grid, differentiate<cplx>(u.values, h, 1, accuracy)),
            GridFunction(u.grid, differentiate<cplx>(u.values, h, 2, accuracy))};
    return hat_value(jet, gd);
}

struct ModelInner {
    cplx value;
    double guard_band_bound = 0.0;  // |integrand| bound times the guard-band width
};

/// Integral of (G^-1 u_hat, v_hat) rho over (0, l/2). Guard-band nodes take
/// values by cubic extrapolation from the last four admissible nodes.
inline ModelInner model_inner(const HatField& uh, const HatField& vh, const GaugeData& gd)
{
    if (uh.size() != gd.half_size() || vh.size() != gd.half_size()) throw ContractError("model_inner: fields not on the gauge half-grid");
    const std::size_t m = gd.half_size() - 1;
    const std::size_t last = gd.last_admissible();
    if (last < 4) throw GaugeError("too few admissible nodes for model_inner");
    std::vector<cplx> f(m + 1);
    for (std::size_t j = 0; j <= last; ++j) {
        if (!gd.admissible(j)) throw GaugeError("G is numerically singular at x = " + format_double(gd.node(j)));
        const Vec2 w = gd.G(j).partialPivLu().solve(uh.value[j]);
        f[j] = vh.value[j].dot(w) * gd.rho(j);  // sum_i w_i conj(v_i)
    }
    double peak = 0.0;
    for (std::size_t j = last - 3; j <= last; ++j) peak = std::max(peak, std::abs(f[j]));
    for (std::size_t j = last + 1; j <= m; ++j) {
        // Lagrange through nodes last-3..last evaluated at j.
        cplx acc{};
        for (std::size_t a = 0; a < 4; ++a) {
            const double xa = static_cast<double>(last - 3 + a);
            double w = 1.0;
            for (std::size_t b = 0; b < 4; ++b)
                if (b != a) w *= (static_cast<double>(j) - static_cast<double>(last - 3 + b)) / (xa - static_cast<double>(last - 3 + b));
            acc += w * f[last - 3 + a];
        }
        f[j] = acc;
    }
    const double h = gd.grid().spacing();
    return {simpson<cplx>(f, h, 0, m), peak * h * static_cast<double>(m - last)};
}

/// |(u, v) - model_inner(u_hat, v_hat)|.
inline double parseval_residual(const GridFunction& u, const GridFunction& v, const GaugeData& gd)
{
    return std::abs(inner(u, v) - model_inner(hat_value(u, gd), hat_value(v, gd), gd).value);
}

struct FormLimitReport {
    std::vector<double> radii;
    std::vector<double> ratios;
    double limit = 0.0;     // quadratic least-squares extrapolation to t = 0
    double expected = 0.0;  // (|u(x)|^2 + |u(l-x)|^2) / rho(x)
    double deviation = 0.0;
    bool pass = false;
};

/// Ratios ||P_{w(t)} u||^2 / ||P_{w(t)} e||^2 over shrinking atom neighborhoods.
inline FormLimitReport form_limit_check(const GridFunction& u, double x, const GaugeData& gd, const std::vector<double>& radii,
                                        double tol = 1e-4)
{
    if (radii.size() < 3) throw ContractError("form_limit_check needs at least three radii");
    const double l = gd.grid().length();
    GridFunction u2(u.grid), e2(u.grid);
    for (std::size_t j = 0; j < u.size(); ++j) {
        u2[j] = std::norm(u[j]);
        e2[j] = std::norm(gd.e().u[j]);
    }
    FormLimitReport r;
    r.radii = radii;
    for (double t : radii) {
        const auto set = atom_snapshot(make_atom(x, l), t, l);
        double num = 0.0, den = 0.0;
        for (const auto& iv : set.intervals()) {
            num += integrate_interval(u2, iv.a, iv.b).real();
            den += integrate_interval(e2, iv.a, iv.b).real();
        }
        r.ratios.push_back(num / den);
    }
    Eigen::MatrixXd A(radii.size(), 3);
    Eigen::VectorXd b(radii.size());
    for (std::size_t i = 0; i < radii.size(); ++i) {
        A(static_cast<Eigen::Index>(i), 0) = 1.0;
        A(static_cast<Eigen::Index>(i), 1) = radii[i];
        A(static_cast<Eigen::Index>(i), 2) = radii[i] * radii[i];
        b(static_cast<Eigen::Index>(i)) = r.ratios[i];
    }
    r.limit = A.colPivHouseholderQr().solve(b)(0);
    r.expected = boundary_form(u, u, x, gd).real();
    r.deviation = std::abs(r.limit - r.expected);
    const double first = std::abs(r.ratios.front() - r.expected), last = std::abs(r.ratios.back() - r.expected);
    r.pass = r.deviation <= tol && last <= first + tol;
    return r;
}

}  // namespace wavemodel
