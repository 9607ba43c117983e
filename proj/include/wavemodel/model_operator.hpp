#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "boundary_control.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "sl_solver.hpp"
#include "wave_model.hpp"

namespace wavemodel {

/// Coefficients of -u'' + P u' + Q u on the admissible half-grid.
struct ModelCoefficients {
    std::vector<double> x;
    std::vector<bool> admissible;
    std::vector<Mat2> P, Q, dP, S;
    std::vector<Eigen::Vector2d> qdiag;  // (q(x), q(l - x))
    double p_form_gap = 0.0;             // max |2 T' T^-1 + 2 T (T^-1)'| relative to |P|
    double half_length = 0.0;

    std::size_t size() const { return x.size(); }

    void require(std::size_t j) const
    {
        if (!admissible.at(j)) throw DomainError("node x = " + format_double(x[j]) + " lies in the midpoint guard band");
    }
    const Mat2& P_at(std::size_t j) const { return require(j), P[j]; }
    const Mat2& Q_at(std::size_t j) const { return require(j), Q[j]; }
};

inline ModelCoefficients assemble_coefficients(const GaugeData& gd, const Potential& q)
{
    ModelCoefficients mc;
    const std::size_t m = gd.half_size();
    mc.half_length = 0.5 * gd.grid().length();
    mc.x.resize(m);
    mc.admissible.resize(m);
    mc.P.assign(m, Mat2::Zero());
    mc.Q.assign(m, Mat2::Zero());
    mc.dP.assign(m, Mat2::Zero());
    mc.S.assign(m, Mat2::Zero());
    mc.qdiag.assign(m, Eigen::Vector2d::Zero());
    for (std::size_t j = 0; j < m; ++j) {
        mc.x[j] = gd.node(j);
        mc.admissible[j] = gd.admissible(j);
        mc.qdiag[j] = {q.samples[j], q.samples[gd.grid().mirror(j)]};
        if (!mc.admissible[j]) continue;
        const Mat2& T = gd.T(j);
        const Mat2& dT = gd.dT(j);
        const Mat2 W = T.inverse();
        const Mat2 dW = -W * dT * W;
        const Mat2 Qd = mc.qdiag[j].cast<cplx>().asDiagonal();
        const Mat2 dTW = dT * W;
        mc.P[j] = 2.0 * dTW;
        const Mat2 P_alt = -2.0 * T * dW;
        mc.p_form_gap = std::max(mc.p_form_gap, (mc.P[j] - P_alt).cwiseAbs().maxCoeff() / (1.0 + mc.P[j].cwiseAbs().maxCoeff()));
        // T (T^-1)'' = -T'' W + 2 T' W T' W once T W = I is used; the
        // unreduced product loses digits near the midpoint.
        const Mat2 d2TW = gd.d2T(j) * W;
        mc.Q[j] = T * Qd * W + d2TW - 2.0 * dTW * dTW;
        mc.dP[j] = 2.0 * d2TW - 2.0 * dTW * dTW;
        mc.S[j] = mc.Q[j] + 0.25 * mc.P[j] * mc.P[j] - 0.5 * mc.dP[j];
    }
    return mc;
}

/// -u_hat'' + P u_hat' + Q u_hat on admissible nodes; zero elsewhere.
inline HatField apply_model(const HatField& uh, const ModelCoefficients& mc)
{
    if (!uh.has_derivatives()) throw ContractError("apply_model needs first and second derivative fields");
    if (uh.size() != mc.size()) throw ContractError("apply_model: field and coefficients differ in size");
    HatField out;
    out.x = uh.x;
    out.value.assign(uh.size(), Vec2::Zero());
    for (std::size_t j = 0; j < uh.size(); ++j)
        if (mc.admissible[j]) out.value[j] = -uh.d2[j] + mc.P[j] * uh.d1[j] + mc.Q[j] * uh.value[j];
    return out;
}

/// max over admissible nodes of |a - b|.
inline double hat_sup_distance(const HatField& a, const HatField& b, const ModelCoefficients& mc, double* scale = nullptr)
{
    double d = 0.0, s = 0.0;
    for (std::size_t j = 0; j < mc.size(); ++j) {
        if (!mc.admissible[j]) continue;
        d = std::max(d, (a.value[j] - b.value[j]).cwiseAbs().maxCoeff());
        s = std::max(s, b.value[j].cwiseAbs().maxCoeff());
    }
    if (scale) *scale = s;
    return d;
}

/// -u'' + q u from a jet.
inline GridFunction apply_sturm_liouville(const Jet& u, const Potential& q)
{
    GridFunction out(u.u.grid);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = -u.d2u[j] + q.samples[j] * u.u[j];
    return out;
}

/// sup |apply_model(u_hat) - (-u'' + q u)_hat| over admissible nodes.
inline double intertwine_residual(const Jet& u, const GaugeData& gd, const ModelCoefficients& mc, const Potential& q)
{
    const auto lhs = apply_model(hat_value(u, gd), mc);
    const auto rhs = hat_value(apply_sturm_liouville(u, q), gd);
    return hat_sup_distance(lhs, rhs, mc);
}

/// Graph point (W u^h(t), -W u^{h''}(t)) of the model adjoint; the first
/// component carries derivatives obtained by differencing the wave field.
struct GraphSample {
    HatField value;
    HatField image;
};

inline GraphSample graph_sample(const ControlSignal& c, double t, const EigenSystem& es, const KernelBasis& kb, const GaugeData& gd)
{
    if (!(t > 0.0)) throw ContractError("graph_sample needs t > 0");
    const auto h = control_to_kernel(c, kb);
    const auto proj = kernel_projections(es, kb);
    const auto u = smooth_wave(h, t, es, kb, proj).u;
    auto image = hat_value(smooth_wave(h.differentiated(2), t, es, kb, proj).u, gd);
    for (auto& v : image.value) v = -v;
    return {hat_value_differenced(u, gd), std::move(image)};
}

/// Eigenvalue branches of S = Q + P^2/4 - P'/2 = T diag(q(x), q(l-x)) T^-1.
struct RecoveryReport {
    std::vector<double> x;
    std::vector<double> branch1, branch2;
    std::vector<bool> collision;
    double max_imag = 0.0;
    bool any_collision = false;
    std::string reflection_note =
        "branches determine the unordered pair {q(x), q(l - x)}; q is recovered only up to the reflection x -> l - x";

    /// max over nodes of the distance between the unordered pairs.
    double max_error(const std::vector<double>& q_x, const std::vector<double>& q_mirror) const
    {
        double e = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double straight = std::max(std::abs(branch1[i] - q_x[i]), std::abs(branch2[i] - q_mirror[i]));
            const double swapped = std::max(std::abs(branch1[i] - q_mirror[i]), std::abs(branch2[i] - q_x[i]));
            e = std::max(e, std::min(straight, swapped));
        }
        return e;
    }
};

struct RecoveryOptions {
    std::size_t edge_nodes = 3;     // nodes skipped at x = 0; the guard band covers x = l/2
    double collision_tol = 1e-6;    // relative eigenvalue gap
};

namespace detail {

inline std::pair<cplx, cplx> eigen_pair(const Mat2& S)
{
    const cplx tr = S.trace(), det = S.determinant();
    const cplx disc = std::sqrt(0.25 * tr * tr - det);
    return {0.5 * tr + disc, 0.5 * tr - disc};
}

inline RecoveryReport track_branches(const std::vector<double>& xs, const std::vector<Mat2>& S, const RecoveryOptions& opt)
{
    RecoveryReport r;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto [a, b] = eigen_pair(S[i]);
        r.max_imag = std::max({r.max_imag, std::abs(a.imag()), std::abs(b.imag())});
        double x1 = a.real(), x2 = b.real();
        const std::size_t k = r.x.size();
        if (k == 0) {
            if (x1 < x2) std::swap(x1, x2);
        } else {
            // Linear prediction from the previous two nodes.
            const double p1 = k >= 2 ? 2.0 * r.branch1[k - 1] - r.branch1[k - 2] : r.branch1[k - 1];
            const double p2 = k >= 2 ? 2.0 * r.branch2[k - 1] - r.branch2[k - 2] : r.branch2[k - 1];
            if (std::abs(x1 - p2) + std::abs(x2 - p1) < std::abs(x1 - p1) + std::abs(x2 - p2)) std::swap(x1, x2);
        }
        const bool hit = std::abs(x1 - x2) < opt.collision_tol * (1.0 + std::abs(x1) + std::abs(x2));
        r.x.push_back(xs[i]);
        r.branch1.push_back(x1);
        r.branch2.push_back(x2);
        r.collision.push_back(hit);
        r.any_collision = r.any_collision || hit;
    }
    return r;
}

}  // namespace detail

/// Recovery from the analytic derivative field P'.
inline RecoveryReport recover_potential(const ModelCoefficients& mc, const RecoveryOptions& opt = {})
{
    std::vector<double> xs;
    std::vector<Mat2> S;
    for (std::size_t j = opt.edge_nodes; j < mc.size(); ++j) {
        if (!mc.admissible[j]) continue;
        xs.push_back(mc.x[j]);
        S.push_back(mc.S[j]);
    }
    return detail::track_branches(xs, S, opt);
}

/// Recovery when only sampled P and Q are known. P has a simple pole at
/// l/2, so F = (l/2 - x) P is differenced (order-6 stencils) and
/// P' = F'/d + F/d^2 with d = l/2 - x.
inline RecoveryReport recover_potential_observed(const ModelCoefficients& mc, const RecoveryOptions& opt = {})
{
    std::size_t last = 0;
    while (last + 1 < mc.size() && mc.admissible[last + 1]) ++last;
    if (!mc.admissible[0] || last < 8) throw DomainError("observer recovery needs a contiguous admissible range from x = 0");
    const std::size_t count = last + 1;
    const double h = mc.x[1] - mc.x[0];
    std::vector<Mat2> dP(count);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            std::vector<cplx> F(count);
            for (std::size_t j = 0; j < count; ++j) F[j] = (mc.half_length - mc.x[j]) * mc.P[j](a, b);
            const auto dF = differentiate<cplx>(F, h, 1, 6);
            for (std::size_t j = 0; j < count; ++j) {
                const double d = mc.half_length - mc.x[j];
                dP[j](a, b) = dF[j] / d + F[j] / (d * d);
            }
        }
    std::vector<double> xs;
    std::vector<Mat2> S;
    for (std::size_t j = opt.edge_nodes; j < count; ++j) {
        xs.push_back(mc.x[j]);
        S.push_back(mc.Q[j] + 0.25 * mc.P[j] * mc.P[j] - 0.5 * dP[j]);
    }
    return detail::track_branches(xs, S, opt);
}

/// Trace and determinant of S against q(x) + q(l-x) and q(x) q(l-x).
struct SimilarityResiduals {
    double trace = 0.0;
    double det = 0.0;
    double direct = 0.0;  // max |S - T Q T^-1|
};

inline SimilarityResiduals similarity_residuals(const ModelCoefficients& mc, const GaugeData& gd)
{
    SimilarityResiduals r;
    for (std::size_t j = 0; j < mc.size(); ++j) {
        if (!mc.admissible[j]) continue;
        const auto& qd = mc.qdiag[j];
        r.trace = std::max(r.trace, std::abs(mc.S[j].trace() - (qd(0) + qd(1))));
        r.det = std::max(r.det, std::abs(mc.S[j].determinant() - qd(0) * qd(1)));
        const Mat2 direct = gd.T(j) * qd.cast<cplx>().asDiagonal() * gd.T(j).inverse();
        r.direct = std::max(r.direct, (mc.S[j] - direct).cwiseAbs().maxCoeff());
    }
    return r;
}

}  // namespace wavemodel
