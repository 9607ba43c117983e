#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "wavemodel/model_operator.hpp"

using namespace wavemodel;
using std::numbers::pi;

namespace {

const Expr kCosine = Expr::cosine(1, 3) + 2.0;

struct Pipeline {
    Potential q;
    KernelBasis kb;
    GaugeData gd;
    ModelCoefficients mc;

    Pipeline(int n, const Expr& pot, const GaugeSpec& spec = {})
        : q(build_grid(1.0, n), pot), kb(kernel_basis(q)), gd(kb, q, spec), mc(assemble_coefficients(gd, q))
    {
    }

    std::vector<double> q_at(const RecoveryReport& r, bool mirror) const
    {
        std::vector<double> v;
        for (double x : r.x) v.push_back(q(mirror ? 1.0 - x : x));
        return v;
    }
};

// e1 = 1, e2 = x, e = 1 on the free unit interval.
GaugeSpec affine_gauge() { return {{1.0, -1.0}, {1.0, -1.0}, {1.0, 0.0}}; }

Jet eigen_jet(const EigenSystem& es, const Potential& q, std::size_t n)
{
    Jet j{es.modes[n], es.slopes[n], GridFunction(q.grid)};
    for (std::size_t k = 0; k < q.grid.size(); ++k) j.d2u[k] = (q.samples[k] - es.eigenvalues[n]) * es.modes[n][k];
    return j;
}

}  // namespace

TEST(Coefficients, AffineGaugeClosedForms)
{
    const Pipeline p(1000, 0.0, affine_gauge());
    const std::size_t j = 250;  // x = 0.25
    ASSERT_NEAR(p.mc.x[j], 0.25, 1e-15);
    Mat2 P, Q;
    P << 0, 0, 4, -8;
    Q << 0, 0, 16, -32;
    EXPECT_LT((p.mc.P_at(j) - P).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((p.mc.Q_at(j) - Q).cwiseAbs().maxCoeff(), 1e-8);
    for (std::size_t k = 0; k < p.mc.size(); k += 31) {
        if (!p.mc.admissible[k]) continue;
        const double x = p.mc.x[k], c = 2 / (1 - 2 * x);
        Mat2 shape;
        shape << 0, 0, 1, -2;
        EXPECT_LT((p.mc.P[k] - c * shape).cwiseAbs().maxCoeff(), 1e-9 * c * c);
        EXPECT_LT((p.mc.Q[k] - c * c * shape).cwiseAbs().maxCoeff(), 1e-9 * c * c * c);
        EXPECT_LT(p.mc.S[k].cwiseAbs().maxCoeff(), 1e-8 * c * c * c);
    }
    EXPECT_LE(p.mc.p_form_gap, 1e-10);
}

TEST(Coefficients, GuardBandRejected)
{
    const Pipeline p(200, kCosine);
    EXPECT_THROW(p.mc.P_at(100), DomainError);
    EXPECT_THROW(p.mc.Q_at(98), DomainError);
    EXPECT_NO_THROW(p.mc.P_at(97));
}

TEST(Coefficients, SimilarityInvariants)
{
    for (const Expr& pot : {Expr(0.0), Expr(1.0), kCosine}) {
        const Pipeline p(2000, pot);
        const auto r = similarity_residuals(p.mc, p.gd);
        EXPECT_LE(r.trace, 1e-8);
        EXPECT_LE(r.det, 1e-8);
        EXPECT_LE(r.direct, 1e-8);
        EXPECT_LE(p.mc.p_form_gap, 1e-10);
    }
}

TEST(ApplyModel, AffineGaugeEigenfunction)
{
    const Pipeline p(1000, 0.0, affine_gauge());
    const auto u = sample_jet(Expr::sine(1, pi), p.q.grid);
    const auto uh = hat_value(u, p.gd);
    const auto lu = apply_model(uh, p.mc);
    for (std::size_t j = 0; j < uh.size(); ++j) {
        if (!p.mc.admissible[j]) continue;
        EXPECT_LT((lu.value[j] - pi * pi * uh.value[j]).norm(), 1e-6) << p.mc.x[j];
    }
}

TEST(ApplyModel, KernelElementIsAnnihilated)
{
    const Pipeline p(2000, kCosine);
    const auto lu = apply_model(hat_value(p.gd.e1(), p.gd), p.mc);
    for (std::size_t j = 0; j < lu.size(); ++j) EXPECT_LT(lu.value[j].norm(), 1e-8) << j;
}

TEST(ApplyModel, NeedsDerivatives)
{
    const Pipeline p(200, kCosine);
    EXPECT_THROW(apply_model(hat_value(p.gd.e1().u, p.gd), p.mc), ContractError);
}

TEST(Intertwining, TestBattery)
{
    const Pipeline p(2000, kCosine);
    const auto es = dirichlet_eigensystem(p.q, 1);
    EXPECT_LE(intertwine_residual(eigen_jet(es, p.q, 0), p.gd, p.mc, p.q), 1e-6);
    EXPECT_LE(intertwine_residual(p.gd.e(), p.gd, p.mc, p.q), 1e-8);
    EXPECT_LE(intertwine_residual(kernel_jet(p.kb, p.q, {0.4, cplx(0, -2)}), p.gd, p.mc, p.q), 1e-8);
    const std::vector<Expr> battery{Expr::poly({0, 0, 1, -2, 1}),  // x^2 (1 - x)^2
                                    Expr::sine(1, 2.0, 0.3), Expr::cosine(0.5, 7.0) + Expr::poly({1, 1}), Expr::bump(0.3, 0.4, 1.0),
                                    Expr::poly({0.2, -1, 3, 0, -0.5})};
    for (std::size_t i = 0; i < battery.size(); ++i)
        EXPECT_LE(intertwine_residual(sample_jet(battery[i], p.q.grid), p.gd, p.mc, p.q), 1e-6) << i;
}

TEST(Intertwining, FaultInjectionIsDetected)
{
    const Pipeline p(1000, kCosine);
    GaugeData bad = p.gd;
    bad.inject_fault(0.01);
    EXPECT_GT(intertwine_residual(sample_jet(Expr::poly({0, 0, 1, -2, 1}), p.q.grid), bad, p.mc, p.q), 1e-4);
}

TEST(Recovery, CosinePotential)
{
    const Pipeline p(2000, kCosine);
    const auto r = recover_potential(p.mc);
    EXPECT_FALSE(r.any_collision);
    EXPECT_LE(r.max_error(p.q_at(r, false), p.q_at(r, true)), 1e-6);
    EXPECT_NEAR(r.x.front(), 3 * p.q.grid.spacing(), 1e-15);
    EXPECT_LE(r.x.back(), 0.5 - 3 * p.q.grid.spacing() + 1e-15);
    // x = 0.2 is node 400; the recorded list starts at node 3.
    const std::size_t i = 397;
    ASSERT_NEAR(r.x[i], 0.2, 1e-15);
    const double hi = std::max(r.branch1[i], r.branch2[i]), lo = std::min(r.branch1[i], r.branch2[i]);
    EXPECT_NEAR(hi, 2 + std::cos(0.6), 1e-6);
    EXPECT_NEAR(lo, 2 + std::cos(2.4), 1e-6);
    EXPECT_NEAR(2 + std::cos(0.6), 2.825336, 1e-6);
    EXPECT_NEAR(2 + std::cos(2.4), 1.262606, 1e-6);
    // Continuous branches: no jumps larger than the local variation of q.
    for (std::size_t k = 1; k < r.x.size(); ++k) EXPECT_LT(std::abs(r.branch1[k] - r.branch1[k - 1]), 0.01);
}

TEST(Recovery, ObserverPath)
{
    const Pipeline p(2000, kCosine);
    const auto r = recover_potential_observed(p.mc);
    EXPECT_LE(r.max_error(p.q_at(r, false), p.q_at(r, true)), 1e-3);
}

TEST(Recovery, ConstantPotentialCollides)
{
    const Pipeline p(1000, 3.0);
    const auto r = recover_potential(p.mc);
    EXPECT_TRUE(r.any_collision);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        EXPECT_TRUE(r.collision[i]);
        EXPECT_NEAR(r.branch1[i], 3.0, 1e-8);
        EXPECT_NEAR(r.branch2[i], 3.0, 1e-8);
    }
}

TEST(Recovery, FreeAffineGaugeIsZero)
{
    const Pipeline p(1000, 0.0, affine_gauge());
    const auto r = recover_potential(p.mc);
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        const double scale = 1.0 / std::pow(0.5 - r.x[i], 3);
        EXPECT_LT(std::abs(r.branch1[i]) + std::abs(r.branch2[i]), 1e-12 * scale);
    }
}

TEST(Recovery, GaugeCovariance)
{
    const Pipeline a(2000, kCosine);
    const Pipeline b(2000, kCosine, {{cplx(0.5, 1.0), 1.0}, {1.0, 2.0}, {cplx(0, 1), -1.0}});
    const auto ra = recover_potential(a.mc), rb = recover_potential(b.mc);
    ASSERT_EQ(ra.x.size(), rb.x.size());
    EXPECT_LE(ra.max_error(rb.branch1, rb.branch2), 1e-8);
}

TEST(Recovery, ReflectionSwapsBranches)
{
    const Pipeline a(2000, kCosine);
    const Pipeline b(2000, kCosine.reflected(1.0));
    const auto ra = recover_potential(a.mc), rb = recover_potential(b.mc);
    ASSERT_EQ(ra.x.size(), rb.x.size());
    EXPECT_LE(ra.max_error(rb.branch1, rb.branch2), 1e-8);
    // Tracking starts from the larger eigenvalue, which is q(x) for q and q(l - x) for its reflection.
    EXPECT_NEAR(ra.branch1.front(), a.q(ra.x.front()), 1e-8);
    EXPECT_NEAR(rb.branch2.front(), b.q(rb.x.front()), 1e-8);
}

class GraphSampling : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        p = new Pipeline(2000, kCosine);
        es = new EigenSystem(dirichlet_eigensystem(p->q, 300));
    }
    static void TearDownTestSuite()
    {
        delete es;
        delete p;
    }
    static Pipeline* p;
    static EigenSystem* es;
};

Pipeline* GraphSampling::p = nullptr;
EigenSystem* GraphSampling::es = nullptr;

TEST_F(GraphSampling, ZeroControl)
{
    const auto g = graph_sample(ControlSignal::zero(), 0.3, *es, p->kb, p->gd);
    for (std::size_t j = 0; j < g.value.size(); ++j) {
        EXPECT_EQ(g.value.value[j].norm(), 0.0);
        EXPECT_EQ(g.image.value[j].norm(), 0.0);
    }
}

TEST_F(GraphSampling, Linearity)
{
    const ControlSignal c1(Expr::bump(0.1, 0.15, 1.0), Expr(0.0)), c2(Expr(0.0), Expr::bump(0.12, 0.2, -0.6));
    const auto g1 = graph_sample(c1, 0.3, *es, p->kb, p->gd), g2 = graph_sample(c2, 0.3, *es, p->kb, p->gd);
    const auto g = graph_sample(c1 + c2, 0.3, *es, p->kb, p->gd);
    for (std::size_t j = 0; j < g.value.size(); ++j) {
        EXPECT_LT((g.value.value[j] - g1.value.value[j] - g2.value.value[j]).norm(), 1e-8);
        EXPECT_LT((g.image.value[j] - g1.image.value[j] - g2.image.value[j]).norm(), 1e-8);
    }
}

TEST_F(GraphSampling, ModelMapsFirstComponentToSecond)
{
    for (const ControlSignal& c : {ControlSignal(Expr::bump(0.12, 0.2, 1.0), Expr(0.0)),
                                   ControlSignal(Expr::bump(0.1, 0.16, 0.5), Expr::bump(0.15, 0.2, -0.8))}) {
        const auto g = graph_sample(c, 0.35, *es, p->kb, p->gd);
        double scale = 0.0;
        const double d = hat_sup_distance(apply_model(g.value, p->mc), g.image, p->mc, &scale);
        EXPECT_LE(d, 2e-3) << "relative " << d / scale;
    }
}
