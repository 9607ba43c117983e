#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "wavemodel/sl_solver.hpp"

using namespace wavemodel;
using std::numbers::pi;

namespace {

Potential make(double l, int n, const Expr& q) { return Potential(build_grid(l, n), q); }

// Lowest eigenvalue of the three-point finite-difference matrix for
// -u'' + q u with Dirichlet ends, via Eigen's tridiagonal solver.
double fd_matrix_lowest(double l, int n, const Expr& q)
{
    const double h = l / n;
    Eigen::VectorXd diag(n - 1), sub(n - 2);
    for (int j = 1; j < n; ++j) diag(j - 1) = 2.0 / (h * h) + q(j * h);
    sub.setConstant(-1.0 / (h * h));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    return solver.eigenvalues()(0);
}

}  // namespace

TEST(SolveIvp, LinearSolutionFromLeft)
{
    const auto q = make(1.0, 100, 0.0);
    const auto s = solve_ivp(q, 0.0, Endpoint::Left, 0.0, 1.0);
    for (std::size_t j = 0; j < q.grid.size(); ++j) {
        EXPECT_NEAR(s.u[j].real(), q.grid.node(j), 1e-10);
        EXPECT_NEAR(s.du[j].real(), 1.0, 1e-10);
    }
}

TEST(SolveIvp, LinearSolutionFromRight)
{
    const auto q = make(1.0, 100, 0.0);
    const auto s = solve_ivp(q, 0.0, Endpoint::Right, 0.0, 1.0);
    for (std::size_t j = 0; j < q.grid.size(); ++j) EXPECT_NEAR(s.u[j].real(), q.grid.node(j) - 1.0, 1e-10);
}

TEST(SolveIvp, SineSolution)
{
    const auto q = make(1.0, 1000, 0.0);
    const auto s = solve_ivp(q, pi * pi, Endpoint::Left, 0.0, 1.0);
    for (std::size_t j = 0; j < q.grid.size(); ++j) EXPECT_NEAR(s.u[j].real(), std::sin(pi * q.grid.node(j)) / pi, 1e-8);
}

TEST(SolveIvp, FourthOrderConvergence)
{
    auto err = [](int n) {
        const auto q = make(1.0, n, 0.0);
        const auto s = solve_ivp(q, pi * pi, Endpoint::Left, 0.0, 1.0);
        double e = 0;
        for (std::size_t j = 0; j < q.grid.size(); ++j) e = std::max(e, std::abs(s.u[j].real() - std::sin(pi * q.grid.node(j)) / pi));
        return e;
    };
    EXPECT_GE(err(40) / err(80), 12.0);
}

TEST(SolveIvp, ComplexCauchyData)
{
    const auto q = make(1.0, 200, Expr::cosine(1, 3) + 2.0);
    const auto re = solve_ivp(q, 5.0, Endpoint::Left, 1.0, 0.5);
    const auto im = solve_ivp(q, 5.0, Endpoint::Left, 0.0, 2.0);
    const auto mixed = solve_ivp(q, 5.0, Endpoint::Left, cplx(1.0, 0.0), cplx(0.5, 2.0));
    for (std::size_t j = 0; j < q.grid.size(); ++j)
        EXPECT_NEAR(std::abs(mixed.u[j] - (re.u[j] + cplx(0, 1) * im.u[j])), 0.0, 1e-12);
}

TEST(KernelBasis, FreeCase)
{
    const auto kb = kernel_basis(make(1.0, 100, 0.0));
    EXPECT_NEAR(kb.phi0_at_l, 1.0, 1e-12);
    EXPECT_NEAR(kb.phil_at_0, -1.0, 1e-12);
    for (std::size_t j = 0; j < kb.grid().size(); ++j) {
        EXPECT_NEAR(kb.phi0.u[j].real(), kb.grid().node(j), 1e-12);
        EXPECT_NEAR(kb.phil.u[j].real(), kb.grid().node(j) - 1.0, 1e-12);
    }
}

TEST(KernelBasis, HyperbolicSine)
{
    const auto q = make(1.0, 1000, 1.0);
    const auto kb = kernel_basis(q);
    EXPECT_NEAR(kb.phi0_at_l, std::sinh(1.0), 1e-8);
    EXPECT_NEAR(kb.phil_at_0, std::sinh(-1.0), 1e-8);
    // Residual of -phi'' + q phi from the carried derivative states.
    const auto d2 = diff4(kb.phi0.du, 1);
    for (std::size_t j = 0; j < q.grid.size(); ++j) EXPECT_NEAR(std::abs(-d2[j] + q.samples[j] * kb.phi0.u[j]), 0.0, 1e-7);
}

TEST(KernelBasis, RejectsZeroDirichletEigenvalue)
{
    EXPECT_THROW(kernel_basis(make(1.0, 1000, -pi * pi)), AdmissibilityError);
}

TEST(Eigensystem, IntegerSquaresOnPi)
{
    const auto es = dirichlet_eigensystem(make(pi, 2000, 0.0), 3);
    EXPECT_NEAR(es.eigenvalues[0], 1.0, 1e-8);
    EXPECT_NEAR(es.eigenvalues[1], 4.0, 1e-8);
    EXPECT_NEAR(es.eigenvalues[2], 9.0, 1e-8);
}

TEST(Eigensystem, UnitInterval)
{
    const auto es = dirichlet_eigensystem(make(1.0, 2000, 0.0), 2);
    EXPECT_NEAR(es.eigenvalues[0], pi * pi, 1e-7);
    EXPECT_NEAR(es.eigenvalues[1], 4 * pi * pi, 1e-7);
}

TEST(Eigensystem, MatchesFiniteDifferenceMatrixOracle)
{
    const Expr q = Expr::cosine(1, 3) + 2.0;
    // Richardson on the O(h^2) matrix eigenvalue.
    const double coarse = fd_matrix_lowest(1.0, 2000, q);
    const double fine = fd_matrix_lowest(1.0, 4000, q);
    const double oracle = (4 * fine - coarse) / 3;
    const auto es = dirichlet_eigensystem(make(1.0, 2000, q), 1);
    EXPECT_NEAR(es.eigenvalues[0], oracle, 1e-5);
}

TEST(Eigensystem, OrthonormalAndSigned)
{
    const auto es = dirichlet_eigensystem(make(1.0, 2000, Expr::cosine(1, 3) + 2.0), 10);
    for (std::size_t m = 0; m < 10; ++m) {
        EXPECT_GT(es.slopes[m][0].real(), 0.0);
        EXPECT_NEAR(std::abs(es.modes[m][0]), 0.0, 1e-15);
        EXPECT_NEAR(std::abs(es.modes[m].values.back()), 0.0, 1e-15);
        for (std::size_t n = 0; n < 10; ++n)
            EXPECT_NEAR(std::abs(inner(es.modes[m], es.modes[n]) - (m == n ? 1.0 : 0.0)), 0.0, 1e-8) << m << "," << n;
    }
}

TEST(Eigensystem, BoundedByConstantPotentials)
{
    const auto es = dirichlet_eigensystem(make(1.0, 1000, Expr::cosine(1, 3) + 2.0), 5);
    for (int n = 1; n <= 5; ++n) {
        EXPECT_GE(es.eigenvalues[n - 1], n * n * pi * pi + 1.0);
        EXPECT_LE(es.eigenvalues[n - 1], n * n * pi * pi + 3.0);
        if (n > 1) {
            EXPECT_GT(es.eigenvalues[n - 1], es.eigenvalues[n - 2]);
        }
    }
}

TEST(Eigensystem, HighModesResolved)
{
    const auto es = dirichlet_eigensystem(make(1.0, 2000, 0.0), 300);
    for (int n : {1, 50, 150, 300}) EXPECT_NEAR(es.eigenvalues[n - 1] / (n * n * pi * pi), 1.0, 5e-6) << n;
}

TEST(LowerBound, Values)
{
    EXPECT_NEAR(check_lower_bound(dirichlet_eigensystem(make(pi, 2000, 0.0), 1)), 1.0, 1e-8);
    EXPECT_NEAR(check_lower_bound(dirichlet_eigensystem(make(1.0, 2000, 5.0), 1)), pi * pi + 5, 1e-7);
    EXPECT_THROW(check_lower_bound(dirichlet_eigensystem(make(1.0, 2000, -15.0), 1)), AdmissibilityError);
}

TEST(Propagator, ZeroTime)
{
    const auto q = make(1.0, 400, 0.0);
    const auto es = dirichlet_eigensystem(q, 20);
    const auto g = GridFunction::sample(q.grid, [](double x) { return x * (1 - x) + 0.3; });
    EXPECT_EQ(wave_propagator_apply(es, 0.0, g).value.sup_norm(), 0.0);
}

TEST(Propagator, SingleMode)
{
    const auto q = make(1.0, 1000, 0.0);
    const auto es = dirichlet_eigensystem(q, 5);
    const auto g = GridFunction::sample(q.grid, [](double x) { return std::sqrt(2.0) * std::sin(pi * x); });
    for (double t : {0.1, 0.37, 1.3}) {
        const auto r = wave_propagator_apply(es, t, g);
        for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(std::abs(r.value[j] - std::sin(pi * t) / pi * g[j]), 0.0, 1e-8);
    }
}

TEST(Propagator, FourierSineSeriesOfParabola)
{
    const auto q = make(1.0, 2000, 0.0);
    const auto es = dirichlet_eigensystem(q, 200);
    const auto g = GridFunction::sample(q.grid, [](double x) { return x * (1 - x); });
    const double t = 0.3;
    const auto r = wave_propagator_apply(es, t, g);
    // (x(1-x), sqrt2 sin n pi x) = 4 sqrt2 / (n pi)^3 for odd n, 0 for even n.
    for (std::size_t j = 0; j < g.size(); j += 50) {
        const double x = q.grid.node(j);
        double exact = 0;
        for (int n = 1; n <= 200; n += 2) {
            const double k = n * pi;
            exact += std::sin(k * t) / k * 4 * std::sqrt(2.0) / (k * k * k) * std::sqrt(2.0) * std::sin(k * x);
        }
        EXPECT_NEAR(r.value[j].real(), exact, 1e-6) << x;
    }
    EXPECT_LT(r.tail, 1e-12);
}

TEST(Propagator, LinearAndUnitSlopeAtZero)
{
    const auto q = make(1.0, 1000, Expr::cosine(1, 3) + 2.0);
    const auto es = dirichlet_eigensystem(q, 20);
    const auto g1 = GridFunction::sample(q.grid, [](double x) { return std::exp(x) * x * (1 - x); });
    const auto g2 = GridFunction::sample(q.grid, [](double x) { return std::cos(5 * x); });
    const cplx a{0.7, 0.2};
    const auto lhs = wave_propagator_apply(es, 0.4, a * g1 + g2).value;
    const auto rhs = a * wave_propagator_apply(es, 0.4, g1).value + wave_propagator_apply(es, 0.4, g2).value;
    EXPECT_LT((lhs - rhs).sup_norm(), 1e-12);

    // d/dt at t=0 equals the projection onto retained modes; fourth-order one-sided difference.
    const double dt = 1e-3;
    const auto p1 = wave_propagator_apply(es, dt, g1).value;
    const auto p2 = wave_propagator_apply(es, 2 * dt, g1).value;
    const auto slope = (1.0 / (6 * dt)) * (8.0 * p1 - p2);
    const auto proj = synthesize(es, project_modes(es, g1));
    EXPECT_LT((slope - proj).sup_norm(), 1e-6);
}
