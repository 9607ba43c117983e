#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "wavemodel/config.hpp"
#include "wavemodel/io.hpp"
#include "wavemodel/verification.hpp"

using namespace wavemodel;

namespace {

RunConfig parse(const std::string& text)
{
    std::istringstream in(text);
    return parse_config(in);
}

}  // namespace

TEST(Config, DefaultsAndOverrides)
{
    const auto c = parse("[problem]\nl = 2\npotential = 2 + cos(1, 3)\n[numerics]\ngrid_n = 400\nmodes = 50\nseed = 9\n"
                         "[controls]\nfl = bump(0.3, 0.2, -1)\n[tolerances]\nparseval = 1e-5\n");
    EXPECT_EQ(c.l, 2.0);
    EXPECT_EQ(c.grid_n, 400);
    EXPECT_EQ(c.modes, 50);
    EXPECT_EQ(c.seed, 9u);
    EXPECT_EQ(c.cfl, 0.5);
    EXPECT_EQ(c.tol.parseval, 1e-5);
    EXPECT_EQ(c.tol.graph, 2e-3);
    EXPECT_EQ(c.effective_horizon(), 2.0);
    EXPECT_NEAR(c.potential_expr()(0.0), 3.0, 1e-15);
    EXPECT_NO_THROW(c.validate());
    EXPECT_NEAR(c.control().fl(0.3), -1.0, 1e-15);
}

TEST(Config, GaugeCoefficients)
{
    const auto c = parse("[gauge]\ne = 1 -1\ne1 = 1 -1\ne2 = 0.5 0.25 -1 2\n");
    EXPECT_EQ(c.gauge.e.c0, cplx(1.0, 0.0));
    EXPECT_EQ(c.gauge.e.cl, cplx(-1.0, 0.0));
    EXPECT_EQ(c.gauge.e2.c0, cplx(0.5, 0.25));
    EXPECT_EQ(c.gauge.e2.cl, cplx(-1.0, 2.0));
    EXPECT_THROW(parse("[gauge]\ne = 1 2 3\n"), ConfigError);
    EXPECT_THROW(parse("[gauge]\ne = 1 x\n"), ConfigError);
}

TEST(Config, RejectsBadInput)
{
    EXPECT_THROW(parse("[problem]\nl = one\n"), ConfigError);
    EXPECT_THROW(parse("[problem]\nlength = 1\n"), ConfigError);
    EXPECT_THROW(parse("[extras]\na = 1\n"), ConfigError);
    EXPECT_THROW(parse("[tolerances]\nunknown = 1\n"), ConfigError);
    EXPECT_THROW(parse("[problem]\npotential = 1\npotential_file = q.txt\n"), ConfigError);
    EXPECT_THROW(parse("[problem]\nl = -1\n").validate(), ConfigError);
    EXPECT_THROW(parse("[numerics]\ngrid_n = 101\n").validate(), ConfigError);
    EXPECT_THROW(parse("[tolerances]\ngram = 1e-16\n").validate(), ConfigError);
    EXPECT_THROW(parse("[problem]\npotential = exp(1)\n").validate(), ConfigError);
    EXPECT_THROW(parse("[controls]\nf0 = cos(1, 2)\n").validate(), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/run.ini"), ConfigError);
}

TEST(Config, SampledPotentialFileIsRelativeToConfig)
{
    const auto dir = std::filesystem::temp_directory_path() / "wavemodel_config_test";
    std::filesystem::create_directories(dir);
    {
        std::ofstream q(dir / "q.txt");
        q << "# q = 1 + x on [0, 1]\n";
        for (int j = 0; j <= 100; ++j) q << 1.0 + j / 100.0 << '\n';
        std::ofstream ini(dir / "run.ini");
        ini << "[problem]\nl = 1\npotential_file = q.txt\n";
    }
    const auto c = load_config((dir / "run.ini").string());
    EXPECT_NEAR(c.potential_expr()(0.505), 1.505, 1e-12);
    std::filesystem::remove_all(dir);
}

TEST(Io, CoefficientCsvRoundTrip)
{
    const Potential q(build_grid(1.0, 200), Expr::cosine(1, 3) + 2.0);
    const GaugeData gd(kernel_basis(q), q);
    const auto mc = assemble_coefficients(gd, q);
    std::stringstream s;
    write_coefficients_csv(s, mc);
    const auto back = read_coefficients_csv(s, 0.5);
    std::size_t rows = 0;
    for (std::size_t j = 0; j < mc.size(); ++j) {
        if (!mc.admissible[j]) continue;
        EXPECT_EQ(back.x[rows], mc.x[j]);
        EXPECT_EQ(back.P[rows], mc.P[j]);
        EXPECT_EQ(back.Q[rows], mc.Q[j]);
        ++rows;
    }
    EXPECT_EQ(rows, back.size());
    EXPECT_LT(back.x.back(), 0.5 - 2 * q.grid.spacing());
    std::stringstream bad("x,P\n0,1\n");
    EXPECT_THROW(read_coefficients_csv(bad, 0.5), ConfigError);
}

TEST(Io, WavefieldCsvLayout)
{
    const Grid g = build_grid(1.0, 8);
    WaveField f;
    f.times = {0.0, 0.5};
    f.snapshots = {GridFunction(g), GridFunction::sample(g, [](double x) { return cplx(x, -0.0); })};
    std::ostringstream os;
    write_wavefield_csv(os, f);
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, 9), "t,x,re,im");
    EXPECT_NE(text.find("0.5,0.25,0.25,0\n"), std::string::npos);
    EXPECT_EQ(text.find("-0"), std::string::npos);
}

TEST(Io, SymmetricSetJsonRoundTrip)
{
    const auto s = neighborhood(SymmetricSet(1.0, {}, {0.2}), 0.05);
    const auto j = symmetric_set_json(s);
    EXPECT_EQ(j.dump(), R"({"l":1.0,"intervals":[[0.15000000000000002,0.25],[0.75,0.85]],"points":[]})");
    EXPECT_TRUE(symmetric_set_from_json(j) == s);
    EXPECT_THROW(symmetric_set_from_json(ojson::parse(R"({"l":1.0,"intervals":[[0.1,0.2]],"points":[]})")), ConfigError);
}

TEST(Report, JsonIsDeterministicAndRoundTrips)
{
    VerifyOptions o;
    o.grid_n = 400;
    o.modes = 40;
    o.only = {6, 9, 11};
    const auto a = run_verification(o).to_json();
    const auto b = run_verification(o).to_json();
    EXPECT_EQ(a.dump(2), b.dump(2));
    EXPECT_EQ(ojson::parse(a.dump(2)).dump(2), a.dump(2));
    ASSERT_EQ(a["checks"].size(), 3u);
    EXPECT_EQ(a["checks"][0]["name"], "gauge_identities");
    EXPECT_FALSE(a["environment"].contains("runtime_seconds"));
    EXPECT_TRUE(run_verification(o).to_json(true)["environment"].contains("runtime_seconds"));
}

TEST(Report, EveryCheckAppearsOnce)
{
    EXPECT_EQ(check_names().size(), 12u);
    VerifyOptions o;
    o.grid_n = 200;
    o.modes = 30;
    o.only = {9};
    o.fault = 0.01;
    const auto r = run_verification(o);
    ASSERT_EQ(r.checks.size(), 1u);
    EXPECT_TRUE(r.checks[0].pass());
}

TEST(Report, FailedCheckIsRecordedNotThrown)
{
    VerifyOptions o;
    o.grid_n = 200;
    o.modes = 20;
    o.potential = Expr(-15.0);  // not positive definite
    o.only = {4, 7};
    const auto r = run_verification(o);
    ASSERT_EQ(r.checks.size(), 2u);
    for (const auto& c : r.checks) EXPECT_FALSE(c.pass());
    EXPECT_TRUE(r.to_json()["checks"][0]["measured"].is_null());
}

TEST(Report, FaultInjectionFailsParsevalAndIntertwining)
{
    VerifyOptions o;
    o.grid_n = 1000;
    o.modes = 20;
    o.only = {7, 8};
    EXPECT_TRUE(run_verification(o).all_pass());
    o.fault = 0.01;
    const auto r = run_verification(o);
    ASSERT_EQ(r.checks.size(), 2u);
    EXPECT_FALSE(r.checks[0].pass());
    EXPECT_FALSE(r.checks[1].pass());
}
