#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "oracle.hpp"

using namespace fsi;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFd = 1e-4;

PhysicalParams odd_params()
{
    PhysicalParams p;
    p.rho_f = 1.3;
    p.mu = 0.7;
    p.rho_s = 0.9;
    p.eps_s = 1.4;
    p.C0 = 0.6;
    p.C1 = 2.1;
    return p;
}

}  // namespace

TEST(Manufactured, InitialValuesAndKinematics)
{
    const ExactSolution ex;
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ux(0.0, 2.0), uy(0.0, 1.0), ut(0.0, 3.0);
    for (int k = 0; k < 50; ++k) {
        const Point x{ux(rng), uy(rng)};
        EXPECT_EQ(ex.u(0.0, x)[0], 0.0);
        EXPECT_EQ(ex.u(0.0, x)[1], 0.0);
        EXPECT_EQ(ex.p(0.0, x), 0.0);
        EXPECT_NEAR(ex.eta(0.0, x)[1], -4.0 * std::cos(2.0 * kPi * x.x), 1e-14);
        // divergence free
        const Mat2 g = ex.grad_u(ut(rng), x);
        EXPECT_NEAR(g[0][0] + g[1][1], 0.0, 1e-12);
        // u = d_t eta on both interface lines
        const double t = ut(rng);
        for (double y : {0.0, 1.0}) {
            const Point xs{x.x, y};
            const double dt_eta = (ex.eta(t + kFd, xs)[1] - ex.eta(t - kFd, xs)[1]) / (2.0 * kFd);
            EXPECT_NEAR(ex.u(t, xs)[0], 0.0, 1e-12);
            EXPECT_NEAR(ex.u(t, xs)[1], dt_eta, 1e-6);
            EXPECT_NEAR(ex.s(t, xs)[1], dt_eta, 1e-6);
        }
    }
}

TEST(Manufactured, SourcesMatchFiniteDifferences)
{
    EXPECT_LT(oracle::max_fd_source_error(ExactSolution(odd_params()), 100, 2), 1e-6);
    EXPECT_LT(oracle::max_fd_source_error(ExactSolution(), 100, 3), 1e-6);
}

TEST(Manufactured, FluidSourceAtTimeZero)
{
    const ExactSolution ex(odd_params());
    const Point x{0.3, 0.8};
    const Vec2 f = ex.fluid_source(0.0, x);
    const Vec2 u = ExactSolution::U(x);
    EXPECT_NEAR(f[0], 1.3 * u[0], 1e-12);
    EXPECT_NEAR(f[1], 1.3 * u[1], 1e-12);
}

TEST(Manufactured, StructureNormOfInitialDisplacement)
{
    const PhysicalParams prm = odd_params();
    const ExactSolution ex(prm);
    const Discretization d = manufactured_discretization(8, Element::TaylorHood, BoundaryMode::Periodic, prm);
    const Vector zero = Vector::Zero(static_cast<Eigen::Index>(d.ns()));
    const double norm = trace_energy_error(d.trace, zero, prm.C0, prm.C1, [&](const Point& x, BoundaryTag) {
        return std::pair<Vec2, Vec2>{ex.eta(0.0, x), ex.dx_eta(0.0, x)};
    });
    // two lines of length 2: int 16 cos^2 = 16, int 64 pi^2 sin^2 = 64 pi^2
    EXPECT_NEAR(norm * norm, 2.0 * (prm.C0 * 64.0 * kPi * kPi + prm.C1 * 16.0), 1e-9);
}

TEST(Manufactured, FieldsAreLinearInScale)
{
    const ExactSolution ex;
    const FlowFields f = ex.fields(0.9).scaled(-2.0);
    const Point x{1.1, 0.35};
    EXPECT_DOUBLE_EQ(f.u(x)[0], -2.0 * ex.u(0.9, x)[0]);
    EXPECT_DOUBLE_EQ(f.p(x), -2.0 * ex.p(0.9, x));
    EXPECT_DOUBLE_EQ(f.eta(x, BoundaryTag::SigmaTop)[1], -2.0 * ex.eta(0.9, x)[1]);
}

TEST(Manufactured, InterpolationRates)
{
    std::vector<double> h, eu, ep;
    // p has wavelength 1/2: M = 4 samples it only at its peaks
    for (std::size_t M : {8, 16, 32}) {
        const Discretization d = manufactured_discretization(M, Element::TaylorHood, BoundaryMode::Periodic, {});
        const Vector u = interpolate(d.velocity, ExactSolution::U);
        const Vector p = interpolate(d.pressure, ExactSolution::Pshape);
        h.push_back(d.mesh->h);
        eu.push_back(l2_error(d.velocity, u, ExactSolution::U));
        ep.push_back(l2_error(d.pressure, p, ExactSolution::Pshape));
    }
    EXPECT_NEAR(log_log_slope(h, eu), 3.0, 0.25);
    EXPECT_NEAR(log_log_slope(h, ep), 2.0, 0.25);
}

TEST(Manufactured, TauRules)
{
    EXPECT_EQ(TauRule::parse("h3").tau(0.5), 0.125);
    EXPECT_EQ(TauRule::parse("h2").tau(0.5), 0.25);
    EXPECT_EQ(TauRule::parse("fixed:0.01").tau(0.5), 0.01);
    EXPECT_EQ(TauRule::parse("0.02").value, 0.02);
    for (const char* s : {"h3", "h2", "fixed:0.001"}) EXPECT_EQ(TauRule::parse(TauRule::parse(s).str()), TauRule::parse(s));
    for (const char* bad : {"", "h4", "fixed:", "-1", "fixed:0", "0.1x", "nan"}) EXPECT_THROW(TauRule::parse(bad), std::invalid_argument) << bad;
}

TEST(Manufactured, StepCountAndSlopes)
{
    EXPECT_EQ(step_count(1.0, 0.1), 10u);
    EXPECT_EQ(step_count(1.0, 0.3), 4u);
    EXPECT_EQ(step_count(0.1, 1.0 / 512.0), 52u);
    EXPECT_THROW(step_count(1.0, 0.0), std::invalid_argument);
    EXPECT_NEAR(observed_order(8.0, 1.0, 0.2, 0.1), 3.0, 1e-14);
    EXPECT_NEAR(log_log_slope({1.0, 0.5, 0.25}, {3.0, 0.75, 0.1875}), 2.0, 1e-13);
    EXPECT_THROW(log_log_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST(Manufactured, ShortRunAndTable)
{
    ConvergenceConfig cfg;
    cfg.levels = {2, 4};
    cfg.T = 0.02;
    cfg.tau = TauRule::parse("fixed:0.01");
    const ConvergenceTable t = convergence_study(cfg);
    ASSERT_EQ(t.levels.size(), 2u);
    EXPECT_EQ(t.levels[0].steps, 2u);
    EXPECT_EQ(t.pair_orders.size(), 1u);
    for (const auto& l : t.levels) {
        for (double e : as_array(l.final_errors)) {
            EXPECT_TRUE(std::isfinite(e));
            EXPECT_GT(e, 0.0);
        }
    }
    ConvergenceConfig one = cfg;
    one.levels = {2};
    EXPECT_THROW(convergence_study(one).last_orders(), std::logic_error);
    EXPECT_THROW(run_level(cfg, 0), std::invalid_argument);
}
