#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracle.hpp"

using namespace fsi;

namespace {

PhysicalParams odd_params()
{
    PhysicalParams p;
    p.rho_f = 1.7;
    p.mu = 0.6;
    p.rho_s = 1.1;
    p.eps_s = 0.8;
    p.C0 = 1.3;
    p.C1 = 0.4;
    p.beta = 0.5;
    return p;
}

Discretization make(Element el, std::size_t nx, std::size_t ny, double lx, double ly, bool periodic,
                    const PhysicalParams& prm = {})
{
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(nx, ny, lx, ly, periodic));
    return build_discretization(mesh, el, {}, periodic ? StructureEnds::Periodic : StructureEnds::Natural, prm);
}

Vector combined(const Discretization& d, const Vector& u, const Vector& p)
{
    Vector x(static_cast<Eigen::Index>(d.combined()));
    x << u, p;
    return x;
}

}  // namespace

class DenseOracle : public ::testing::TestWithParam<Element> {};

TEST_P(DenseOracle, TwoTrianglesEveryForm)
{
    for (double tau : {0.5, 0.05}) {
        const auto c = oracle::compare_all(GetParam(), odd_params(), tau);
        EXPECT_LE(c.worst, 1e-12) << c.where << " tau=" << tau;
    }
}

TEST_P(DenseOracle, LargerMeshes)
{
    const PhysicalParams prm = odd_params();
    for (bool periodic : {false, true}) {
        const Discretization d = make(GetParam(), periodic ? 3 : 3, 2, 1.5, 1.0, periodic, prm);
        const auto D = oracle::assemble(d, prm.mu, prm.C0, prm.C1);
        EXPECT_LE(oracle::max_abs_diff(d.mass.to_dense(), D.mass), 1e-12);
        EXPECT_LE(oracle::max_abs_diff(d.af.to_dense(), D.af), 1e-11);
        EXPECT_LE(oracle::max_abs_diff(d.b.to_dense(), D.b), 1e-12);
        EXPECT_LE(oracle::max_abs_diff(d.as.to_dense(), D.as), 1e-11);
        EXPECT_LE(oracle::max_abs_diff(d.couplings.k_wsigma.to_dense(), D.k_wsigma), 1e-11);
        EXPECT_LE(oracle::max_abs_diff(d.couplings.k_sigsig.to_dense(), D.k_sigsig), 1e-10);
    }
}

INSTANTIATE_TEST_SUITE_P(Elements, DenseOracle, ::testing::Values(Element::TaylorHood, Element::Mini),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Forms, FluidBilinearFormKillsRigidMotions)
{
    for (Element el : {Element::TaylorHood, Element::Mini}) {
        const Discretization d = make(el, 4, 4, 1.0, 1.0, false);
        const Vector tx = interpolate(d.velocity, [](const Point&) { return Vec2{1.0, 0.0}; });
        const Vector rot = interpolate(d.velocity, [](const Point& p) { return Vec2{-p.y, p.x}; });
        EXPECT_LE((d.af * tx).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((d.af * rot).lpNorm<Eigen::Infinity>(), 1e-12);
    }
}

TEST(Forms, DivergencePairing)
{
    const Discretization d = make(Element::TaylorHood, 4, 4, 1.0, 1.0, false);
    const Vector shear = interpolate(d.velocity, [](const Point& p) { return Vec2{p.y, 0.0}; });
    EXPECT_LE((d.b * shear).lpNorm<Eigen::Infinity>(), 1e-13);
    const Vector stretch = interpolate(d.velocity, [](const Point& p) { return Vec2{p.x, 0.0}; });
    const Vector one = Vector::Ones(static_cast<Eigen::Index>(d.np()));
    EXPECT_NEAR(one.dot(d.b * stretch), 1.0, 1e-13);
}

TEST(Forms, StructureFormOnConstantsAndSine)
{
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(8, 4, 2.0, 1.0, false));
    const FeSpace v = build_space(mesh, ElementKind::P2, 2);
    const TraceSpace s = build_trace_space(v);
    Vector c(static_cast<Eigen::Index>(s.dof_count()));
    for (std::size_t n = 0; n < s.node_count(); ++n) {
        c[static_cast<Eigen::Index>(s.dof(n, 0))] = 0.3;
        c[static_cast<Eigen::Index>(s.dof(n, 1))] = -1.2;
    }
    EXPECT_LE((assemble_as(s, 1.0, 0.0) * c).lpNorm<Eigen::Infinity>(), 1e-13);
    // |Sigma| = 4 (bottom and top)
    EXPECT_NEAR(c.dot(assemble_as(s, 0.0, 1.0) * c), 4.0 * (0.09 + 1.44), 1e-12);
    EXPECT_THROW(assemble_as(s, 0.0, 0.0), std::invalid_argument);
    EXPECT_THROW(assemble_as(s, -1.0, 1.0), std::invalid_argument);

    // sin(pi x) on the top edge only: a_s = pi^2 + 1 with C0 = C1 = 1
    double prev = INFINITY;
    for (std::size_t nx : {8, 16, 32}) {
        auto m = std::make_shared<const Mesh>(build_rect_mesh(nx, 2, 2.0, 1.0, false));
        const TraceSpace t = build_trace_space(build_space(m, ElementKind::P2, 2));
        Vector w = Vector::Zero(static_cast<Eigen::Index>(t.dof_count()));
        for (std::size_t n = 0; n < t.node_count(); ++n) {
            if (t.node_coords[n].y == 1.0) w[static_cast<Eigen::Index>(t.dof(n, 0))] = std::sin(std::numbers::pi * t.node_coords[n].x);
        }
        const double err = std::abs(w.dot(assemble_as(t, 1.0, 1.0) * w) - (std::numbers::pi * std::numbers::pi + 1.0));
        EXPECT_LT(err, prev);
        prev = err;
    }
    EXPECT_LT(prev, 1e-4);
}

TEST(Forms, TractionOfPressureAndShear)
{
    const Discretization d = make(Element::TaylorHood, 3, 3, 1.0, 1.0, false);
    const Vector zero_u = Vector::Zero(static_cast<Eigen::Index>(d.nv()));
    const Vector one_p = Vector::Ones(static_cast<Eigen::Index>(d.np()));
    const Vector shear = interpolate(d.velocity, [](const Point& p) { return Vec2{p.y, 0.0}; });
    const Vector zero_p = Vector::Zero(static_cast<Eigen::Index>(d.np()));
    for (std::size_t k = 0; k < d.traction.points.size(); ++k) {
        const Point n = d.traction.points[k].normal;
        const Vec2 t = d.traction.evaluate(k, zero_u, one_p);
        EXPECT_NEAR(t[0], -n.x, 1e-13);
        EXPECT_NEAR(t[1], -n.y, 1e-13);
        const Vec2 s = d.traction.evaluate(k, shear, zero_p);
        EXPECT_NEAR(s[0], n.y, 1e-12);  // (1,0) on top, (-1,0) on bottom
        EXPECT_NEAR(s[1], 0.0, 1e-12);
    }
}

TEST(Forms, TractionCouplingsAreConsistent)
{
    const Discretization d = make(Element::TaylorHood, 4, 3, 1.0, 1.0, false);
    const Vector x = combined(d, Vector::Zero(static_cast<Eigen::Index>(d.nv())), Vector::Ones(static_cast<Eigen::Index>(d.np())));
    EXPECT_NEAR(x.dot(d.couplings.k_sigsig * x), 2.0, 1e-12);

    std::mt19937 rng(7);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 100; ++trial) {
        Vector y(x.size());
        for (auto& v : y) v = g(rng);
        EXPECT_GE(y.dot(d.couplings.k_sigsig * y), -1e-12);
        // quadratic form equals the point-value norm
        const Vector u = y.head(static_cast<Eigen::Index>(d.nv()));
        const Vector p = y.tail(static_cast<Eigen::Index>(d.np()));
        const double direct = d.traction.norm_squared(d.traction.evaluate_all(u, p));
        EXPECT_NEAR(y.dot(d.couplings.k_sigsig * y), direct, 1e-10 * (1.0 + direct));
    }
}

TEST(Forms, BoundaryPressureLoad)
{
    const Discretization d = make(Element::TaylorHood, 3, 3, 1.0, 1.0, false);
    EXPECT_EQ(assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaLeft, 0.0).lpNorm<Eigen::Infinity>(), 0.0);
    const Vector ex = interpolate(d.velocity, [](const Point&) { return Vec2{1.0, 0.0}; });
    EXPECT_NEAR(assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaLeft, 1.0).dot(ex), 1.0, 1e-13);
    EXPECT_NEAR(assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaRight, 1.0).dot(ex), -1.0, 1e-13);
    const Vector a = assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaLeft, 2.0);
    const Vector b = assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaLeft, -3.0);
    const Vector ab = assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaLeft, -1.0);
    EXPECT_LE((a + b - ab).lpNorm<Eigen::Infinity>(), 1e-14);
    EXPECT_THROW(assemble_boundary_pressure_load(d.velocity, BoundaryTag::SigmaTop, 1.0), std::invalid_argument);
}

TEST(Forms, KornWithMassIsDefinite)
{
    for (Element el : {Element::TaylorHood, Element::Mini}) {
        const Discretization d = make(el, 2, 2, 1.0, 1.0, false);
        const Eigen::MatrixXd a = (d.af + d.mass).to_dense();
        EXPECT_LE((a - a.transpose()).cwiseAbs().maxCoeff(), 1e-13);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
        EXPECT_GT(eig.eigenvalues().minCoeff(), 1e-6);
    }
}

TEST(Forms, TraceLoadMatchesPairing)
{
    const Discretization d = make(Element::Mini, 3, 2, 1.0, 1.0, false);
    std::vector<double> g(2 * d.traction.points.size());
    for (std::size_t k = 0; k < d.traction.points.size(); ++k) {
        g[2 * k] = d.traction.points[k].x.x;
        g[2 * k + 1] = 1.0;
    }
    // (g, w)_Sigma for w = (1, 0) is int x over both edges = 1
    const Vector load = trace_load_from_points(d.traction, d.trace, g);
    Vector w = Vector::Zero(static_cast<Eigen::Index>(d.ns()));
    for (std::size_t n = 0; n < d.trace.node_count(); ++n) w[static_cast<Eigen::Index>(d.trace.dof(n, 0))] = 1.0;
    EXPECT_NEAR(load.dot(w), 1.0, 1e-13);
}
