#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fsi/mms.hpp"

using namespace fsi;

namespace {

constexpr double kPi = std::numbers::pi;

Discretization periodic(std::size_t M, Element el = Element::TaylorHood)
{
    return manufactured_discretization(M, el, BoundaryMode::Periodic, {});
}

Discretization open_box(std::size_t m, Element el = Element::TaylorHood)
{
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(m, m, 1.0, 1.0, false));
    return build_discretization(mesh, el, {}, StructureEnds::Natural, {});
}

// u = (y^2, x^2), p = x + y: in the Taylor-Hood space, divergence free, no net flux through Sigma
FlowFields discrete_fields()
{
    FlowFields f = FlowFields::zero();
    f.u = [](const Point& x) { return Vec2{x.y * x.y, x.x * x.x}; };
    f.grad_u = [](const Point& x) {
        Mat2 g{};
        g[0][1] = 2.0 * x.y;
        g[1][0] = 2.0 * x.x;
        return g;
    };
    f.p = [](const Point& x) { return x.x + x.y; };
    return f;
}

double inf(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

TEST(Projections, DiscreteNormalIsExactOnFlatSigma)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    const DiscreteNormal& n = proj.normal();
    EXPECT_NEAR(n.norm * n.norm, 4.0, 1e-12);  // |Sigma| = 2 + 2
    for (std::size_t k = 0; k < d.trace.node_count(); ++k) {
        const double y = d.trace.node_coords[k].y;
        EXPECT_NEAR(n.coeffs[static_cast<Eigen::Index>(d.trace.dof(k, 0))], 0.0, 1e-12);
        EXPECT_NEAR(n.coeffs[static_cast<Eigen::Index>(d.trace.dof(k, 1))], y == 0.0 ? -1.0 : 1.0, 1e-12);
    }
    EXPECT_NEAR(proj.lambda(n.coeffs), 1.0, 1e-12);
}

TEST(Projections, TildePIsAProjection)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    std::mt19937 rng(1);
    std::normal_distribution<double> g;
    Vector w(static_cast<Eigen::Index>(d.ns()));
    for (auto& v : w) v = g(rng);
    const Vector once = proj.tilde_P(w);
    EXPECT_LE(inf(proj.tilde_P(once) - once), 1e-13);
    EXPECT_NEAR(proj.lambda(once), 0.0, 1e-13);
}

TEST(Projections, StructureRitzReproducesQuadratics)
{
    const Discretization d = open_box(3);
    const Projector proj(d, {});
    auto g = [](const Point& x, BoundaryTag) { return Vec2{1.5 - x.x * x.x, 0.25 * x.x}; };
    auto dg = [](const Point& x, BoundaryTag) { return Vec2{-2.0 * x.x, 0.25}; };
    const Vector r = proj.ritz_RhS(g, dg);
    for (std::size_t k = 0; k < d.trace.node_count(); ++k) {
        const Vec2 v = g(d.trace.node_coords[k], BoundaryTag::SigmaTop);
        EXPECT_NEAR(r[static_cast<Eigen::Index>(d.trace.dof(k, 0))], v[0], 1e-12);
        EXPECT_NEAR(r[static_cast<Eigen::Index>(d.trace.dof(k, 1))], v[1], 1e-12);
    }
}

TEST(Projections, StructureRitzConvergesAtOrderThree)
{
    std::vector<double> h, e;
    for (std::size_t M : {8, 16, 32}) {
        const Discretization d = periodic(M);
        const Projector proj(d, {});
        auto g = [](const Point& x, BoundaryTag) { return Vec2{std::sin(2.0 * kPi * x.x), std::cos(kPi * x.x)}; };
        auto dg = [](const Point& x, BoundaryTag) { return Vec2{2.0 * kPi * std::cos(2.0 * kPi * x.x), -kPi * std::sin(kPi * x.x)}; };
        const Vector r = proj.ritz_RhS(g, dg);
        h.push_back(1.0 / static_cast<double>(M));
        e.push_back(trace_l2_error(d.trace, r, [&](const Point& x, BoundaryTag t) { return std::pair<Vec2, Vec2>{g(x, t), dg(x, t)}; }));
    }
    EXPECT_NEAR(log_log_slope(h, e), 3.0, 0.3);
}

TEST(Projections, DirichletRitzReproducesDiscreteFields)
{
    const Discretization d = open_box(3);
    const Projector proj(d, {});
    const FlowFields f = discrete_fields();
    const auto [u, p] = proj.ritz_RhD(f);
    EXPECT_LE(inf(u - interpolate(d.velocity, f.u)), 1e-10);
    EXPECT_LE(inf(p - interpolate(d.pressure, f.p)), 1e-10);
}

TEST(Projections, DirichletRitzHasNoNetFlux)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    const ExactSolution ex;
    const auto [u, p] = proj.ritz_RhD(ex.fields(0.7));
    const Vector one = Vector::Ones(static_cast<Eigen::Index>(d.np()));
    EXPECT_LE(std::abs(one.dot(d.b * u)), 1e-11);
    EXPECT_LE(std::abs(proj.lambda(d.injection * u)), 1e-12);
}

TEST(Projections, ZeroAndLinearity)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    const auto [u0, p0] = proj.ritz_RhD(FlowFields::zero());
    EXPECT_EQ(inf(u0), 0.0);
    EXPECT_EQ(inf(p0), 0.0);
    EXPECT_EQ(inf(proj.initial_Rsh_eta(FlowFields::zero())), 0.0);

    const ExactSolution ex;
    const FlowFields f = ex.fields(0.4);
    const auto [u1, p1] = proj.ritz_RhD(f);
    const auto [u2, p2] = proj.ritz_RhD(f.scaled(-2.5));
    EXPECT_LE(inf(u2 + 2.5 * u1), 1e-10 * inf(u1));
    EXPECT_LE(inf(p2 + 2.5 * p1), 1e-10 * inf(p1));
    const Vector e1 = proj.initial_Rsh_eta(f);
    EXPECT_LE(inf(proj.initial_Rsh_eta(f.scaled(3.0)) - 3.0 * e1), 1e-10 * inf(e1));
}

TEST(Projections, ResidualPairingIgnoresTheExtension)
{
    // interior rows of the residual vanish, so any extension of the trace gives the same R_sh
    for (BoundaryMode mode : {BoundaryMode::Periodic, BoundaryMode::Dirichlet}) {
        const Discretization d = manufactured_discretization(4, Element::TaylorHood, mode, {});
        const Projector proj(d, {});
        const ExactSolution ex;
        std::vector<char> on_sigma(d.nv(), 0);
        for (std::size_t k : d.trace.velocity_dofs()) on_sigma[k] = 1;
        std::mt19937 rng(9);
        std::normal_distribution<double> g;
        Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.ns()), static_cast<Eigen::Index>(d.nv()));
        for (Eigen::Index i = 0; i < G.rows(); ++i) {
            for (std::size_t j = 0; j < d.nv(); ++j) {
                if (!on_sigma[j]) G(i, static_cast<Eigen::Index>(j)) = g(rng);
            }
        }
        const Vector base = proj.initial_Rsh_eta(ex.fields(0.0));
        const Vector other = proj.initial_Rsh_eta_with_extension(ex.fields(0.0), [&](const Vector& r) {
            return Vector(d.injection * r + G * r);
        });
        EXPECT_LE(inf(other - base), 1e-11 * (1.0 + inf(base))) << to_string(mode);
    }
}

TEST(Projections, InitialRitzVelocityHasNoNetFlux)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    const ExactSolution ex;
    const auto init = proj.initial_Rh_eta(ex.fields(0.0), ex.dt_fields(0.0));
    EXPECT_LE(std::abs(proj.lambda(d.injection * init.u)), 1e-12);
    // u(0) = 0, so its Dirichlet Ritz projection is small
    EXPECT_LT(l2_error(d.velocity, init.u, [](const Point&) { return Vec2{0.0, 0.0}; }), 0.1);
}

TEST(Projections, NeumannToDirichletIsSymmetricAndPositive)
{
    for (Element el : {Element::TaylorHood, Element::Mini}) {
        const Discretization d = periodic(4, el);
        const NeumannStokes ns(d, {});
        const NtdReport r = ntd_symmetry_check(d, ns, 10, 42);
        EXPECT_LE(r.max_asymmetry, 1e-12);
        EXPECT_GT(r.min_quadratic, 0.0);

        // (zeta, N zeta)_Sigma = a_f(u, u) + (u, u) for u = S^v(P^T M zeta, 0)
        std::mt19937 rng(4);
        std::normal_distribution<double> g;
        Vector z(static_cast<Eigen::Index>(d.ns()));
        for (auto& v : z) v = g(rng);
        const Vector u = ns.solve(d.injection_t * (d.mass_sigma * z), Vector::Zero(static_cast<Eigen::Index>(d.np()))).first;
        const double lhs = d.mass_sigma.form(z, ntd_apply(d, ns, z));
        const double rhs = d.af.form(u, u) + d.mass.form(u, u);
        EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(rhs));
    }
}

TEST(Projections, RitzEvolutionZeroAndConstraint)
{
    const Discretization d = periodic(4);
    const Projector proj(d, {});
    const NeumannStokes ns(d, {});
    const auto zero = ritz_evolve(proj, ns, [](double) { return FlowFields::zero(); }, Vector::Zero(static_cast<Eigen::Index>(d.ns())), 0.5, 4);
    for (const auto& y : zero.eta) EXPECT_EQ(inf(y), 0.0);
    EXPECT_EQ(zero.times.size(), 5u);
    EXPECT_THROW(ritz_evolve(proj, ns, [](double) { return FlowFields::zero(); }, Vector::Zero(static_cast<Eigen::Index>(d.ns())), 0.5, 0),
                 std::invalid_argument);

    const ExactSolution ex;
    const auto init = proj.initial_Rh_eta(ex.fields(0.0), ex.dt_fields(0.0));
    const auto tr = ritz_evolve(proj, ns, [&](double t) { return ex.fields(t); }, init.eta, 0.2, 4);
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const Vector div = d.b * tr.u[k] - proj.ell(ex.fields(tr.times[k]));
        EXPECT_LE(inf(div), 1e-10) << "t = " << tr.times[k];
    }
    EXPECT_GT(tr.max_combined, 0.0);
}
