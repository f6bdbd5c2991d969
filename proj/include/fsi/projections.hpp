#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fsi/forms.hpp"
#include "fsi/norms.hpp"
#include "fsi/scheme.hpp"

namespace fsi {

/// Analytic (u, p, eta) at one time. eta and dx_eta are evaluated on Sigma.
struct FlowFields {
    std::function<Vec2(const Point&)> u;
    std::function<Mat2(const Point&)> grad_u;
    std::function<double(const Point&)> p;
    std::function<Vec2(const Point&, BoundaryTag)> eta;
    std::function<Vec2(const Point&, BoundaryTag)> dx_eta;

    static FlowFields zero()
    {
        FlowFields f;
        f.u = [](const Point&) { return Vec2{0.0, 0.0}; };
        f.grad_u = [](const Point&) { return Mat2{}; };
        f.p = [](const Point&) { return 0.0; };
        f.eta = [](const Point&, BoundaryTag) { return Vec2{0.0, 0.0}; };
        f.dx_eta = [](const Point&, BoundaryTag) { return Vec2{0.0, 0.0}; };
        return f;
    }

    FlowFields scaled(double c) const
    {
        FlowFields f;
        f.u = [g = u, c](const Point& x) { Vec2 v = g(x); return Vec2{c * v[0], c * v[1]}; };
        f.grad_u = [g = grad_u, c](const Point& x) {
            Mat2 m = g(x);
            for (auto& r : m) for (auto& v : r) v *= c;
            return m;
        };
        f.p = [g = p, c](const Point& x) { return c * g(x); };
        f.eta = [g = eta, c](const Point& x, BoundaryTag t) { Vec2 v = g(x, t); return Vec2{c * v[0], c * v[1]}; };
        f.dx_eta = [g = dx_eta, c](const Point& x, BoundaryTag t) { Vec2 v = g(x, t); return Vec2{c * v[0], c * v[1]}; };
        return f;
    }
};

/// L2(Sigma) projection n_h of the unit normal.
struct DiscreteNormal {
    Vector coeffs;
    double norm = 0.0;
};

/// Stokes solves with (u, v) added: the Neumann-type operator S_h and its
/// Dirichlet-on-Sigma counterpart.
class Projector {
public:
    Projector(const Discretization& d, const PhysicalParams& params) : d_(&d), params_(params)
    {
        as_unit_ = d.as + d.mass_sigma;
        structure_ = std::make_shared<ConstrainedSystem>(as_unit_, d.trace.constrained_dofs(), "structure Ritz projection");
        sigma_mass_ = std::make_shared<ConstrainedSystem>(d.mass_sigma, std::vector<std::size_t>{}, "interface mass projection");
        stokes_ = d.af + d.mass;

        normal_load_ = assemble_trace_functional(d.trace, [](const Point&, BoundaryTag tag) {
            const Point n = outward_normal(tag);
            return std::pair<Vec2, Vec2>{Vec2{n.x, n.y}, Vec2{0.0, 0.0}};
        });
        normal_.coeffs = sigma_mass_->solve(normal_load_);
        normal_.norm = std::sqrt(d.mass_sigma.form(normal_.coeffs, normal_.coeffs));
        area_ = d.pressure_mass.sum();
    }

    const Discretization& discretization() const { return *d_; }
    const DiscreteNormal& normal() const { return normal_; }
    const SparseMatrix& structure_matrix() const { return as_unit_; }

    double lambda(const Vector& w) const { return w.dot(normal_load_) / (normal_.norm * normal_.norm); }

    Vector tilde_P(const Vector& w) const { return w - lambda(w) * normal_.coeffs; }

    /// (A_s + M_Sigma) R = a_s(g, .) + (g, .)_Sigma.
    template <class G, class DG>
    Vector ritz_RhS(G&& g, DG&& dg) const
    {
        return structure_->solve(structure_functional(g, dg));
    }

    template <class G, class DG>
    Vector structure_functional(G&& g, DG&& dg) const
    {
        const double c0 = params_.C0;
        const double c1 = params_.C1 + 1.0;
        return assemble_trace_functional(d_->trace, [&](const Point& x, BoundaryTag tag) {
            const Vec2 v = g(x, tag);
            const Vec2 dv = dg(x, tag);
            return std::pair<Vec2, Vec2>{Vec2{c1 * v[0], c1 * v[1]}, Vec2{c0 * dv[0], c0 * dv[1]}};
        });
    }

    Vector structure_functional(const FlowFields& f) const { return structure_functional(f.eta, f.dx_eta); }

    /// v -> a_f(u, v) - b(p, v) + (u, v) for analytic (u, p).
    Vector phi(const FlowFields& f) const
    {
        const double mu = params_.mu;
        return assemble_velocity_functional(d_->velocity, [&](const Point& x) {
            const Mat2 g = f.grad_u(x);
            const double p = f.p(x);
            Mat2 flux{};
            for (std::size_t a = 0; a < 2; ++a) {
                for (std::size_t b = 0; b < 2; ++b) flux[a][b] = mu * (g[a][b] + g[b][a]) - (a == b ? p : 0.0);
            }
            return std::pair<Vec2, Mat2>{f.u(x), flux};
        });
    }

    /// q -> b(q, u).
    Vector ell(const FlowFields& f) const
    {
        return assemble_scalar_functional(d_->pressure, [&](const Point& x) {
            const Mat2 g = f.grad_u(x);
            return g[0][0] + g[1][1];
        });
    }

    /// Discrete counterpart of phi for FE fields.
    Vector phi_h(const Vector& uh, const Vector& ph) const { return stokes_ * uh - d_->bt * ph; }

    /// Residual v -> a_f(u - u_h, v) - b(p - p_h, v) + (u - u_h, v) as a velocity vector.
    /// Rows of Dirichlet-constrained DOFs are zero: those are not test functions.
    Vector residual(const FlowFields& f, const Vector& uh, const Vector& ph) const
    {
        Vector r = phi(f) - phi_h(uh, ph);
        for (std::size_t k : d_->velocity.constrained_dofs()) r[static_cast<Eigen::Index>(k)] = 0.0;
        return r;
    }

    /// Dirichlet Stokes-Ritz: interior equations tested with X_h vanishing on
    /// Sigma, divergence tested with mean-free pressures, R u = boundary on
    /// Sigma, and the pressure mean matched to p.
    std::pair<Vector, Vector> dirichlet_stokes_ritz(const FlowFields& f, const Vector& boundary) const
    {
        const Discretization& d = *d_;
        const auto nv = static_cast<Eigen::Index>(d.nv());
        const auto np = static_cast<Eigen::Index>(d.np());
        ensure_dirichlet_system();
        Vector rhs = Vector::Zero(nv + np + 1);
        rhs.head(nv) = phi(f);
        rhs.segment(nv, np) = ell(f);
        Vector full = Vector::Zero(nv + np + 1);
        // corners on Sigma and a side belong to the side constraint
        full.head(nv) = d.injection_t * boundary;
        for (std::size_t k : d.velocity.constrained_dofs()) full[static_cast<Eigen::Index>(k)] = 0.0;
        full.head(nv) += side_values(f);
        const Vector x = dirichlet_->solve(rhs, dirichlet_->gather_fixed(full));
        Vector u = x.head(nv);
        Vector p = x.segment(nv, np);
        const double target = assemble_scalar_functional(d.pressure, f.p).sum();
        p.array() += (target - d.pressure_mass.dot(p)) / area_;
        return {std::move(u), std::move(p)};
    }

    /// R_h^D(u, p) with boundary data P~ R_h^S(u|_Sigma).
    std::pair<Vector, Vector> ritz_RhD(const FlowFields& f) const
    {
        const Vector g = ritz_RhS([&](const Point& x, BoundaryTag) { return f.u(x); },
                                  [&](const Point& x, BoundaryTag) {
                                      const Mat2 gr = f.grad_u(x);
                                      return Vec2{gr[0][0], gr[1][0]};
                                  });
        return dirichlet_stokes_ritz(f, tilde_P(g));
    }

    struct InitialRitz {
        Vector eta;     // R_h eta(0)
        Vector u;       // R_h u(0)
        Vector p;       // R_h p(0)
        Vector rsh_u;   // R_sh u(0), intermediate
    };

    /// f0 = (u, p, eta)(0); dt0 = (d_t u, d_t p)(0), with dt0.eta = u(0)|_Sigma.
    InitialRitz initial_Rh_eta(const FlowFields& f0, const FlowFields& dt0) const
    {
        InitialRitz out;
        const auto [ut, pt] = ritz_RhD(dt0);
        // a_s(u(0), w) + (u(0), w)_Sigma, then the residual on the zero-interior extension
        const Vector load = structure_functional([&](const Point& x, BoundaryTag) { return f0.u(x); },
                                                 [&](const Point& x, BoundaryTag) {
                                                     const Mat2 gr = f0.grad_u(x);
                                                     return Vec2{gr[0][0], gr[1][0]};
                                                 }) +
                            d_->injection * residual(dt0, ut, pt);
        out.rsh_u = structure_->solve(load);
        std::tie(out.u, out.p) = dirichlet_stokes_ritz(f0, tilde_P(out.rsh_u));
        out.eta = structure_->solve(structure_functional(f0) + d_->injection * residual(f0, out.u, out.p));
        return out;
    }

    /// R_sh eta(0); needs only (u, p, eta)(0).
    Vector initial_Rsh_eta(const FlowFields& f0) const
    {
        const auto [ud, pd] = ritz_RhD(f0);
        return structure_->solve(structure_functional(f0) + d_->injection * residual(f0, ud, pd));
    }

    /// Same as initial_Rsh_eta but with the residual paired against an arbitrary
    /// extension operator: `extension_t(r)` returns E^T r on the trace space.
    template <class Ext>
    Vector initial_Rsh_eta_with_extension(const FlowFields& f0, Ext&& extension_t) const
    {
        const auto [ud, pd] = ritz_RhD(f0);
        return structure_->solve(structure_functional(f0) + extension_t(residual(f0, ud, pd)));
    }

private:
    Vector side_values(const FlowFields& f) const
    {
        const Discretization& d = *d_;
        Vector out = Vector::Zero(static_cast<Eigen::Index>(d.nv()));
        if (d.velocity.dirichlet_tags.empty()) return out;
        const Vector all = interpolate(d.velocity, f.u);
        for (std::size_t k : d.velocity.constrained_dofs()) out[static_cast<Eigen::Index>(k)] = all[static_cast<Eigen::Index>(k)];
        return out;
    }

    void ensure_dirichlet_system() const
    {
        if (dirichlet_) return;
        const Discretization& d = *d_;
        const std::size_t nv = d.nv();
        const std::size_t np = d.np();
        std::vector<Triplet> t;
        append_block(stokes_, 0, 0, 1.0, t);
        append_block(d.bt, 0, nv, -1.0, t);
        append_block(d.b, nv, 0, 1.0, t);
        for (std::size_t k = 0; k < np; ++k) t.push_back({nv + k, nv + np, d.pressure_mass[static_cast<Eigen::Index>(k)]});
        t.push_back({nv + np, nv, 1.0});  // pressure pin, removed by the post-shift
        const SparseMatrix a = from_triplets(nv + np + 1, t);
        std::vector<std::size_t> fixed = d.velocity.constrained_dofs();
        for (std::size_t k : d.trace.velocity_dofs()) fixed.push_back(k);
        std::sort(fixed.begin(), fixed.end());
        fixed.erase(std::unique(fixed.begin(), fixed.end()), fixed.end());
        dirichlet_ = std::make_shared<ConstrainedSystem>(a, fixed, "Dirichlet Stokes-Ritz projection");
    }

    const Discretization* d_;
    PhysicalParams params_;
    SparseMatrix as_unit_;
    SparseMatrix stokes_;
    std::shared_ptr<ConstrainedSystem> structure_;
    std::shared_ptr<ConstrainedSystem> sigma_mass_;
    mutable std::shared_ptr<ConstrainedSystem> dirichlet_;
    Vector normal_load_;
    DiscreteNormal normal_;
    double area_ = 0.0;
};

/// (u_h, p_h) = S_h(phi, ell): a_f(u_h, v) - b(p_h, v) + (u_h, v) = phi(v), b(q, u_h) = ell(q).
class NeumannStokes {
public:
    explicit NeumannStokes(const Discretization& d, const PhysicalParams& /*params*/) : d_(&d)
    {
        const std::size_t nv = d.nv();
        std::vector<Triplet> t;
        append_block(d.af, 0, 0, 1.0, t);
        append_block(d.mass, 0, 0, 1.0, t);
        append_block(d.bt, 0, nv, -1.0, t);
        append_block(d.b, nv, 0, 1.0, t);
        matrix_ = from_triplets(d.combined(), t);
        solver_ = std::make_shared<ConstrainedSystem>(matrix_, d.velocity.constrained_dofs(), "Neumann Stokes system");
    }

    std::pair<Vector, Vector> solve(const Vector& phi, const Vector& ell, const Vector& dirichlet = Vector()) const
    {
        const Discretization& d = *d_;
        const auto nv = static_cast<Eigen::Index>(d.nv());
        const auto np = static_cast<Eigen::Index>(d.np());
        Vector rhs(nv + np);
        rhs.head(nv) = phi;
        rhs.tail(np) = ell;
        Vector full = Vector::Zero(nv + np);
        if (dirichlet.size() != 0) full.head(nv) = dirichlet;
        const Vector x = solver_->solve(rhs, solver_->gather_fixed(full));
        return {x.head(nv), x.tail(np)};
    }

    const SparseMatrix& matrix() const { return matrix_; }

private:
    const Discretization* d_;
    SparseMatrix matrix_;
    std::shared_ptr<ConstrainedSystem> solver_;
};

struct RitzTrajectory {
    std::vector<double> times;
    std::vector<Vector> eta;
    std::vector<Vector> u;
    std::vector<Vector> p;
    // per time: ||eta - R eta||_S, ||u - R u||, ||u - R u||_S, ||p - R p||
    std::vector<std::array<double, 4>> errors;
    double max_combined = 0.0;  // max_t of the sum with h ||p - R p||
};

/// Integrates d/dt R_h eta = S_h^v(phi_(u,p,eta) - phi_(R_h eta), ell_u)|_Sigma
/// with classical RK4 from eta0 over [0, T].
inline RitzTrajectory ritz_evolve(const Projector& proj, const NeumannStokes& ns, const std::function<FlowFields(double)>& fields,
                                  const Vector& eta0, double T, std::size_t steps)
{
    if (steps == 0) throw std::invalid_argument("ritz_evolve: steps must be >= 1");
    const Discretization& d = proj.discretization();
    const SparseMatrix& as_unit = proj.structure_matrix();
    const double h = d.mesh->h;

    struct Eval {
        Vector u, p, deta;
    };
    auto evaluate = [&](double t, const Vector& y) {
        const FlowFields f = fields(t);
        Vector phi = proj.phi(f) + d.injection_t * (proj.structure_functional(f) - as_unit * y);
        Vector dir;
        if (!d.velocity.dirichlet_tags.empty()) dir = interpolate(d.velocity, f.u);
        auto [u, p] = ns.solve(phi, proj.ell(f), dir);
        Eval e{std::move(u), std::move(p), Vector()};
        e.deta = d.injection * e.u;
        return e;
    };

    RitzTrajectory tr;
    auto record = [&](double t, const Vector& y) {
        const Eval e = evaluate(t, y);
        const FlowFields f = fields(t);
        std::array<double, 4> err{};
        err[0] = trace_l2_error(d.trace, y, [&](const Point& x, BoundaryTag tag) {
            return std::pair<Vec2, Vec2>{f.eta(x, tag), Vec2{0.0, 0.0}};
        });
        err[1] = l2_error(d.velocity, e.u, f.u);
        err[2] = velocity_sigma_error(d.trace, e.u, [&](const Point& x, BoundaryTag) { return f.u(x); });
        err[3] = l2_error(d.pressure, e.p, f.p);
        tr.times.push_back(t);
        tr.eta.push_back(y);
        tr.u.push_back(e.u);
        tr.p.push_back(e.p);
        tr.errors.push_back(err);
        tr.max_combined = std::max(tr.max_combined, err[0] + err[1] + err[2] + h * err[3]);
    };

    const double dt = T / static_cast<double>(steps);
    Vector y = eta0;
    record(0.0, y);
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        const Vector k1 = evaluate(t, y).deta;
        const Vector k2 = evaluate(t + 0.5 * dt, y + 0.5 * dt * k1).deta;
        const Vector k3 = evaluate(t + 0.5 * dt, y + 0.5 * dt * k2).deta;
        const Vector k4 = evaluate(t + dt, y + dt * k3).deta;
        y += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        record(static_cast<double>(n + 1) * dt, y);
    }
    return tr;
}

/// Neumann-to-Dirichlet map on trace coefficients: N zeta = (S_h^v(P^T M_Sigma zeta, 0))|_Sigma.
inline Vector ntd_apply(const Discretization& d, const NeumannStokes& ns, const Vector& zeta)
{
    const Vector phi = d.injection_t * (d.mass_sigma * zeta);
    const Vector ell = Vector::Zero(static_cast<Eigen::Index>(d.np()));
    return d.injection * ns.solve(phi, ell).first;
}

struct NtdReport {
    double max_asymmetry = 0.0;
    double min_quadratic = 0.0;  // min over tested zeta of (zeta, N zeta)_Sigma
    std::size_t pairs = 0;
};

inline NtdReport ntd_symmetry_check(const Discretization& d, const NeumannStokes& ns, std::size_t trials, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    auto random_trace = [&] {
        Vector z(static_cast<Eigen::Index>(d.ns()));
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = nd(rng);
        return z;
    };
    NtdReport r;
    r.min_quadratic = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < trials; ++k) {
        const Vector zeta = random_trace();
        const Vector phi = random_trace();
        const Vector nz = ntd_apply(d, ns, zeta);
        const Vector nphi = ntd_apply(d, ns, phi);
        const double a = zeta.dot(d.mass_sigma * nphi);
        const double b = phi.dot(d.mass_sigma * nz);
        const double qz = zeta.dot(d.mass_sigma * nz);
        const double qp = phi.dot(d.mass_sigma * nphi);
        // Cauchy-Schwarz scale; |a| itself can be arbitrarily small for a random pair
        const double scale = std::sqrt(std::max(qz, 0.0) * std::max(qp, 0.0));
        r.max_asymmetry = std::max(r.max_asymmetry, std::abs(a - b) / std::max(scale, 1e-300));
        r.min_quadratic = std::min({r.min_quadratic, qz, qp});
        ++r.pairs;
    }
    return r;
}

}  // namespace fsi
