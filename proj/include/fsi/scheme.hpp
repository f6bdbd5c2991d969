#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fsi/forms.hpp"
#include "fsi/linalg.hpp"
#include "fsi/mesh.hpp"
#include "fsi/space.hpp"

namespace fsi {

struct PhysicalParams {
    double rho_f = 1.0;
    double mu = 1.0;
    double rho_s = 1.0;
    double eps_s = 1.0;
    double C0 = 1.0;
    double C1 = 1.0;
    double beta = 0.5;

    double rse() const { return rho_s * eps_s; }

    void validate() const
    {
        if (rho_f < 0.0 || mu <= 0.0 || rho_s < 0.0 || eps_s < 0.0 || C0 < 0.0 || C1 < 0.0 || beta < 0.0) {
            throw std::invalid_argument("PhysicalParams: parameters must be nonnegative and mu > 0");
        }
        if (!(rse() > 0.0)) throw std::invalid_argument("PhysicalParams: rho_s * eps_s must be positive");
    }
};

inline double beta0(double beta)
{
    if (beta < 0.0) throw std::invalid_argument("beta0: beta must be >= 0");
    return 1.0 - (std::sqrt(4.0 + beta * beta) - beta) / 2.0;
}

enum class Element { TaylorHood, Mini };

inline const char* to_string(Element e) { return e == Element::TaylorHood ? "th" : "mini"; }

inline int element_order(Element e) { return e == Element::TaylorHood ? 2 : 1; }

/// Spaces and every time-independent matrix of one run.
struct Discretization {
    std::shared_ptr<const Mesh> mesh;
    Element element = Element::TaylorHood;
    FeSpace velocity;
    FeSpace pressure;
    TraceSpace trace;

    SparseMatrix mass;        // (u, v)
    SparseMatrix af;          // a_f
    SparseMatrix b;           // np x nv
    SparseMatrix bt;          // nv x np
    SparseMatrix mass_sigma;  // on the trace space
    SparseMatrix as;          // a_s
    SparseMatrix injection;   // P: v -> v|_Sigma
    SparseMatrix injection_t;
    TractionTraceOperator traction;
    TractionCouplings couplings;
    Vector pressure_mass;     // int psi_k

    std::size_t nv() const { return velocity.dof_count(); }
    std::size_t np() const { return pressure.dof_count(); }
    std::size_t ns() const { return trace.dof_count(); }
    std::size_t combined() const { return nv() + np(); }
};

inline Discretization build_discretization(std::shared_ptr<const Mesh> mesh, Element element,
                                           const std::set<BoundaryTag>& dirichlet, StructureEnds ends,
                                           const PhysicalParams& params)
{
    params.validate();
    Discretization d;
    d.mesh = mesh;
    d.element = element;
    d.velocity = build_space(mesh, element == Element::TaylorHood ? ElementKind::P2 : ElementKind::P1Bubble, 2, dirichlet);
    d.pressure = build_space(mesh, ElementKind::P1, 1);
    d.trace = build_trace_space(d.velocity, ends);
    d.mass = assemble_mass(d.velocity);
    d.af = assemble_af(d.velocity, params.mu);
    d.b = assemble_b(d.velocity, d.pressure);
    d.bt = d.b.transpose();
    d.mass_sigma = assemble_mass_sigma(d.trace);
    d.as = assemble_as(d.trace, params.C0, params.C1);
    d.injection = trace_injection(d.trace);
    d.injection_t = d.injection.transpose();
    d.traction = traction_trace(d.velocity, d.pressure, d.trace, params.mu);
    d.couplings = assemble_traction_couplings(d.traction, d.trace);
    d.pressure_mass = assemble_scalar_functional(d.pressure, [](const Point&) { return 1.0; }, 2);
    return d;
}

inline std::uint64_t hash_fields(const Vector& u, const Vector& p)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const Vector& v) {
        const auto* b = reinterpret_cast<const unsigned char*>(v.data());
        for (std::size_t i = 0; i < static_cast<std::size_t>(v.size()) * sizeof(double); ++i) {
            h ^= b[i];
            h *= 1099511628211ull;
        }
        h ^= static_cast<std::uint64_t>(v.size());
    };
    mix(u);
    mix(p);
    return h;
}

/// Discrete fields at t_n plus the interface traction cache sigma_h^n n.
struct SchemeState {
    std::size_t n = 0;
    double t = 0.0;
    Vector u;
    Vector p;
    Vector eta;
    Vector s;
    std::vector<double> traction;  // [2k + c] at TractionTraceOperator points
    std::uint64_t traction_source = 0;
};

inline void refresh_traction(const Discretization& d, SchemeState& st)
{
    st.traction = d.traction.evaluate_all(st.u, st.p);
    st.traction_source = hash_fields(st.u, st.p);
}

inline SchemeState make_state(const Discretization& d, Vector u, Vector p, Vector eta, double t = 0.0)
{
    SchemeState st;
    st.t = t;
    st.u = std::move(u);
    st.p = std::move(p);
    st.eta = std::move(eta);
    if (static_cast<std::size_t>(st.u.size()) != d.nv() || static_cast<std::size_t>(st.p.size()) != d.np() ||
        static_cast<std::size_t>(st.eta.size()) != d.ns()) {
        throw std::invalid_argument("make_state: coefficient vector sizes do not match the discretization");
    }
    st.s = Vector::Zero(static_cast<Eigen::Index>(d.ns()));
    refresh_traction(d, st);
    return st;
}

inline SchemeState zero_state(const Discretization& d)
{
    return make_state(d, Vector::Zero(static_cast<Eigen::Index>(d.nv())), Vector::Zero(static_cast<Eigen::Index>(d.np())),
                      Vector::Zero(static_cast<Eigen::Index>(d.ns())));
}

/// Loads at one time level. Empty vectors mean zero.
struct StepLoads {
    Vector fluid;      // velocity functional: (f_f, v) plus boundary pressure terms
    Vector solid;      // trace functional (f_s, w)_Sigma
    Vector dirichlet;  // full velocity vector; only constrained entries are read
};

using LoadFunction = std::function<StepLoads(double t)>;

inline LoadFunction no_loads()
{
    return [](double) { return StepLoads{}; };
}

namespace detail {

inline Vector or_zero(const Vector& v, std::size_t n)
{
    if (v.size() == 0) return Vector::Zero(static_cast<Eigen::Index>(n));
    if (static_cast<std::size_t>(v.size()) != n) throw std::invalid_argument("load vector has the wrong size");
    return v;
}

inline std::vector<std::size_t> fluid_constrained(const Discretization& d, bool pin_structure_ends)
{
    std::vector<std::size_t> c = d.velocity.constrained_dofs();
    if (pin_structure_ends) {
        const auto map = d.trace.velocity_dofs();
        for (std::size_t k : d.trace.constrained_dofs()) c.push_back(map[k]);
    }
    std::sort(c.begin(), c.end());
    c.erase(std::unique(c.begin(), c.end()), c.end());
    return c;
}

}  // namespace detail

struct LinearSystem {
    SparseMatrix matrix;
    ConstrainedSystem solver;
};

/// (rho_s eps_s / tau) M_Sigma + tau A_s, acting on s^n.
inline LinearSystem build_solid_system(const PhysicalParams& params, const Discretization& d, double tau)
{
    if (!(tau > 0.0)) throw std::invalid_argument("build_solid_system: tau must be positive");
    SparseMatrix a = (params.rse() / tau) * d.mass_sigma + tau * d.as;
    ConstrainedSystem solver(a, d.trace.constrained_dofs(), "structure step");
    return {std::move(a), std::move(solver)};
}

/// The rewritten fluid step on the combined (u, p) unknown, test (v, q) rows:
///   (rho_f/tau) M + A_f + (rho_s eps_s/tau) P^T M_Sigma P  | -B^T
///   B                                                       |  0
/// plus (u, sigma(v,q) n)_Sigma and tau(1+beta)/(rho_s eps_s) (sigma(u,p) n, sigma(v,q) n)_Sigma.
inline SparseMatrix assemble_fluid_matrix(const PhysicalParams& params, const Discretization& d, double tau)
{
    const std::size_t nv = d.nv();
    std::vector<Triplet> t;
    append_block(d.mass, 0, 0, params.rho_f / tau, t);
    append_block(d.af, 0, 0, 1.0, t);
    append_block(d.injection_t * d.mass_sigma * d.injection, 0, 0, params.rse() / tau, t);
    append_block(d.bt, 0, nv, -1.0, t);
    append_block(d.b, nv, 0, 1.0, t);
    append_block(d.couplings.k_wsigma * d.injection, 0, 0, 1.0, t);
    append_block(d.couplings.k_sigsig, 0, 0, tau * (1.0 + params.beta) / params.rse(), t);
    return from_triplets(d.combined(), t);
}

inline LinearSystem build_fluid_system(const PhysicalParams& params, const Discretization& d, double tau)
{
    if (!(tau > 0.0)) throw std::invalid_argument("build_fluid_system: tau must be positive");
    SparseMatrix a = assemble_fluid_matrix(params, d, tau);
    ConstrainedSystem solver(a, detail::fluid_constrained(d, false), "fluid step");
    return {std::move(a), std::move(solver)};
}

/// The stabilized kinematically coupled stepper: structure first with the
/// previous traction, then fluid with the Robin-type interface terms.
class PartitionedScheme {
public:
    PartitionedScheme(const Discretization& d, const PhysicalParams& params, double tau)
        : d_(&d), params_(params), tau_(tau), solid_(build_solid_system(params, d, tau)), fluid_(build_fluid_system(params, d, tau))
    {
    }

    double tau() const { return tau_; }
    const PhysicalParams& params() const { return params_; }
    const Discretization& discretization() const { return *d_; }
    const LinearSystem& solid_system() const { return solid_; }
    const LinearSystem& fluid_system() const { return fluid_; }

    /// Mean-zero pressure after every fluid solve; for debugging only, it
    /// breaks the discrete energy identity.
    bool mean_zero_pressure = false;

    Vector solid_rhs(const SchemeState& st, const StepLoads& loads) const
    {
        check_cache(st);
        const Discretization& d = *d_;
        const Vector pu = d.injection * st.u;
        Vector rhs = (params_.rse() / tau_) * (d.mass_sigma * pu) - d.as * st.eta -
                     trace_load_from_points(d.traction, d.trace, st.traction);
        rhs += detail::or_zero(loads.solid, d.ns());
        return rhs;
    }

    Vector step_solid(const SchemeState& st, const StepLoads& loads) const
    {
        const Vector rhs = solid_rhs(st, loads);
        return solid_.solver.solve(rhs);
    }

    Vector fluid_rhs(const SchemeState& st, const Vector& s, const StepLoads& loads) const
    {
        check_cache(st);
        const Discretization& d = *d_;
        const auto nv = static_cast<Eigen::Index>(d.nv());
        Vector rv = (params_.rho_f / tau_) * (d.mass * st.u) + (params_.rse() / tau_) * (d.injection_t * (d.mass_sigma * s)) +
                    d.injection_t * trace_load_from_points(d.traction, d.trace, st.traction);
        rv += detail::or_zero(loads.fluid, d.nv());
        Vector rhs = Vector::Zero(static_cast<Eigen::Index>(d.combined()));
        rhs.head(nv) = rv;
        rhs += d.couplings.k_wsigma * s;
        rhs += (tau_ * (1.0 + params_.beta) / params_.rse()) * d.traction.pair_with_test(st.traction);
        return rhs;
    }

    std::pair<Vector, Vector> step_fluid(const SchemeState& st, const Vector& s, const StepLoads& loads) const
    {
        const Discretization& d = *d_;
        const Vector rhs = fluid_rhs(st, s, loads);
        Vector full = Vector::Zero(static_cast<Eigen::Index>(d.combined()));
        if (loads.dirichlet.size() != 0) full.head(static_cast<Eigen::Index>(d.nv())) = detail::or_zero(loads.dirichlet, d.nv());
        const Vector x = fluid_.solver.solve(rhs, fluid_.solver.gather_fixed(full));
        Vector u = x.head(static_cast<Eigen::Index>(d.nv()));
        Vector p = x.tail(static_cast<Eigen::Index>(d.np()));
        if (mean_zero_pressure) p.array() -= d.pressure_mass.dot(p) / d.pressure_mass.sum();
        return {std::move(u), std::move(p)};
    }

    SchemeState advance(const SchemeState& st, const LoadFunction& loads) const
    {
        const double tn = st.t + tau_;
        const StepLoads l = loads(tn);
        SchemeState next;
        next.n = st.n + 1;
        next.t = tn;
        next.s = step_solid(st, l);
        auto [u, p] = step_fluid(st, next.s, l);
        next.u = std::move(u);
        next.p = std::move(p);
        next.eta = st.eta + tau_ * next.s;
        refresh_traction(*d_, next);
        return next;
    }

private:
    void check_cache(const SchemeState& st) const
    {
        if (st.traction.size() != 2 * d_->traction.points.size() || hash_fields(st.u, st.p) != st.traction_source) {
            throw std::logic_error("internal consistency: traction cache is stale for the current (u, p)");
        }
    }

    const Discretization* d_;
    PhysicalParams params_;
    double tau_;
    LinearSystem solid_;
    LinearSystem fluid_;
};

struct EnergyReport {
    double E0 = 0.0;
    double E0_prev = 0.0;
    double E1 = 0.0;
    double beta0 = 0.0;
    double per_step_residual = 0.0;
};

inline double energy_E0(const Discretization& d, const PhysicalParams& prm, double tau, const SchemeState& st)
{
    const Vector pu = d.injection * st.u;
    return 0.5 * prm.rho_f * d.mass.form(st.u, st.u) + 0.5 * d.as.form(st.eta, st.eta) +
           tau * tau * (1.0 + prm.beta) / (2.0 * prm.rse()) * d.traction.norm_squared(st.traction) +
           0.5 * prm.rse() * d.mass_sigma.form(pu, pu);
}

inline EnergyReport energies(const Discretization& d, const PhysicalParams& prm, double tau, const SchemeState& cur,
                             const SchemeState& prev)
{
    EnergyReport r;
    r.beta0 = beta0(prm.beta);
    r.E0 = energy_E0(d, prm, tau, cur);
    r.E0_prev = energy_E0(d, prm, tau, prev);
    const Vector du = cur.u - prev.u;
    const Vector s_minus_prev = cur.s - d.injection * prev.u;
    const Vector s_minus_cur = cur.s - d.injection * cur.u;
    std::vector<double> dsig(cur.traction.size());
    for (std::size_t k = 0; k < dsig.size(); ++k) dsig[k] = cur.traction[k] - prev.traction[k];
    const double rse = prm.rse();
    r.E1 = d.af.form(cur.u, cur.u) + prm.rho_f / (2.0 * tau) * d.mass.form(du, du) +
           rse / (2.0 * tau) * d.mass_sigma.form(s_minus_prev, s_minus_prev) +
           rse * r.beta0 / (2.0 * tau) * d.mass_sigma.form(s_minus_cur, s_minus_cur) +
           tau * r.beta0 / (2.0 * rse) * d.traction.norm_squared(dsig) + 0.5 * tau * d.as.form(cur.s, cur.s);
    r.per_step_residual = r.E0 - r.E0_prev + tau * r.E1;
    return r;
}

/// Backward Euler on the coupled weak form with eta^n = eta^{n-1} + tau u^n|_Sigma.
class MonolithicScheme {
public:
    MonolithicScheme(const Discretization& d, const PhysicalParams& params, double tau) : d_(&d), params_(params), tau_(tau)
    {
        if (!(tau > 0.0)) throw std::invalid_argument("MonolithicScheme: tau must be positive");
        const std::size_t nv = d.nv();
        std::vector<Triplet> t;
        append_block(d.mass, 0, 0, params.rho_f / tau, t);
        append_block(d.af, 0, 0, 1.0, t);
        append_block(d.injection_t * d.mass_sigma * d.injection, 0, 0, params.rse() / tau, t);
        append_block(d.injection_t * d.as * d.injection, 0, 0, tau, t);
        append_block(d.bt, 0, nv, -1.0, t);
        append_block(d.b, nv, 0, 1.0, t);
        system_.matrix = from_triplets(d.combined(), t);
        system_.solver = ConstrainedSystem(system_.matrix, detail::fluid_constrained(d, d.trace.ends == StructureEnds::Pinned),
                                           "monolithic step");
    }

    const LinearSystem& system() const { return system_; }

    SchemeState advance(const SchemeState& st, const LoadFunction& loads) const
    {
        const Discretization& d = *d_;
        const double tn = st.t + tau_;
        const StepLoads l = loads(tn);
        const auto nv = static_cast<Eigen::Index>(d.nv());
        const Vector pu = d.injection * st.u;
        Vector rv = (params_.rho_f / tau_) * (d.mass * st.u) + (params_.rse() / tau_) * (d.injection_t * (d.mass_sigma * pu)) -
                    d.injection_t * (d.as * st.eta);
        rv += detail::or_zero(l.fluid, d.nv());
        rv += d.injection_t * detail::or_zero(l.solid, d.ns());
        Vector rhs = Vector::Zero(static_cast<Eigen::Index>(d.combined()));
        rhs.head(nv) = rv;
        Vector full = Vector::Zero(static_cast<Eigen::Index>(d.combined()));
        if (l.dirichlet.size() != 0) full.head(nv) = detail::or_zero(l.dirichlet, d.nv());
        const Vector x = system_.solver.solve(rhs, system_.solver.gather_fixed(full));
        SchemeState next;
        next.n = st.n + 1;
        next.t = tn;
        next.u = x.head(nv);
        next.p = x.tail(static_cast<Eigen::Index>(d.np()));
        next.s = d.injection * next.u;
        next.eta = st.eta + tau_ * next.s;
        refresh_traction(d, next);
        return next;
    }

private:
    const Discretization* d_;
    PhysicalParams params_;
    double tau_;
    LinearSystem system_;
};

/// (rho_f/2)||u||^2 + (1/2)||eta||_s^2 + (rho_s eps_s/2)||u||^2_Sigma.
inline double monolithic_energy(const Discretization& d, const PhysicalParams& prm, const SchemeState& st)
{
    const Vector pu = d.injection * st.u;
    return 0.5 * prm.rho_f * d.mass.form(st.u, st.u) + 0.5 * d.as.form(st.eta, st.eta) + 0.5 * prm.rse() * d.mass_sigma.form(pu, pu);
}

}  // namespace fsi
