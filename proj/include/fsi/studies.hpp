#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "fsi/bench.hpp"
#include "fsi/mms.hpp"
#include "fsi/projections.hpp"
#include "fsi/scheme.hpp"

namespace fsi {

// Study drivers shared by the command-line tool and the acceptance binary,
// plus the published reference values they are judged against.

struct Check {
    std::string name;
    bool pass = false;
    std::string detail;
};

inline std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// ---------------------------------------------------------------- reference

/// Published errors (u, p, eta on Sigma, eta in energy norm) at three levels and
/// the single order row that accompanies them.
struct ReferenceTable {
    Element element;
    BoundaryMode mode;
    TauRule tau;
    std::array<std::size_t, 3> levels;
    std::array<std::array<double, 4>, 3> errors;
    std::array<double, 4> orders;
};

inline ReferenceTable reference_th_periodic()
{
    return {Element::TaylorHood, BoundaryMode::Periodic, TauRule{}, {8, 16, 32},
            {{{6.852e-3, 1.403e-1, 1.324e-2, 8.075e-1}, {6.848e-4, 2.691e-2, 1.644e-3, 2.029e-1}, {7.937e-5, 6.297e-3, 2.052e-4, 5.079e-2}}},
            {3.10, 2.10, 3.00, 2.00}};
}

inline ReferenceTable reference_th_dirichlet()
{
    return {Element::TaylorHood, BoundaryMode::Dirichlet, TauRule{}, {8, 16, 32},
            {{{4.553e-3, 1.354e-1, 1.313e-2, 8.069e-1}, {6.009e-4, 2.775e-2, 1.645e-3, 2.029e-1}, {7.693e-5, 6.470e-3, 2.055e-4, 5.079e-2}}},
            {2.97, 2.10, 3.00, 2.00}};
}

inline ReferenceTable reference_mini_dirichlet()
{
    TauRule h2;
    h2.kind = TauRule::Kind::H2;
    return {Element::Mini, BoundaryMode::Dirichlet, h2, {16, 32, 64},
            {{{1.324e-2, 3.186e-1, 7.971e-2, 4.001}, {3.349e-3, 1.192e-1, 1.999e-2, 2.003}, {8.327e-4, 4.641e-2, 5.001e-3, 1.002}}},
            {2.00, 1.36, 2.00, 1.00}};
}

/// The four tabulated norms out of the five we compute.
inline std::array<double, 4> tabulated(const ErrorNorms& e) { return {e.u_L2, e.p_L2, e.eta_L2_sigma, e.eta_s}; }

inline const std::array<const char*, 4>& tabulated_names()
{
    static const std::array<const char*, 4> n{"u", "p", "eta_Sigma", "eta_s"};
    return n;
}

inline ConvergenceConfig reference_config(const ReferenceTable& ref, double beta = 0.5)
{
    ConvergenceConfig c;
    c.element = ref.element;
    c.mode = ref.mode;
    c.levels.assign(ref.levels.begin(), ref.levels.end());
    c.T = 0.1;
    c.tau = ref.tau;
    c.params.beta = beta;
    return c;
}

/// Last-pair orders within `tol` of the reference; optional per-norm interval override.
inline Check check_orders(const std::string& name, const ConvergenceTable& t, const ReferenceTable& ref, double tol,
                          int override_index = -1, double lo = 0.0, double hi = 0.0)
{
    Check c{name, true, ""};
    const auto o = t.last_orders();
    const std::array<double, 4> got{o[0], o[2], o[3], o[4]};
    for (std::size_t k = 0; k < 4; ++k) {
        bool ok = std::abs(got[k] - ref.orders[k]) <= tol;
        if (static_cast<int>(k) == override_index) ok = got[k] >= lo && got[k] <= hi;
        c.pass = c.pass && ok;
        c.detail += std::string(tabulated_names()[k]) + "=" + fmt("%.3f", got[k]) + (ok ? " " : "(!) ");
    }
    return c;
}

/// Every tabulated magnitude within a factor `factor` of the reference.
inline Check check_magnitudes(const std::string& name, const ConvergenceTable& t, const ReferenceTable& ref, double factor)
{
    Check c{name, true, ""};
    if (t.levels.size() != 3) return {name, false, "expected three levels"};
    double worst = 1.0;
    for (std::size_t i = 0; i < 3; ++i) {
        const auto e = tabulated(t.levels[i].final_errors);
        for (std::size_t k = 0; k < 4; ++k) {
            const double r = e[k] / ref.errors[i][k];
            const double dev = std::max(r, 1.0 / r);
            worst = std::max(worst, dev);
            if (!(dev <= factor)) c.pass = false;
        }
    }
    c.detail = "worst ratio " + fmt("%.3f", worst);
    return c;
}

// ---------------------------------------------------------------- stability

struct StabilityConfig {
    std::size_t M = 16;
    double tau = 0.1;
    double beta = 0.5;
    std::size_t steps = 200;
    unsigned seed = 20240607;
    Element element = Element::TaylorHood;
    BoundaryMode mode = BoundaryMode::Periodic;
};

struct StabilityResult {
    std::vector<EnergyRow> rows;
    double E0_initial = 0.0;
    double max_relative_residual = 0.0;  // max (E0^n - E0^{n-1} + tau E1^n) / E0^0
};

inline constexpr double kStabilityTolerance = 1e-10;

/// Zero sources and random initial data; constrained coefficients are zero.
inline StabilityResult stability_study(const StabilityConfig& cfg)
{
    PhysicalParams prm;
    prm.beta = cfg.beta;
    const Discretization d = manufactured_discretization(cfg.M, cfg.element, cfg.mode, prm);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> nd;
    auto random = [&](std::size_t n, const std::vector<std::size_t>& zero) {
        Vector v(static_cast<Eigen::Index>(n));
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = nd(rng);
        for (std::size_t k : zero) v[static_cast<Eigen::Index>(k)] = 0.0;
        return v;
    };
    Vector u = random(d.nv(), d.velocity.constrained_dofs());
    Vector p = random(d.np(), {});
    Vector eta = random(d.ns(), d.trace.constrained_dofs());
    SchemeState st = make_state(d, std::move(u), std::move(p), std::move(eta));
    const PartitionedScheme scheme(d, prm, cfg.tau);
    StabilityResult r;
    r.E0_initial = energy_E0(d, prm, cfg.tau, st);
    r.max_relative_residual = -std::numeric_limits<double>::infinity();
    const LoadFunction none = no_loads();
    for (std::size_t n = 0; n < cfg.steps; ++n) {
        SchemeState next = scheme.advance(st, none);
        const EnergyReport e = energies(d, prm, cfg.tau, next, st);
        r.rows.push_back({next.n, next.t, e.E0, e.E1, e.per_step_residual});
        r.max_relative_residual = std::max(r.max_relative_residual, e.per_step_residual / r.E0_initial);
        st = std::move(next);
    }
    return r;
}

// ---------------------------------------------------------------- Ritz projections

struct RitzLevel {
    std::size_t M = 0;
    double h = 0.0;
    std::size_t steps = 0;
    double max_combined = 0.0;
    std::array<double, 4> max_parts{};  // eta, u, u on Sigma, h p
    double max_divergence_residual = 0.0;
};

/// RK4 steps per unit time and level; the time error is negligible next to h^3
/// (halving the count changes max_combined by far less than the level spacing).
inline std::size_t ritz_default_steps(std::size_t M, double T)
{
    return std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(8.0 * static_cast<double>(M) * T)));
}

inline RitzLevel ritz_level(std::size_t M, double T, std::size_t steps)
{
    PhysicalParams prm;
    const ExactSolution ex(prm);
    const Discretization d = manufactured_discretization(M, Element::TaylorHood, BoundaryMode::Periodic, prm);
    const Projector proj(d, prm);
    const NeumannStokes ns(d, prm);
    const auto ini = proj.initial_Rh_eta(ex.fields(0.0), ex.dt_fields(0.0));
    const RitzTrajectory tr = ritz_evolve(proj, ns, [&](double t) { return ex.fields(t); }, ini.eta, T, steps);
    RitzLevel r;
    r.M = M;
    r.h = d.mesh->h;
    r.steps = steps;
    r.max_combined = tr.max_combined;
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
        const auto& e = tr.errors[i];
        r.max_parts[0] = std::max(r.max_parts[0], e[0]);
        r.max_parts[1] = std::max(r.max_parts[1], e[1]);
        r.max_parts[2] = std::max(r.max_parts[2], e[2]);
        r.max_parts[3] = std::max(r.max_parts[3], r.h * e[3]);
        const Vector res = d.b * tr.u[i] - proj.ell(ex.fields(tr.times[i]));
        r.max_divergence_residual = std::max(r.max_divergence_residual, res.lpNorm<Eigen::Infinity>());
    }
    return r;
}

struct ProjectionLevel {
    std::size_t M = 0;
    double h = 0.0;
    double rd_u = 0.0;         // ||u - R^D u||
    double rd_h1_p = 0.0;      // |u - R^D u|_1 + ||p - R^D p||
    double super_h1 = 0.0;     // ||R_sh eta(0) - R_h eta(0)||_{H1(Sigma)}, periodic
    double super_h1_dirichlet = 0.0;  // same on the side-Dirichlet variant
};

/// ||R_sh eta(0) - R_h eta(0)||_{H1(Sigma)} for the manufactured data.
inline double super_approximation(std::size_t M, BoundaryMode mode)
{
    PhysicalParams prm;
    const ExactSolution ex(prm);
    const Discretization d = manufactured_discretization(M, Element::TaylorHood, mode, prm);
    const Projector proj(d, prm);
    const auto ini = proj.initial_Rh_eta(ex.fields(0.0), ex.dt_fields(0.0));
    const Vector diff = proj.initial_Rsh_eta(ex.fields(0.0)) - ini.eta;
    const auto [l2, d2] = trace_error_parts(d.trace, diff, [](const Point&, BoundaryTag) {
        return std::pair<Vec2, Vec2>{Vec2{0.0, 0.0}, Vec2{0.0, 0.0}};
    });
    return std::sqrt(l2 + d2);
}

/// Dirichlet Stokes-Ritz at t = 1 (periodic Taylor-Hood) and the initial-value
/// pair at t = 0 on both variants. On the uniform periodic mesh the pair
/// superconverges at order 4; the side-Dirichlet variant shows the sharp order 3.
inline ProjectionLevel projection_level(std::size_t M, double t_rd = 1.0)
{
    PhysicalParams prm;
    const ExactSolution ex(prm);
    const Discretization d = manufactured_discretization(M, Element::TaylorHood, BoundaryMode::Periodic, prm);
    const Projector proj(d, prm);
    ProjectionLevel r;
    r.M = M;
    r.h = d.mesh->h;
    const FlowFields f = ex.fields(t_rd);
    const auto [u, p] = proj.ritz_RhD(f);
    r.rd_u = l2_error(d.velocity, u, f.u);
    r.rd_h1_p = h1_semi_error(d.velocity, u, f.grad_u) + l2_error(d.pressure, p, f.p);
    r.super_h1 = super_approximation(M, BoundaryMode::Periodic);
    r.super_h1_dirichlet = super_approximation(M, BoundaryMode::Dirichlet);
    return r;
}

inline NtdReport ntd_study(std::size_t M, std::size_t trials, unsigned seed)
{
    PhysicalParams prm;
    const Discretization d = manufactured_discretization(M, Element::TaylorHood, BoundaryMode::Periodic, prm);
    const NeumannStokes ns(d, prm);
    return ntd_symmetry_check(d, ns, trials, seed);
}

// ---------------------------------------------------------------- partitioned vs monolithic

struct MonolithicRow {
    double tau = 0.0;
    std::size_t steps = 0;
    double difference = 0.0;  // ||u_part - u_mono|| at T
    double err_partitioned = 0.0;
    double err_monolithic = 0.0;
};

inline std::vector<MonolithicRow> monolithic_comparison(std::size_t M, const std::vector<double>& taus, double T,
                                                        double beta = 0.5)
{
    PhysicalParams prm;
    prm.beta = beta;
    const ExactSolution ex(prm);
    const Discretization d = manufactured_discretization(M, Element::TaylorHood, BoundaryMode::Periodic, prm);
    const ManufacturedLoads loads(d, ex);
    const LoadFunction lf = [&](double t) { return loads(t); };
    const SchemeState s0 = manufactured_initial_state(d, ex, prm);
    std::vector<MonolithicRow> out;
    for (double tau_nominal : taus) {
        MonolithicRow row;
        row.steps = step_count(T, tau_nominal);
        row.tau = T / static_cast<double>(row.steps);
        const PartitionedScheme part(d, prm, row.tau);
        const MonolithicScheme mono(d, prm, row.tau);
        SchemeState a = s0, b = s0;
        for (std::size_t n = 0; n < row.steps; ++n) {
            a = part.advance(a, lf);
            b = mono.advance(b, lf);
        }
        const Vector du = a.u - b.u;
        row.difference = std::sqrt(d.mass.form(du, du));
        row.err_partitioned = error_norms(d, ex, a, T).u_L2;
        row.err_monolithic = error_norms(d, ex, b, T).u_L2;
        out.push_back(row);
    }
    return out;
}

/// Orders between consecutive entries of (x, y) on a log-log scale.
inline std::vector<double> pair_orders(const std::vector<double>& x, const std::vector<double>& y)
{
    std::vector<double> o;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) o.push_back(observed_order(y[i], y[i + 1], x[i], x[i + 1]));
    return o;
}

// ---------------------------------------------------------------- checks

inline Check check_stability(const std::string& name, const StabilityResult& r)
{
    const bool ok = r.rows.size() >= 200 && r.max_relative_residual <= kStabilityTolerance;
    return {name, ok, "steps=" + std::to_string(r.rows.size()) + " max residual/E0^0=" + fmt("%.3e", r.max_relative_residual)};
}

/// Least-squares slope of y against h within [target - tol, target + tol].
inline Check check_slope(const std::string& name, const std::vector<double>& h, const std::vector<double>& y, double target,
                         double tol)
{
    const double s = log_log_slope(h, y);
    std::string d = "slope=" + fmt("%.3f", s) + " pairs=";
    for (double o : pair_orders(h, y)) d += fmt("%.3f", o) + " ";
    return {name, std::abs(s - target) <= tol, d};
}

inline Check check_ntd(const std::string& name, const NtdReport& r)
{
    const bool ok = r.pairs >= 20 && r.max_asymmetry <= 1e-12 && r.min_quadratic > 0.0;
    return {name, ok, "pairs=" + std::to_string(r.pairs) + " asym=" + fmt("%.3e", r.max_asymmetry) + " min(z,Nz)=" + fmt("%.3e", r.min_quadratic)};
}

/// Every consecutive pair order within [target - tol, target + tol].
inline Check check_monolithic(const std::string& name, const std::vector<MonolithicRow>& rows, double target, double tol)
{
    std::vector<double> t, e;
    for (const auto& r : rows) {
        t.push_back(r.tau);
        e.push_back(r.difference);
    }
    Check c{name, rows.size() >= 2, ""};
    for (double o : pair_orders(t, e)) {
        c.pass = c.pass && std::abs(o - target) <= tol;
        c.detail += fmt("%.3f", o) + " ";
    }
    return c;
}

inline Check check_bench(const std::string& name, const WaveCheck& w)
{
    std::string d = "argmax_x=";
    for (double x : w.argmax_x) d += fmt("%.3f", x) + " ";
    d += "arrival_snapshot=" + std::to_string(w.arrival);
    d += w.forward_monotone ? " forward:ok" : " forward:FAIL";
    d += w.reflected_negative ? " reflected:ok" : " reflected:FAIL";
    return {name, w.pass(), d};
}

}  // namespace fsi
