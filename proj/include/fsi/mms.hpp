#pragma once

#include <array>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsi/norms.hpp"
#include "fsi/projections.hpp"
#include "fsi/scheme.hpp"

namespace fsi {

// Manufactured solution on [0,2]x[0,1]:
//   u = 4 sin t (sin 2pi x sin 2pi y, cos 2pi x cos 2pi y)
//   p = 8 sin t (cos 4pi x - cos 4pi y)
//   eta = (0, -4 cos 2pi x cos t)
// Every field is a product of a time factor and a spatial shape, so the
// sources split as f = cos t A(x) + sin t B(x).
class ExactSolution {
public:
    explicit ExactSolution(const PhysicalParams& params = {}) : prm_(params) {}

    const PhysicalParams& params() const { return prm_; }

    // spatial shapes
    static Vec2 U(const Point& x)
    {
        return {4.0 * std::sin(k_ * x.x) * std::sin(k_ * x.y), 4.0 * std::cos(k_ * x.x) * std::cos(k_ * x.y)};
    }
    static Mat2 gradU(const Point& x)
    {
        const double sx = std::sin(k_ * x.x), cx = std::cos(k_ * x.x);
        const double sy = std::sin(k_ * x.y), cy = std::cos(k_ * x.y);
        Mat2 g{};
        g[0][0] = 4.0 * k_ * cx * sy;
        g[0][1] = 4.0 * k_ * sx * cy;
        g[1][0] = -4.0 * k_ * sx * cy;
        g[1][1] = -4.0 * k_ * cx * sy;
        return g;
    }
    static double Pshape(const Point& x) { return 8.0 * (std::cos(2.0 * k_ * x.x) - std::cos(2.0 * k_ * x.y)); }
    static Vec2 gradP(const Point& x)
    {
        return {-16.0 * k_ * std::sin(2.0 * k_ * x.x), 16.0 * k_ * std::sin(2.0 * k_ * x.y)};
    }
    static Vec2 H(const Point& x) { return {0.0, -4.0 * std::cos(k_ * x.x)}; }
    static Vec2 dH(const Point& x) { return {0.0, 4.0 * k_ * std::sin(k_ * x.x)}; }

    Vec2 u(double t, const Point& x) const { return scale(U(x), std::sin(t)); }
    Vec2 dt_u(double t, const Point& x) const { return scale(U(x), std::cos(t)); }
    Mat2 grad_u(double t, const Point& x) const
    {
        Mat2 g = gradU(x);
        for (auto& r : g) for (auto& v : r) v *= std::sin(t);
        return g;
    }
    double p(double t, const Point& x) const { return std::sin(t) * Pshape(x); }
    Vec2 eta(double t, const Point& x) const { return scale(H(x), std::cos(t)); }
    Vec2 dx_eta(double t, const Point& x) const { return scale(dH(x), std::cos(t)); }
    Vec2 s(double t, const Point& x) const { return scale(H(x), -std::sin(t)); }

    /// sigma(u, p) n on an interface side.
    Vec2 traction(double t, const Point& x, BoundaryTag tag) const
    {
        const Mat2 g = grad_u(t, x);
        const double pv = p(t, x);
        const Point n = outward_normal(tag);
        Mat2 sig{};
        for (std::size_t a = 0; a < 2; ++a) {
            for (std::size_t b = 0; b < 2; ++b) sig[a][b] = prm_.mu * (g[a][b] + g[b][a]) - (a == b ? pv : 0.0);
        }
        return {sig[0][0] * n.x + sig[0][1] * n.y, sig[1][0] * n.x + sig[1][1] * n.y};
    }

    // f_f = rho_f d_t u + grad p - mu Lap u, with Lap U = -2k^2 U.
    Vec2 fluid_cos(const Point& x) const { return scale(U(x), prm_.rho_f); }
    Vec2 fluid_sin(const Point& x) const
    {
        const Vec2 uu = U(x);
        const Vec2 gp = gradP(x);
        const double c = 2.0 * k_ * k_ * prm_.mu;
        return {gp[0] + c * uu[0], gp[1] + c * uu[1]};
    }
    Vec2 fluid_source(double t, const Point& x) const
    {
        const Vec2 a = fluid_cos(x), b = fluid_sin(x);
        return {std::cos(t) * a[0] + std::sin(t) * b[0], std::cos(t) * a[1] + std::sin(t) * b[1]};
    }

    // f_s = rho_s eps_s d_tt eta - (C0 d_xx - C1) eta + sigma n, with H'' = -k^2 H.
    Vec2 solid_cos(const Point& x) const
    {
        return scale(H(x), -prm_.rse() + prm_.C0 * k_ * k_ + prm_.C1);
    }
    Vec2 solid_sin(const Point& x, BoundaryTag tag) const { return traction(std::numbers::pi / 2.0, x, tag); }
    Vec2 solid_source(double t, const Point& x, BoundaryTag tag) const
    {
        const Vec2 a = solid_cos(x), b = solid_sin(x, tag);
        return {std::cos(t) * a[0] + std::sin(t) * b[0], std::cos(t) * a[1] + std::sin(t) * b[1]};
    }

    FlowFields fields(double t) const
    {
        FlowFields f;
        f.u = [this, t](const Point& x) { return u(t, x); };
        f.grad_u = [this, t](const Point& x) { return grad_u(t, x); };
        f.p = [this, t](const Point& x) { return p(t, x); };
        f.eta = [this, t](const Point& x, BoundaryTag) { return eta(t, x); };
        f.dx_eta = [this, t](const Point& x, BoundaryTag) { return dx_eta(t, x); };
        return f;
    }

    /// Time derivative (d_t u, d_t p, d_t eta) as fields.
    FlowFields dt_fields(double t) const
    {
        FlowFields f;
        f.u = [this, t](const Point& x) { return dt_u(t, x); };
        f.grad_u = [t](const Point& x) {
            Mat2 g = gradU(x);
            for (auto& r : g) for (auto& v : r) v *= std::cos(t);
            return g;
        };
        f.p = [t](const Point& x) { return std::cos(t) * Pshape(x); };
        f.eta = [this, t](const Point& x, BoundaryTag) { return s(t, x); };
        f.dx_eta = [t](const Point& x, BoundaryTag) { return scale(dH(x), -std::sin(t)); };
        return f;
    }

private:
    static constexpr double k_ = 2.0 * std::numbers::pi;
    static Vec2 scale(Vec2 v, double c) { return {c * v[0], c * v[1]}; }

    PhysicalParams prm_;
};

enum class BoundaryMode { Periodic, Dirichlet };

inline const char* to_string(BoundaryMode m) { return m == BoundaryMode::Periodic ? "periodic" : "dirichlet"; }

/// Time step rule: tau = h^3, h^2 or a fixed value. Runs use N = ceil(T/tau)
/// steps of the adjusted size T/N so that the last step lands on T.
struct TauRule {
    enum class Kind { H3, H2, Fixed } kind = Kind::H3;
    double value = 0.0;

    bool operator==(const TauRule&) const = default;

    double tau(double h) const
    {
        switch (kind) {
        case Kind::H3: return h * h * h;
        case Kind::H2: return h * h;
        case Kind::Fixed: return value;
        }
        return value;
    }

    std::string str() const
    {
        switch (kind) {
        case Kind::H3: return "h3";
        case Kind::H2: return "h2";
        case Kind::Fixed: {
            char buf[64];
            std::snprintf(buf, sizeof buf, "fixed:%.17g", value);
            return buf;
        }
        }
        return "?";
    }

    static TauRule parse(const std::string& s)
    {
        TauRule r;
        if (s == "h3") return r;
        if (s == "h2") {
            r.kind = Kind::H2;
            return r;
        }
        std::string num = s.rfind("fixed:", 0) == 0 ? s.substr(6) : s;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(num, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != num.size() || !(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("tau rule must be h3, h2, fixed:<value> or a positive number, got '" + s + "'");
        }
        r.kind = Kind::Fixed;
        r.value = v;
        return r;
    }
};

inline std::size_t step_count(double T, double tau)
{
    if (!(tau > 0.0) || !(T > 0.0)) throw std::invalid_argument("step_count: T and tau must be positive");
    // small slack so T/tau that is an integer up to rounding is not bumped
    return static_cast<std::size_t>(std::ceil(T / tau * (1.0 - 1e-12)));
}

struct ErrorNorms {
    double u_L2 = 0.0;
    double u_L2_sigma = 0.0;
    double p_L2 = 0.0;
    double eta_L2_sigma = 0.0;
    double eta_s = 0.0;
};

inline ErrorNorms error_norms(const Discretization& d, const ExactSolution& ex, const SchemeState& st, double t)
{
    ErrorNorms e;
    e.u_L2 = l2_error(d.velocity, st.u, [&](const Point& x) { return ex.u(t, x); });
    e.u_L2_sigma = velocity_sigma_error(d.trace, st.u, [&](const Point& x, BoundaryTag) { return ex.u(t, x); });
    e.p_L2 = l2_error(d.pressure, st.p, [&](const Point& x) { return ex.p(t, x); });
    auto eta = [&](const Point& x, BoundaryTag) { return std::pair<Vec2, Vec2>{ex.eta(t, x), ex.dx_eta(t, x)}; };
    e.eta_L2_sigma = trace_l2_error(d.trace, st.eta, eta);
    e.eta_s = trace_energy_error(d.trace, st.eta, ex.params().C0, ex.params().C1, eta);
    return e;
}

/// Mesh and discretization of the manufactured problem at level M (h = 1/M).
inline Discretization manufactured_discretization(std::size_t M, Element element, BoundaryMode mode, const PhysicalParams& params)
{
    const bool periodic = mode == BoundaryMode::Periodic;
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(2 * M, M, 2.0, 1.0, periodic));
    std::set<BoundaryTag> dir;
    if (!periodic) dir = {BoundaryTag::SigmaLeft, BoundaryTag::SigmaRight};
    return build_discretization(mesh, element, dir, periodic ? StructureEnds::Periodic : StructureEnds::Natural, params);
}

/// Source and boundary-data vectors reused across steps.
class ManufacturedLoads {
public:
    ManufacturedLoads(const Discretization& d, const ExactSolution& ex)
    {
        auto vel = [&](auto&& g) {
            return assemble_velocity_functional(d.velocity, [&](const Point& x) { return std::pair<Vec2, Mat2>{g(x), Mat2{}}; });
        };
        fluid_cos_ = vel([&](const Point& x) { return ex.fluid_cos(x); });
        fluid_sin_ = vel([&](const Point& x) { return ex.fluid_sin(x); });
        solid_cos_ = assemble_trace_functional(d.trace, [&](const Point& x, BoundaryTag) {
            return std::pair<Vec2, Vec2>{ex.solid_cos(x), Vec2{0.0, 0.0}};
        });
        solid_sin_ = assemble_trace_functional(d.trace, [&](const Point& x, BoundaryTag tag) {
            return std::pair<Vec2, Vec2>{ex.solid_sin(x, tag), Vec2{0.0, 0.0}};
        });
        if (!d.velocity.dirichlet_tags.empty()) dirichlet_shape_ = interpolate(d.velocity, [](const Point& x) { return ExactSolution::U(x); });
    }

    StepLoads operator()(double t) const
    {
        StepLoads l;
        l.fluid = std::cos(t) * fluid_cos_ + std::sin(t) * fluid_sin_;
        l.solid = std::cos(t) * solid_cos_ + std::sin(t) * solid_sin_;
        if (dirichlet_shape_.size() != 0) l.dirichlet = std::sin(t) * dirichlet_shape_;
        return l;
    }

private:
    Vector fluid_cos_, fluid_sin_, solid_cos_, solid_sin_, dirichlet_shape_;
};

/// Initial state: Lagrange interpolants of u(0), p(0) and eta_h^0 = R_sh eta(0).
inline SchemeState manufactured_initial_state(const Discretization& d, const ExactSolution& ex, const PhysicalParams& params)
{
    const Projector proj(d, params);
    Vector u0 = interpolate(d.velocity, [&](const Point& x) { return ex.u(0.0, x); });
    Vector p0 = interpolate(d.pressure, [&](const Point& x) { return ex.p(0.0, x); });
    Vector eta0 = proj.initial_Rsh_eta(ex.fields(0.0));
    return make_state(d, std::move(u0), std::move(p0), std::move(eta0));
}

struct ConvergenceConfig {
    Element element = Element::TaylorHood;
    BoundaryMode mode = BoundaryMode::Periodic;
    std::vector<std::size_t> levels{8, 16, 32};
    double T = 0.1;
    TauRule tau;
    PhysicalParams params;
    bool record_max = false;
};

struct LevelResult {
    std::size_t M = 0;
    double h = 0.0;
    double tau = 0.0;
    std::size_t steps = 0;
    ErrorNorms final_errors;
    ErrorNorms max_errors;  // only if record_max
    double seconds = 0.0;
};

inline constexpr std::size_t kNormCount = 5;

inline std::array<double, kNormCount> as_array(const ErrorNorms& e)
{
    return {e.u_L2, e.u_L2_sigma, e.p_L2, e.eta_L2_sigma, e.eta_s};
}

inline const std::array<const char*, kNormCount>& norm_names()
{
    static const std::array<const char*, kNormCount> n{"err_u_L2", "err_u_L2_sigma", "err_p_L2", "err_eta_L2_sigma", "err_eta_s"};
    return n;
}

struct ConvergenceTable {
    ConvergenceConfig config;
    std::vector<LevelResult> levels;
    std::vector<std::array<double, kNormCount>> pair_orders;  // one per consecutive pair
    std::array<double, kNormCount> slopes{};                  // least squares of log e against log h

    /// The tables' single order row: the last refinement pair.
    std::array<double, kNormCount> last_orders() const
    {
        if (pair_orders.empty()) throw std::logic_error("convergence table needs at least two levels");
        return pair_orders.back();
    }
};

inline double observed_order(double e_coarse, double e_fine, double h_coarse, double h_fine)
{
    return std::log(e_coarse / e_fine) / std::log(h_coarse / h_fine);
}

/// Least-squares slope of log y against log x.
inline double log_log_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("log_log_slope: need at least two matching samples");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

inline LevelResult run_level(const ConvergenceConfig& cfg, std::size_t M)
{
    if (M == 0) throw std::invalid_argument("convergence level M must be >= 1");
    const auto start = std::chrono::steady_clock::now();
    const ExactSolution ex(cfg.params);
    const Discretization d = manufactured_discretization(M, cfg.element, cfg.mode, cfg.params);
    LevelResult r;
    r.M = M;
    r.h = d.mesh->h;
    r.steps = step_count(cfg.T, cfg.tau.tau(r.h));
    r.tau = cfg.T / static_cast<double>(r.steps);
    const PartitionedScheme scheme(d, cfg.params, r.tau);
    const ManufacturedLoads loads(d, ex);
    const LoadFunction lf = [&](double t) { return loads(t); };
    SchemeState st = manufactured_initial_state(d, ex, cfg.params);
    for (std::size_t n = 0; n < r.steps; ++n) {
        st = scheme.advance(st, lf);
        // pin the clock to the grid so T is hit exactly
        st.t = static_cast<double>(n + 1) * r.tau;
        if (cfg.record_max) {
            const auto e = as_array(error_norms(d, ex, st, st.t));
            auto m = as_array(r.max_errors);
            for (std::size_t k = 0; k < kNormCount; ++k) m[k] = std::max(m[k], e[k]);
            r.max_errors = {m[0], m[1], m[2], m[3], m[4]};
        }
    }
    r.final_errors = error_norms(d, ex, st, cfg.T);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline ConvergenceTable tabulate(const ConvergenceConfig& cfg, std::vector<LevelResult> levels)
{
    ConvergenceTable t;
    t.config = cfg;
    t.levels = std::move(levels);
    for (std::size_t i = 0; i + 1 < t.levels.size(); ++i) {
        const auto a = as_array(t.levels[i].final_errors);
        const auto b = as_array(t.levels[i + 1].final_errors);
        std::array<double, kNormCount> o{};
        for (std::size_t k = 0; k < kNormCount; ++k) o[k] = observed_order(a[k], b[k], t.levels[i].h, t.levels[i + 1].h);
        t.pair_orders.push_back(o);
    }
    if (t.levels.size() >= 2) {
        for (std::size_t k = 0; k < kNormCount; ++k) {
            std::vector<double> hs, es;
            for (const auto& l : t.levels) {
                hs.push_back(l.h);
                es.push_back(as_array(l.final_errors)[k]);
            }
            t.slopes[k] = log_log_slope(hs, es);
        }
    }
    return t;
}

/// Runs every level (sequentially; see the CLI for --jobs) and fits orders.
inline ConvergenceTable convergence_study(const ConvergenceConfig& cfg)
{
    std::vector<LevelResult> out;
    for (std::size_t M : cfg.levels) out.push_back(run_level(cfg, M));
    return tabulate(cfg, std::move(out));
}

}  // namespace fsi
