#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsi/scheme.hpp"

namespace fsi {

/// Pressure-wave benchmark in the channel (0,5)x(0,0.5), CGS units.
struct BenchConfig {
    std::size_t M = 16;  // vertices: 10M+1 by M+1, h = 1/M
    double tau = 1e-4;
    double rho_f = 1.0;
    double mu = 0.035;
    double rho_s = 1.1;
    double eps_s = 0.1;
    double young = 0.75e6;
    double poisson = 0.5;
    double radius = 0.5;
    double p_max = 1.3333e4;
    double t_max = 0.003;
    double beta = 0.5;
    double lx = 5.0;
    double ly = 0.5;
    StructureEnds ends = StructureEnds::Natural;
    std::vector<double> snapshots{0.003, 0.009, 0.016, 0.026};

    double C0() const { return young * eps_s / (2.0 * (1.0 + poisson)); }
    double C1() const { return young * eps_s / (radius * radius * (1.0 - poisson * poisson)); }

    PhysicalParams params() const
    {
        PhysicalParams p;
        p.rho_f = rho_f;
        p.mu = mu;
        p.rho_s = rho_s;
        p.eps_s = eps_s;
        p.C0 = C0();
        p.C1 = C1();
        p.beta = beta;
        return p;
    }

    double final_time() const
    {
        double t = 0.0;
        for (double s : snapshots) t = std::max(t, s);
        return t;
    }
};

/// Inflow pulse; p_out is zero.
inline double pin(double t, double p_max = 1.3333e4, double t_max = 0.003)
{
    if (t < 0.0) throw std::invalid_argument("pin: time must be >= 0");
    if (t > t_max) return 0.0;
    return 0.5 * p_max * (1.0 - std::cos(2.0 * std::numbers::pi * t / t_max));
}

inline Discretization bench_discretization(const BenchConfig& cfg)
{
    if (cfg.M == 0) throw std::invalid_argument("bench: M must be >= 1");
    const auto ny = cfg.M;
    const auto nx = static_cast<std::size_t>(std::llround(cfg.lx / cfg.ly)) * cfg.M;
    auto mesh = std::make_shared<const Mesh>(build_rect_mesh(nx, ny, cfg.lx, cfg.ly, false));
    return build_discretization(mesh, Element::TaylorHood, {}, cfg.ends, cfg.params());
}

struct BenchSnapshot {
    double t = 0.0;
    std::size_t step = 0;
    Vector u;
    Vector p;
    Vector eta;
};

struct EnergyRow {
    std::size_t n = 0;
    double t = 0.0;
    double E0 = 0.0;
    double E1 = 0.0;
    double residual = 0.0;
};

struct BenchResult {
    std::shared_ptr<const Discretization> disc;
    std::vector<BenchSnapshot> snapshots;
    std::vector<EnergyRow> energy;
};

inline BenchResult run_bench(const BenchConfig& cfg)
{
    if (!(cfg.tau > 0.0)) throw std::invalid_argument("bench: tau must be positive");
    if (cfg.snapshots.empty()) throw std::invalid_argument("bench: at least one snapshot time is required");
    for (double s : cfg.snapshots) {
        if (s < 0.0) throw std::invalid_argument("bench: snapshot times must be >= 0");
    }
    BenchResult r;
    auto d = std::make_shared<Discretization>(bench_discretization(cfg));
    r.disc = d;
    const PhysicalParams prm = cfg.params();
    const PartitionedScheme scheme(*d, prm, cfg.tau);
    const Vector unit_inflow = assemble_boundary_pressure_load(d->velocity, BoundaryTag::SigmaLeft, 1.0);
    const LoadFunction loads = [&](double t) {
        StepLoads l;
        l.fluid = pin(t, cfg.p_max, cfg.t_max) * unit_inflow;
        return l;
    };

    std::vector<std::size_t> snap_steps;
    for (double s : cfg.snapshots) snap_steps.push_back(static_cast<std::size_t>(std::llround(s / cfg.tau)));
    std::size_t last = 0;
    for (std::size_t s : snap_steps) last = std::max(last, s);

    auto take = [&](const SchemeState& st) {
        for (std::size_t k = 0; k < snap_steps.size(); ++k) {
            if (snap_steps[k] == st.n) r.snapshots.push_back({cfg.snapshots[k], st.n, st.u, st.p, st.eta});
        }
    };
    SchemeState st = zero_state(*d);
    take(st);
    for (std::size_t n = 0; n < last; ++n) {
        SchemeState next = scheme.advance(st, loads);
        next.t = static_cast<double>(n + 1) * cfg.tau;
        const EnergyReport e = energies(*d, prm, cfg.tau, next, st);
        r.energy.push_back({next.n, next.t, e.E0, e.E1, e.per_step_residual});
        st = std::move(next);
        take(st);
    }
    return r;
}

/// Post-processing oracle for the forward wave and its reflection.
struct WaveCheck {
    std::vector<double> argmax_x;   // x of max |p| per snapshot
    std::vector<double> front_x;    // largest x with |p| above kFrontFraction of the snapshot max
    std::vector<double> min_p;
    std::size_t arrival = 0;        // first snapshot whose front reaches the outlet; = count if none
    bool forward_monotone = false;  // argmax_x strictly increasing before arrival, at least two snapshots
    bool reflected_negative = false;
    bool pass() const { return forward_monotone && reflected_negative; }
};

inline constexpr double kFrontFraction = 0.05;
inline constexpr double kNegativeFraction = 1e-3;

inline WaveCheck check_wave(const BenchResult& r, const BenchConfig& cfg)
{
    const Discretization& d = *r.disc;
    const Mesh& m = *d.mesh;
    WaveCheck c;
    for (const auto& s : r.snapshots) {
        double best = -1.0, bx = 0.0, mn = 0.0;
        for (std::size_t v = 0; v < m.vertices.size(); ++v) {
            const double pv = s.p[static_cast<Eigen::Index>(d.pressure.vertex_node[v])];
            if (std::abs(pv) > best) {
                best = std::abs(pv);
                bx = m.vertices[v].x;
            }
            mn = std::min(mn, pv);
        }
        double front = 0.0;
        for (std::size_t v = 0; v < m.vertices.size(); ++v) {
            const double pv = s.p[static_cast<Eigen::Index>(d.pressure.vertex_node[v])];
            if (best > 0.0 && std::abs(pv) > kFrontFraction * best) front = std::max(front, m.vertices[v].x);
        }
        c.argmax_x.push_back(bx);
        c.front_x.push_back(front);
        c.min_p.push_back(mn);
    }
    const std::size_t count = r.snapshots.size();
    c.arrival = count;
    for (std::size_t k = 0; k < count; ++k) {
        if (c.front_x[k] >= cfg.lx - m.h) {
            c.arrival = k;
            break;
        }
    }
    // snapshots at or before t = 0 carry no wave
    std::size_t first = 0;
    while (first < count && r.snapshots[first].t <= 0.0) ++first;
    std::size_t increasing = first < c.arrival ? 1 : 0;
    bool ok = true;
    for (std::size_t k = first + 1; k < c.arrival; ++k) {
        if (!(c.argmax_x[k] > c.argmax_x[k - 1])) ok = false;
        ++increasing;
    }
    c.forward_monotone = ok && increasing >= 2;
    for (std::size_t k = c.arrival; k < count; ++k) {
        if (k > c.arrival || c.arrival + 1 == count) {
            if (c.min_p[k] < -kNegativeFraction * cfg.p_max) c.reflected_negative = true;
        }
    }
    return c;
}

}  // namespace fsi
