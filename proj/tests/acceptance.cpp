// Acceptance run: one PASS/FAIL line per criterion. Optional arguments pick
// criteria by number (e.g. `acceptance 3 7`); the default runs all ten.

#include <chrono>
#include <cstdio>
#include <functional>
#include <future>
#include <set>
#include <string>
#include <vector>

#include "fsi/bench.hpp"
#include "fsi/studies.hpp"
#include "oracle.hpp"

using namespace fsi;

namespace {

// levels of one study run concurrently; results stay in level order
ConvergenceTable parallel_study(const ConvergenceConfig& cfg)
{
    std::vector<std::future<LevelResult>> jobs;
    for (std::size_t M : cfg.levels) jobs.push_back(std::async(std::launch::async, [&cfg, M] { return run_level(cfg, M); }));
    std::vector<LevelResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return tabulate(cfg, std::move(out));
}

template <class T, class F>
std::vector<T> parallel_map(const std::vector<std::size_t>& xs, F&& f)
{
    std::vector<std::future<T>> jobs;
    for (std::size_t x : xs) jobs.push_back(std::async(std::launch::async, [&f, x] { return f(x); }));
    std::vector<T> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

Check merge(const std::string& name, const std::vector<Check>& parts)
{
    Check c{name, true, ""};
    for (const auto& p : parts) {
        c.pass = c.pass && p.pass;
        c.detail += "[" + p.name + (p.pass ? "" : " FAIL") + ": " + p.detail + "] ";
    }
    return c;
}

Check periodic_th()
{
    const ReferenceTable ref = reference_th_periodic();
    const ConvergenceTable t = parallel_study(reference_config(ref));
    return merge("periodic Taylor-Hood orders and magnitudes",
                 {check_orders("orders +-0.25", t, ref, 0.25), check_magnitudes("magnitudes x2", t, ref, 2.0)});
}

Check dirichlet_tables()
{
    const ReferenceTable th = reference_th_dirichlet();
    const ReferenceTable mini = reference_mini_dirichlet();
    auto a = std::async(std::launch::async, [&] { return parallel_study(reference_config(th)); });
    const ConvergenceTable tm = parallel_study(reference_config(mini));
    const ConvergenceTable tt = a.get();
    return merge("Dirichlet Taylor-Hood and MINI orders",
                 {check_orders("Taylor-Hood +-0.25", tt, th, 0.25), check_orders("MINI +-0.25, p in [1.0,1.7]", tm, mini, 0.25, 1, 1.0, 1.7)});
}

Check stability_grid()
{
    std::vector<std::future<Check>> jobs;
    for (double beta : {0.0, 0.5, 2.0}) {
        for (double tau : {0.1, 0.01}) {
            jobs.push_back(std::async(std::launch::async, [beta, tau] {
                StabilityConfig cfg;
                cfg.M = 16;
                cfg.beta = beta;
                cfg.tau = tau;
                cfg.steps = 200;
                char name[64];
                std::snprintf(name, sizeof name, "beta=%g tau=%g", beta, tau);
                return check_stability(name, stability_study(cfg));
            }));
        }
    }
    std::vector<Check> parts;
    for (auto& j : jobs) parts.push_back(j.get());
    return merge("energy residual <= 1e-10 E0^0 at every step", parts);
}

Check ritz_rates()
{
    const std::vector<std::size_t> levels{4, 8, 16};
    const double T = 1.0;
    const auto r = parallel_map<RitzLevel>(levels, [T](std::size_t M) { return ritz_level(M, T, ritz_default_steps(M, T)); });
    std::vector<double> h, e;
    for (const auto& l : r) {
        h.push_back(l.h);
        e.push_back(l.max_combined);
    }
    return check_slope("Ritz max combined error order 3 +-0.3 (T=1)", h, e, 3.0, 0.3);
}

Check super_approx()
{
    const std::vector<std::size_t> levels{4, 8, 16};
    const auto dir = parallel_map<double>(levels, [](std::size_t M) { return super_approximation(M, BoundaryMode::Dirichlet); });
    const auto per = parallel_map<double>(levels, [](std::size_t M) { return super_approximation(M, BoundaryMode::Periodic); });
    std::vector<double> h;
    for (std::size_t M : levels) h.push_back(1.0 / static_cast<double>(M));
    Check c = check_slope("super-approximation H1(Sigma) order 3 +-0.4 (side-Dirichlet)", h, dir, 3.0, 0.4);
    c.detail += "| periodic slope " + fmt("%.3f", log_log_slope(h, per));
    return c;
}

Check dirichlet_ritz()
{
    const std::vector<std::size_t> levels{8, 16, 32};
    const auto r = parallel_map<ProjectionLevel>(levels, [](std::size_t M) { return projection_level(M); });
    std::vector<double> h, a, b;
    for (const auto& l : r) {
        h.push_back(l.h);
        a.push_back(l.rd_u);
        b.push_back(l.rd_h1_p);
    }
    return merge("Dirichlet Stokes-Ritz rates (r=2)",
                 {check_slope("L2 order 3 +-0.3", h, a, 3.0, 0.3), check_slope("H1 + p order 2 +-0.3", h, b, 2.0, 0.3)});
}

Check ntd() { return check_ntd("NtD symmetry over 20 pairs, positivity", ntd_study(16, 20, 20240607)); }

Check monolithic()
{
    return check_monolithic("partitioned - monolithic order 1.0 +-0.4 in tau", monolithic_comparison(16, {1e-2, 5e-3, 2.5e-3}, 0.1), 1.0,
                            0.4);
}

Check bench()
{
    BenchConfig cfg;
    cfg.M = 16;
    cfg.tau = 1e-4;
    const BenchResult r = run_bench(cfg);
    return check_bench("forward wave then negative reflected pressure", check_wave(r, cfg));
}

Check oracle_equivalence()
{
    std::vector<Check> parts;
    PhysicalParams a;
    PhysicalParams b;
    b.rho_f = 1.7;
    b.mu = 0.6;
    b.rho_s = 1.1;
    b.eps_s = 0.8;
    b.C0 = 1.3;
    b.C1 = 0.4;
    b.beta = 2.0;
    for (Element el : {Element::TaylorHood, Element::Mini}) {
        double worst = 0.0;
        std::string where;
        for (const PhysicalParams& p : {a, b}) {
            for (double tau : {0.5, 0.01}) {
                const auto c = oracle::compare_all(el, p, tau);
                if (c.worst >= worst) {
                    worst = c.worst;
                    where = c.where;
                }
            }
        }
        parts.push_back({std::string(to_string(el)) + " forms <= 1e-12", worst <= 1e-12, fmt("%.2e", worst) + " (" + where + ")"});
    }
    PhysicalParams s = b;
    s.beta = 0.5;
    const double fd = std::max(oracle::max_fd_source_error(ExactSolution(a), 100, 1), oracle::max_fd_source_error(ExactSolution(s), 100, 2));
    parts.push_back({"sources vs finite differences <= 1e-6", fd <= 1e-6, fmt("%.2e", fd)});
    return merge("dense oracle and source cross-check", parts);
}

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<std::function<Check()>> criteria{periodic_th, dirichlet_tables, stability_grid, ritz_rates, super_approx,
                                                       dirichlet_ritz, ntd, monolithic, bench, oracle_equivalence};
    std::set<std::size_t> pick;
    for (int i = 1; i < argc; ++i) {
        const long k = std::strtol(argv[i], nullptr, 10);
        if (k < 1 || k > static_cast<long>(criteria.size())) {
            std::fprintf(stderr, "acceptance: criterion numbers are 1..%zu, got '%s'\n", criteria.size(), argv[i]);
            return 64;
        }
        pick.insert(static_cast<std::size_t>(k));
    }
    bool ok = true;
    for (std::size_t k = 1; k <= criteria.size(); ++k) {
        if (!pick.empty() && !pick.count(k)) continue;
        const auto start = std::chrono::steady_clock::now();
        Check c;
        try {
            c = criteria[k - 1]();
        } catch (const std::exception& e) {
            c = {"exception", false, e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("criterion %2zu %s  %s (%.1f s): %s\n", k, c.pass ? "PASS" : "FAIL", c.name.c_str(), secs, c.detail.c_str());
        std::fflush(stdout);
        ok = ok && c.pass;
    }
    return ok ? 0 : 1;
}
