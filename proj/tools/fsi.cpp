// fsi: batch driver for the thin-structure FSI studies.
//
//   fsi convergence --element th --bc periodic --levels 3 --beta 0.5
//   fsi stability --beta 0 --tau 0.1 --h 0.0625 --steps 200
//   fsi bench --M 16 --tau 1e-4
//
// Precedence: per-command defaults < --config file < flags. Every run writes
// its CSV/VTK outputs and a manifest.json under --out.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsi/io.hpp"
#include "fsi/studies.hpp"

namespace fs = std::filesystem;
using namespace fsi;

namespace {

struct Flag {
    std::string key;
    std::string value;
    CLI::Option* opt = nullptr;
};

std::vector<std::size_t> expand_levels(std::size_t base, std::size_t count)
{
    std::vector<std::size_t> v;
    for (std::size_t k = 0; k < count; ++k) v.push_back(base << k);
    return v;
}

/// Fills keys nobody set with the defaults of the chosen study.
void apply_defaults(SimConfig& c, const std::set<std::string>& touched)
{
    auto unset = [&](const char* k) { return touched.count(k) == 0; };
    const std::string& cmd = c.command;
    if (cmd == "convergence") {
        if (unset("levels")) c.levels = c.element == Element::Mini ? std::vector<std::size_t>{16, 32, 64} : std::vector<std::size_t>{8, 16, 32};
        if (unset("tau")) c.tau = TauRule::parse(c.element == Element::Mini ? "h2" : "h3");
        if (unset("T")) c.T = 0.1;
    } else if (cmd == "stability") {
        if (unset("tau")) c.tau = TauRule::parse("0.1");
        if (unset("M")) c.M = 16;
        if (unset("steps")) c.steps = 200;
    } else if (cmd == "ritz") {
        if (unset("levels")) c.levels = {4, 8, 16};
        if (unset("T")) c.T = 1.0;
        if (unset("steps")) c.steps = 0;
    } else if (cmd == "project") {
        if (unset("levels")) c.levels = {4, 8, 16};
        if (unset("rd_levels")) c.rd_levels = {8, 16, 32};
    } else if (cmd == "bench") {
        if (unset("tau")) c.tau = TauRule::parse("1e-4");
        if (unset("M")) c.M = 16;
    } else if (cmd == "compare-monolithic") {
        if (unset("M")) c.M = 16;
        if (unset("T")) c.T = 0.1;
    }
}

int report(const std::vector<Check>& checks, bool check)
{
    bool ok = true;
    for (const auto& c : checks) {
        std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
        ok = ok && c.pass;
    }
    if (check && !ok) {
        std::fprintf(stderr, "fsi: acceptance check failed\n");
        return 2;
    }
    return 0;
}

double fixed_tau(const SimConfig& c)
{
    if (c.tau.kind != TauRule::Kind::Fixed) throw std::invalid_argument(c.command + " needs a fixed time step (--tau <value>)");
    return c.tau.value;
}

int run_convergence(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    ConvergenceConfig cc;
    cc.element = c.element;
    cc.mode = c.bc;
    cc.levels = c.levels;
    cc.T = c.T;
    cc.tau = c.tau;
    cc.params = c.params();
    std::vector<LevelResult> levels(cc.levels.size());
    if (c.jobs > 1) {
        // levels are independent; results land in level order regardless of scheduling
        std::vector<std::future<void>> pending;
        std::size_t next = 0;
        while (next < cc.levels.size() || !pending.empty()) {
            while (next < cc.levels.size() && pending.size() < c.jobs) {
                const std::size_t i = next++;
                pending.push_back(std::async(std::launch::async, [&, i] { levels[i] = run_level(cc, cc.levels[i]); }));
            }
            pending.front().get();
            pending.erase(pending.begin());
        }
    } else {
        for (std::size_t i = 0; i < cc.levels.size(); ++i) levels[i] = run_level(cc, cc.levels[i]);
    }
    const ConvergenceTable t = tabulate(cc, std::move(levels));
    const fs::path csv = fs::path(c.out) / "convergence.csv";
    write_csv(convergence_csv(t), csv);
    outputs.push_back(csv);
    std::printf("%-5s %-10s %-10s %-12s %-12s %-12s %-12s\n", "M", "h", "tau", "u", "p", "eta_Sigma", "eta_s");
    for (std::size_t i = 0; i < t.levels.size(); ++i) {
        const auto& l = t.levels[i];
        const auto e = tabulated(l.final_errors);
        std::printf("%-5zu %-10.4g %-10.4g %-12.4e %-12.4e %-12.4e %-12.4e\n", l.M, l.h, l.tau, e[0], e[1], e[2], e[3]);
        if (i > 0) {
            const auto& o = t.pair_orders[i - 1];
            std::printf("%-27s %-12.3f %-12.3f %-12.3f %-12.3f\n", "  order", o[0], o[2], o[3], o[4]);
        }
    }
    if (!check) return 0;
    std::vector<Check> checks;
    for (const ReferenceTable& ref : {reference_th_periodic(), reference_th_dirichlet(), reference_mini_dirichlet()}) {
        if (ref.element != cc.element || ref.mode != cc.mode || !(ref.tau == cc.tau) ||
            !std::equal(ref.levels.begin(), ref.levels.end(), cc.levels.begin(), cc.levels.end()) || cc.T != 0.1) {
            continue;
        }
        const bool mini = ref.element == Element::Mini;
        checks.push_back(mini ? check_orders("orders", t, ref, 0.25, 1, 1.0, 1.7) : check_orders("orders", t, ref, 0.25));
        if (ref.mode == BoundaryMode::Periodic) checks.push_back(check_magnitudes("magnitudes x2", t, ref, 2.0));
    }
    if (checks.empty()) checks.push_back({"reference", false, "no reference values for this element/bc/tau/levels/T combination"});
    return report(checks, check);
}

int run_stability(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    StabilityConfig sc;
    sc.M = c.M;
    sc.tau = fixed_tau(c);
    sc.beta = c.beta;
    sc.steps = c.steps;
    sc.seed = c.seed;
    sc.element = c.element;
    sc.mode = c.bc;
    const StabilityResult r = stability_study(sc);
    const fs::path csv = fs::path(c.out) / "energy.csv";
    write_csv(energy_csv(r.rows), csv);
    outputs.push_back(csv);
    std::printf("E0^0 = %.6e, max per-step residual / E0^0 = %.3e over %zu steps\n", r.E0_initial, r.max_relative_residual, r.rows.size());
    Check k{"per-step residual <= 1e-10 E0^0", r.max_relative_residual <= kStabilityTolerance, fmt("%.3e", r.max_relative_residual)};
    return report({k}, check);
}

int run_ritz(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    CsvTable t;
    t.header = {"M", "h", "steps", "max_combined", "max_eta_L2Sigma", "max_u_L2", "max_u_L2Sigma", "max_h_p_L2", "max_div_residual"};
    std::vector<double> hs, es;
    for (std::size_t M : c.levels) {
        const std::size_t steps = c.steps ? c.steps : ritz_default_steps(M, c.T);
        const RitzLevel r = ritz_level(M, c.T, steps);
        t.add_row({std::to_string(M), csv_number(r.h), std::to_string(steps), csv_number(r.max_combined), csv_number(r.max_parts[0]),
                   csv_number(r.max_parts[1]), csv_number(r.max_parts[2]), csv_number(r.max_parts[3]), csv_number(r.max_divergence_residual)});
        std::printf("M=%-4zu steps=%-5zu max combined error %.4e\n", M, steps, r.max_combined);
        hs.push_back(r.h);
        es.push_back(r.max_combined);
    }
    const fs::path csv = fs::path(c.out) / "ritz.csv";
    write_csv(t, csv);
    outputs.push_back(csv);
    if (hs.size() < 2) return 0;
    return report({check_slope("Ritz combined error order 3", hs, es, 3.0, 0.3)}, check);
}

int run_project(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    CsvTable t;
    t.header = {"M", "h", "rd_u_L2", "rd_u_H1_plus_p_L2", "super_H1Sigma_periodic", "super_H1Sigma_dirichlet"};
    std::map<std::size_t, ProjectionLevel> cache;
    auto level = [&](std::size_t M) -> const ProjectionLevel& {
        auto it = cache.find(M);
        if (it == cache.end()) it = cache.emplace(M, projection_level(M)).first;
        return it->second;
    };
    std::set<std::size_t> all(c.levels.begin(), c.levels.end());
    all.insert(c.rd_levels.begin(), c.rd_levels.end());
    for (std::size_t M : all) {
        const auto& r = level(M);
        t.add_row({std::to_string(M), csv_number(r.h), csv_number(r.rd_u), csv_number(r.rd_h1_p), csv_number(r.super_h1),
                   csv_number(r.super_h1_dirichlet)});
        std::printf("M=%-4zu |u-RDu|=%.4e |u-RDu|_1+|p-RDp|=%.4e |Rsh-Rh|_H1 periodic=%.4e dirichlet=%.4e\n", M, r.rd_u, r.rd_h1_p,
                    r.super_h1, r.super_h1_dirichlet);
    }
    const fs::path csv = fs::path(c.out) / "project.csv";
    write_csv(t, csv);
    outputs.push_back(csv);

    const NtdReport ntd = ntd_study(c.levels.empty() ? 8 : c.levels.back(), 20, c.seed);
    std::printf("NtD: %zu pairs, max asymmetry %.3e, min (z,Nz) %.3e\n", ntd.pairs, ntd.max_asymmetry, ntd.min_quadratic);

    const int r = 2;  // Taylor-Hood velocity degree
    std::vector<Check> checks;
    auto series = [&](const std::vector<std::size_t>& lv, double ProjectionLevel::*m) {
        std::pair<std::vector<double>, std::vector<double>> s;
        for (std::size_t M : lv) {
            s.first.push_back(level(M).h);
            s.second.push_back(level(M).*m);
        }
        return s;
    };
    if (c.levels.size() >= 2) {
        const auto s = series(c.levels, &ProjectionLevel::super_h1_dirichlet);
        checks.push_back(check_slope("super-approximation order 3", s.first, s.second, 3.0, 0.4));
    }
    if (c.rd_levels.size() >= 2) {
        const auto a = series(c.rd_levels, &ProjectionLevel::rd_u);
        const auto b = series(c.rd_levels, &ProjectionLevel::rd_h1_p);
        checks.push_back(check_slope("Dirichlet Stokes-Ritz L2 order r+1", a.first, a.second, r + 1.0, 0.3));
        checks.push_back(check_slope("Dirichlet Stokes-Ritz H1+p order r", b.first, b.second, r, 0.3));
    }
    checks.push_back(check_ntd("NtD symmetry and positivity", ntd));
    return report(checks, check);
}

int run_bench_cmd(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    BenchConfig bc;
    bc.M = c.M;
    bc.tau = fixed_tau(c);
    bc.beta = c.beta;
    bc.ends = parse_ends(c.ends);
    bc.snapshots = c.snapshots;
    const BenchResult r = run_bench(bc);
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        const auto& s = r.snapshots[k];
        char name[64];
        std::snprintf(name, sizeof name, "pressure_%02zu_t%.4f.vtk", k, s.t);
        const fs::path p = fs::path(c.out) / name;
        write_vtk(*r.disc, {s.u, s.p, s.eta}, p, c.refine_vtk);
        outputs.push_back(p);
    }
    const fs::path csv = fs::path(c.out) / "energy.csv";
    write_csv(energy_csv(r.energy), csv);
    outputs.push_back(csv);
    const WaveCheck w = check_wave(r, bc);
    CsvTable wt;
    wt.header = {"t", "argmax_abs_p_x", "front_x", "min_p"};
    for (std::size_t k = 0; k < r.snapshots.size(); ++k) {
        wt.add_row({csv_number(r.snapshots[k].t), csv_number(w.argmax_x[k]), csv_number(w.front_x[k]), csv_number(w.min_p[k])});
    }
    const fs::path wcsv = fs::path(c.out) / "wave.csv";
    write_csv(wt, wcsv);
    outputs.push_back(wcsv);
    return report({check_bench("forward wave and reflection", w)}, check);
}

int run_compare(const SimConfig& c, bool check, std::vector<fs::path>& outputs)
{
    const auto rows = monolithic_comparison(c.M, c.taus, c.T, c.beta);
    CsvTable t;
    t.header = {"tau", "steps", "diff_u_L2", "err_u_partitioned", "err_u_monolithic"};
    for (const auto& r : rows) {
        t.add_row({csv_number(r.tau), std::to_string(r.steps), csv_number(r.difference), csv_number(r.err_partitioned), csv_number(r.err_monolithic)});
        std::printf("tau=%-10.4g |u_part - u_mono| = %.4e\n", r.tau, r.difference);
    }
    const fs::path csv = fs::path(c.out) / "compare.csv";
    write_csv(t, csv);
    outputs.push_back(csv);
    return report({check_monolithic("partitioned - monolithic order 1 in tau", rows, 1.0, 0.4)}, check);
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Partitioned thin-structure FSI: convergence, stability, projection and benchmark studies"};
    app.fallthrough();  // global options may follow the subcommand; subcommands inherit this
    app.require_subcommand(1);
    std::string config_path;
    bool check = false;
    std::vector<Flag> flags;
    std::optional<std::string> levels_arg;
    std::size_t base = 0;
    double h_arg = 0.0;

    struct Spec {
        std::string name, key, help;
    };
    const std::map<std::string, std::vector<Spec>> specs{
        {"convergence",
         {{"--element", "element", "th | mini"}, {"--bc", "bc", "periodic | dirichlet"}, {"--beta", "beta", "stabilization parameter"},
          {"--tau", "tau", "h3 | h2 | fixed:<v> | <v>"}, {"--T", "T", "final time"}, {"--rho-f", "rho_f", ""}, {"--mu", "mu", ""},
          {"--rho-s", "rho_s", ""}, {"--eps-s", "eps_s", ""}, {"--C0", "C0", ""}, {"--C1", "C1", ""}}},
        {"stability",
         {{"--element", "element", "th | mini"}, {"--bc", "bc", "periodic | dirichlet"}, {"--beta", "beta", ""},
          {"--tau", "tau", "time step"}, {"--M", "M", "mesh level"}, {"--steps", "steps", "number of steps"}}},
        {"ritz", {{"--T", "T", "final time"}, {"--steps", "steps", "RK4 steps per level (0: automatic)"}}},
        {"project", {{"--rd-levels", "rd_levels", "levels for the Dirichlet Stokes-Ritz rates"}}},
        {"bench",
         {{"--M", "M", "mesh level"}, {"--tau", "tau", "time step"}, {"--beta", "beta", ""}, {"--ends", "ends", "natural | pinned"},
          {"--snapshots", "snapshots", "comma separated snapshot times"}}},
        {"compare-monolithic",
         {{"--M", "M", "mesh level"}, {"--taus", "taus", "comma separated time steps"}, {"--T", "T", "final time"}, {"--beta", "beta", ""}}},
    };
    // CLI11 binds to flags[i].value, so the vector must not reallocate
    std::size_t total = 0;
    for (const auto& [_, v] : specs) total += v.size();
    flags.reserve(total);

    std::map<std::string, CLI::App*> subs;
    for (const auto& [cmd, list] : specs) {
        CLI::App* sub = app.add_subcommand(cmd, "run the " + cmd + " study");
        subs[cmd] = sub;
        for (const auto& s : list) {
            flags.push_back({s.key, "", nullptr});
            flags.back().opt = sub->add_option(s.name, flags.back().value, s.help);
        }
        if (cmd == "convergence" || cmd == "ritz" || cmd == "project") {
            sub->add_option("--levels", levels_arg, "level count (doubling from --base) or a comma separated list of M");
            sub->add_option("--base", base, "coarsest level when --levels is a count");
        }
        if (cmd == "stability") {
            sub->set_help_flag("--help", "print this help");  // -h would clash with --h
            sub->add_option("--h", h_arg, "mesh size; sets M = 1/h");
        }
        if (cmd == "bench") sub->add_flag("--refine-vtk", "write once-refined VTK to show quadratic detail");
    }
    std::string out, seed, jobs;
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_seed = app.add_option("--seed", seed, "seed for randomized data");
    auto* o_jobs = app.add_option("--jobs", jobs, "concurrent levels");
    app.add_option("--config", config_path, "key = value configuration file");
    app.add_flag("--check", check, "exit nonzero if an acceptance check fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        SimConfig cfg;
        std::set<std::string> touched;
        if (!config_path.empty()) cfg = load_config(config_path, cfg, &touched);
        cfg.command = app.get_subcommands().front()->get_name();
        for (const auto& f : flags) {
            if (f.opt && f.opt->count() > 0) {
                set_config_value(cfg, f.key, f.value);
                touched.insert(f.key);
            }
        }
        if (o_out->count()) set_config_value(cfg, "out", out), touched.insert("out");
        if (o_seed->count()) set_config_value(cfg, "seed", seed), touched.insert("seed");
        if (o_jobs->count()) set_config_value(cfg, "jobs", jobs), touched.insert("jobs");
        CLI::App* sub = subs.at(cfg.command);
        if (sub->get_option_no_throw("--refine-vtk") && sub->get_option("--refine-vtk")->count()) {
            cfg.refine_vtk = true;
            touched.insert("refine_vtk");
        }
        if (cfg.command == "stability" && sub->get_option("--h")->count()) {
            if (!(h_arg > 0.0)) throw std::invalid_argument("--h must be positive");
            const auto M = static_cast<std::size_t>(std::llround(1.0 / h_arg));
            if (M == 0 || std::abs(1.0 / static_cast<double>(M) - h_arg) > 1e-9) throw std::invalid_argument("--h must be 1/M for an integer M");
            cfg.M = M;
            touched.insert("M");
        }
        apply_defaults(cfg, touched);
        if (levels_arg) {
            const std::string& v = *levels_arg;
            if (v.find(',') == std::string::npos) {
                const std::size_t count = detail::parse_size(v);
                std::size_t b = base;
                if (b == 0) b = !cfg.levels.empty() ? cfg.levels.front() : 8;
                cfg.levels = expand_levels(b, count);
            } else {
                set_config_value(cfg, "levels", v);
            }
        } else if (base != 0) {
            cfg.levels = expand_levels(base, cfg.levels.size());
        }

        std::vector<fs::path> outputs;
        int rc = 0;
        if (cfg.command == "convergence") rc = run_convergence(cfg, check, outputs);
        else if (cfg.command == "stability") rc = run_stability(cfg, check, outputs);
        else if (cfg.command == "ritz") rc = run_ritz(cfg, check, outputs);
        else if (cfg.command == "project") rc = run_project(cfg, check, outputs);
        else if (cfg.command == "bench") rc = run_bench_cmd(cfg, check, outputs);
        else if (cfg.command == "compare-monolithic") rc = run_compare(cfg, check, outputs);
        const fs::path cfg_path = fs::path(cfg.out) / "config.txt";
        write_text(cfg_path, serialize_config(cfg));
        outputs.push_back(cfg_path);
        write_manifest(cfg, outputs, cfg.out);
        return rc;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "fsi: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fsi: %s\n", e.what());
        return 1;
    }
}
