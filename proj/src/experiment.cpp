#include "hopnet/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hopnet/config.hpp"
#include "hopnet/counting.hpp"
#include "hopnet/empirical.hpp"
#include "hopnet/energy.hpp"
#include "hopnet/gibbs.hpp"
#include "hopnet/mcmc.hpp"
#include "hopnet/minimizer.hpp"
#include "hopnet/variational.hpp"

namespace hopnet {

namespace {

struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "window.dim",        "window.radius",      "density.kind",     "density.total_mass",
        "density.per_axis",  "density.cell_masses", "lambda",          "lambda.list",
        "seed",              "seeds.count",        "model.gamma",      "model.beta",
        "model.k_max",       "model.alpha",        "model.eta",        "grid.per_axis",
        "grid.per_axis_list", "mcmc.steps",        "mcmc.thin",        "mcmc.replicas",
        "mcmc.sweep_every",  "mcmc.enum_budget",   "mcmc.burn_in",     "anneal.c0",
        "anneal.gamma_max",  "solver.damping",     "solver.tol",       "solver.max_iter",
        "solver.m_max",      "budget.enumeration", "parallel",         "functionals.input",
    };
    return keys;
}

void validate_keys(const Config& cfg) {
    for (const auto& [key, value] : cfg.entries())
        if (known_keys().count(key) == 0)
            throw std::runtime_error("unknown config key '" + key + "'");
}

CongestionPenalty parse_eta(const std::string& spec) {
    if (spec == "quadratic") return CongestionPenalty();
    if (spec == "zero") return CongestionPenalty([](std::int64_t) { return 0.0; });
    if (spec.rfind("power:", 0) == 0) {
        char* end = nullptr;
        const double p = std::strtod(spec.c_str() + 6, &end);
        if (end == spec.c_str() + 6 || *end != '\0' || !(p >= 1.0))
            throw std::runtime_error("model.eta: power exponent must be a number >= 1");
        return CongestionPenalty([p](std::int64_t m) { return std::pow(double(m), p) - double(m); });
    }
    throw std::runtime_error("model.eta: unknown choice '" + spec + "' (quadratic | zero | power:<p>)");
}

struct Setup {
    Window window;
    IntensityDensity density;
    Grid grid;
    GridMeasure mu;
    double lambda = 1.0;
    std::uint64_t seed = 1;
    ModelParams params;
};

Setup build_setup(const Config& cfg, const ExperimentOptions& opts) {
    Setup s;
    s.window.dim = int(cfg.get_int("window.dim", 1));
    s.window.radius = cfg.get_double("window.radius", 1.0);
    if (s.window.dim < 1 || !(s.window.radius > 0))
        throw std::runtime_error("window: dim must be >= 1 and radius > 0");

    const std::string kind = cfg.get_string("density.kind", "uniform");
    if (kind == "uniform") {
        const double total = cfg.get_double("density.total_mass", 1.0);
        if (!(total > 0)) throw std::runtime_error("density.total_mass must be positive");
        s.density = IntensityDensity::make_uniform(total, s.window);
    } else if (kind == "cells") {
        const std::int64_t pa = cfg.get_int("density.per_axis");
        const Grid dgrid = build_grid(s.window, pa);
        const std::vector<double> masses = cfg.get_double_list("density.cell_masses");
        if (std::int64_t(masses.size()) != dgrid.n_cells)
            throw std::runtime_error("density.cell_masses: expected one value per cell");
        double total = 0.0;
        for (double m : masses) {
            if (m < 0) throw std::runtime_error("density.cell_masses: negative mass");
            total += m;
        }
        if (!(total > 0)) throw std::runtime_error("density.cell_masses: total mass must be positive");
        const double vol = dgrid.cell_volume();
        s.density.uniform = false;
        s.density.u = [dgrid, masses, vol](std::span<const double> x) {
            // clamped per-axis location so boundary points are well defined
            std::vector<std::int64_t> c(std::size_t(dgrid.window.dim));
            for (int i = 0; i < dgrid.window.dim; ++i) {
                const double t = (x[std::size_t(i)] + dgrid.window.radius) / dgrid.cell_side();
                c[std::size_t(i)] = std::clamp(std::int64_t(std::floor(t)), std::int64_t(0),
                                               dgrid.per_axis - 1);
            }
            return masses[std::size_t(dgrid.cell_of_coords(c))] / vol;
        };
    } else {
        throw std::runtime_error("density.kind: unknown choice '" + kind + "' (uniform | cells)");
    }

    s.grid = build_grid(s.window, cfg.get_int("grid.per_axis", 1));
    s.mu = GridMeasure(s.grid);
    s.mu.mass = cell_masses(s.grid, s.density);

    s.lambda = cfg.get_double("lambda", 1.0);
    if (!(s.lambda > 0)) throw std::runtime_error("lambda must be positive");
    s.seed = opts.seed ? *opts.seed : cfg.get_uint("seed", 1);

    s.params.gamma = cfg.get_double("model.gamma", 0.0);
    s.params.beta = cfg.get_double("model.beta", 0.0);
    s.params.k_max = int(cfg.get_int("model.k_max", 1));
    s.params.alpha = cfg.get_double("model.alpha", 2.0);
    s.params.eta = parse_eta(cfg.get_string("model.eta", "quadratic"));
    if (s.params.k_max < 1) throw std::runtime_error("model.k_max must be >= 1");
    if (s.params.gamma < 0 || s.params.beta < 0)
        throw std::runtime_error("model.gamma and model.beta must be nonnegative");
    if (!(s.params.alpha > 0)) throw std::runtime_error("model.alpha must be positive");
    return s;
}

std::ofstream open_out(const ExperimentOptions& opts, const std::string& name) {
    std::filesystem::create_directories(opts.out_dir);
    const std::string path = (std::filesystem::path(opts.out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + path);
    return f;
}

void csv_header(std::ofstream& f, const Config& cfg, const std::string& columns) {
    f << "# config_hash=" << cfg.hash_hex() << "\n" << columns << "\n";
}

RunOptions chain_options(const Config& cfg) {
    RunOptions ro;
    ro.steps = cfg.get_uint("mcmc.steps", 10000);
    ro.thin = cfg.get_uint("mcmc.thin", 1);
    if (ro.thin == 0) throw std::runtime_error("mcmc.thin must be >= 1");
    ro.sweep_every = cfg.get_uint("mcmc.sweep_every", 0);
    ro.enum_budget = cfg.get_uint("mcmc.enum_budget", 100000);
    ro.burn_in_frac = cfg.get_double("mcmc.burn_in", 0.2);
    if (ro.burn_in_frac < 0 || ro.burn_in_frac >= 1)
        throw std::runtime_error("mcmc.burn_in must lie in [0, 1)");
    return ro;
}

void write_trace(std::ofstream& f, const Config& cfg, const std::vector<TraceRow>& trace) {
    f << "{\"config_hash\":\"" << cfg.hash_hex()
      << "\",\"columns\":[\"step\",\"gamma_t\",\"beta_t\",\"S\",\"M\",\"accepted\"]}\n";
    for (const TraceRow& r : trace) {
        f << "{\"step\":" << r.step << ",\"gamma_t\":" << fmt(r.gamma_t) << ",\"beta_t\":"
          << fmt(r.beta_t) << ",\"S\":" << fmt(r.S) << ",\"M\":" << fmt(r.M) << ",\"accepted\":"
          << (r.accepted ? "true" : "false") << "}\n";
    }
}

void run_sample(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    const PointConfig pts = sample_ppp(s.window, s.density, s.lambda, s.seed);
    std::ofstream f = open_out(opts, "points.csv");
    std::string cols = "index";
    for (int i = 0; i < s.window.dim; ++i) cols += ",x" + std::to_string(i);
    csv_header(f, cfg, cols);
    for (std::size_t i = 0; i < pts.n; ++i) {
        f << i;
        for (double x : pts.point(i)) f << "," << fmt(x);
        f << "\n";
    }
}

void run_mcmc(const Config& cfg, const ExperimentOptions& opts, bool anneal) {
    const Setup s = build_setup(cfg, opts);
    const PointConfig pts = sample_ppp(s.window, s.density, s.lambda, s.seed);
    const std::string summary_name = anneal ? "anneal_summary.csv" : "mcmc_summary.csv";
    const std::string summary_cols =
        "replica,n_points,steps,acceptance_rate,mean_S,mean_M,best_score,best_S,best_M,"
        "gibbs_fallbacks";
    if (pts.n == 0) { // an empty draw has nothing to sample; emit the header only
        std::ofstream f = open_out(opts, summary_name);
        csv_header(f, cfg, summary_cols);
        return;
    }
    const bool parallel = cfg.get_bool("parallel", false);
    const InterferenceField field = interference_field(pts, s.lambda, s.params.alpha, parallel);
    RunOptions ro = chain_options(cfg);
    if (anneal) {
        ro.anneal = true;
        ro.schedule = AnnealSchedule::standard(s.params, s.lambda, pts.n,
                                               cfg.get_double("anneal.c0", -1.0),
                                               cfg.get_double("anneal.gamma_max", -1.0));
    }
    const std::uint64_t replicas = cfg.get_uint("mcmc.replicas", 1);
    if (replicas == 0) throw std::runtime_error("mcmc.replicas must be >= 1");
    const auto results = run_replicas(field, s.params, ro, s.seed, std::size_t(replicas), parallel);

    for (std::size_t r = 0; r < results.size(); ++r) {
        std::ofstream tf = open_out(opts, "trace_r" + std::to_string(r) + ".ndjson");
        write_trace(tf, cfg, results[r].trace);
    }
    std::ofstream f = open_out(opts, summary_name);
    csv_header(f, cfg, summary_cols);
    for (std::size_t r = 0; r < results.size(); ++r) {
        const RunResult& rr = results[r];
        f << r << "," << pts.n << "," << ro.steps << "," << fmt(rr.acceptance_rate) << ","
          << fmt(rr.mean_S) << "," << fmt(rr.mean_M) << "," << fmt(rr.best_score) << ","
          << fmt(rr.best_S) << "," << fmt(rr.best_M) << "," << rr.gibbs_fallbacks << "\n";
    }
}

struct SolveOutcome {
    TrajectorySetting psi;
    std::string mode;
    bool converged = true;
    std::int64_t iterations = 0;
    double residual = 0.0;
};

SolveOutcome solve_setting(const Config& cfg, const Setup& s, bool strict) {
    SolveOutcome out;
    const int m_max = int(cfg.get_int("solver.m_max", 80));
    if (s.params.beta == 0.0) {
        const Beta0Minimizer mini = solve_beta0(s.grid, s.mu, s.params);
        out.psi = beta0_setting(mini, s.mu, m_max);
        out.mode = "beta0";
    } else {
        ELOptions eo;
        eo.damping = cfg.get_double("solver.damping", 0.5);
        eo.tol = cfg.get_double("solver.tol", 1e-12);
        eo.max_iter = cfg.get_int("solver.max_iter", 10000);
        eo.m_max = m_max;
        const ELSolution sol = solve_C_fixed_point(s.grid, s.mu, s.params, eo);
        out.psi = sol.psi;
        out.mode = "fixed-point";
        out.converged = sol.converged;
        out.iterations = std::int64_t(sol.state.iterations);
        out.residual = sol.state.res_C;
        if (!sol.converged && strict)
            throw NoConvergence("fixed-point solver stopped at residual " + fmt(sol.state.res_C) +
                                " after " + std::to_string(sol.state.iterations) + " iterations");
    }
    return out;
}

void run_solve(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    const SolveOutcome sol = solve_setting(cfg, s, opts.strict);

    std::ofstream sf = open_out(opts, "setting.csv");
    sf << "# config_hash=" << cfg.hash_hex() << "\n";
    setting_to_csv(sf, sol.psi);

    const AdmissibilityResult adm = check_admissible(sol.psi, s.mu);
    // an unconverged iterate need not be admissible; report NaN functionals then
    FunctionalValues fv;
    double obj = std::numeric_limits<double>::quiet_NaN();
    if (adm.pass) {
        fv = eval_functionals(sol.psi, s.mu, s.params);
        obj = fv.objective(s.params.gamma, s.params.beta);
    } else {
        fv.I = fv.S = fv.M = std::numeric_limits<double>::quiet_NaN();
    }
    std::ofstream f = open_out(opts, "solve_info.csv");
    csv_header(f, cfg,
               "mode,converged,iterations,residual,res_routes,res_mass,res_inflow,I,S,M,objective");
    f << sol.mode << "," << (sol.converged ? 1 : 0) << "," << sol.iterations << ","
      << fmt(sol.residual) << "," << fmt(adm.res_routes) << "," << fmt(adm.res_mass) << ","
      << fmt(adm.res_inflow) << "," << fmt(fv.I) << "," << fmt(fv.S) << "," << fmt(fv.M) << ","
      << fmt(obj) << "\n";
}

void run_functionals(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    TrajectorySetting psi;
    if (cfg.has("functionals.input")) {
        const std::string path = cfg.get_string("functionals.input");
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot read setting file: " + path);
        psi = setting_from_csv(in, s.grid, s.params.k_max);
    } else {
        psi = solve_setting(cfg, s, opts.strict).psi;
    }
    FunctionalValues fv = eval_functionals(psi, s.mu, s.params);
    fv.J = eval_J(psi.nu, s.mu);
    std::ofstream f = open_out(opts, "functionals.csv");
    csv_header(f, cfg, "I,I_alt,S,M,J,objective");
    f << fmt(fv.I) << "," << fmt(fv.I_alt) << "," << fmt(fv.S) << "," << fmt(fv.M) << ","
      << fmt(fv.J) << "," << fmt(fv.objective(s.params.gamma, s.params.beta)) << "\n";
}

void run_count_check(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    const PointConfig pts = sample_ppp(s.window, s.density, s.lambda, s.seed);
    std::ofstream f = open_out(opts, "count_check.csv");
    csv_header(f, cfg, "kind,class_index,size,predicted,match");
    if (pts.n == 0) return;
    const std::uint64_t budget = cfg.get_uint("budget.enumeration", 20'000'000);
    const bool parallel = cfg.get_bool("parallel", false);

    std::size_t failures = 0;
    for (const bool route_only : {false, true}) {
        const ClassEnumeration ce =
            enumerate_classes(pts, s.grid, s.params.k_max, route_only, budget, parallel);
        for (std::size_t i = 0; i < ce.classes.size(); ++i) {
            const ClassEntry& cls = ce.classes[i];
            const CountTerms ct = count_terms(cls.counts);
            const BigInt predicted = route_only ? ct.route_class_count() : ct.class_count();
            const bool match = predicted == cls.size;
            failures += match ? 0 : 1;
            f << (route_only ? "route" : "full") << "," << i << "," << cls.size << ","
              << predicted.str() << "," << (match ? 1 : 0) << "\n";
        }
    }
    if (failures > 0 && opts.strict)
        throw NoConvergence("counting identity failed on " + std::to_string(failures) + " classes");
}

void run_free_energy(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    if (s.params.beta != 0.0)
        throw std::runtime_error("free-energy requires model.beta = 0 (the partition function "
                                 "factorizes over users only without the congestion term)");
    const std::vector<double> lambdas =
        cfg.has("lambda.list") ? cfg.get_double_list("lambda.list") : std::vector<double>{s.lambda};
    const std::vector<std::int64_t> axes = cfg.has("grid.per_axis_list")
                                               ? cfg.get_int_list("grid.per_axis_list")
                                               : std::vector<std::int64_t>{s.grid.per_axis};
    const std::uint64_t n_seeds = cfg.get_uint("seeds.count", 5);
    if (n_seeds == 0) throw std::runtime_error("seeds.count must be >= 1");
    const bool parallel = cfg.get_bool("parallel", false);

    std::ofstream f = open_out(opts, "free_energy.csv");
    csv_header(f, cfg, "lambda,delta,seeds,mean_log_Z_rate,neg_variational,gap");
    for (const std::int64_t pa : axes) {
        const Grid g = build_grid(s.window, pa);
        GridMeasure mu_g(g);
        mu_g.mass = cell_masses(g, s.density);
        const Beta0Minimizer mini = solve_beta0(g, mu_g, s.params);
        const double neg_variational = -mini.value;
        for (const double lambda : lambdas) {
            if (!(lambda > 0)) throw std::runtime_error("lambda.list entries must be positive");
            double mean_rate = 0.0;
            for (std::uint64_t i = 0; i < n_seeds; ++i) {
                const PointConfig pts = sample_ppp(s.window, s.density, lambda, s.seed + i);
                const InterferenceField field =
                    interference_field(pts, lambda, s.params.alpha, parallel);
                mean_rate += factorized_log_partition_beta0(field, s.params, parallel);
            }
            mean_rate /= double(n_seeds);
            f << fmt(lambda) << "," << fmt(g.delta()) << "," << n_seeds << "," << fmt(mean_rate)
              << "," << fmt(neg_variational) << "," << fmt(std::abs(mean_rate - neg_variational))
              << "\n";
        }
    }
}

void run_distance(const Config& cfg, const ExperimentOptions& opts) {
    const Setup s = build_setup(cfg, opts);
    const PointConfig pts = sample_ppp(s.window, s.density, s.lambda, s.seed);
    if (pts.n == 0) throw std::runtime_error("distance: the point sample is empty at this lambda");
    const bool parallel = cfg.get_bool("parallel", false);
    const InterferenceField field = interference_field(pts, s.lambda, s.params.alpha, parallel);
    const RunOptions ro = chain_options(cfg);
    const RunResult rr = run_chain(field, s.params, ro, s.seed);
    const TrajectorySetting empirical =
        trajectory_setting_of(pts, rr.state.config, s.lambda, s.grid, s.params.k_max);
    const TrajectorySetting solved = solve_setting(cfg, s, opts.strict).psi;
    const SettingDistance sd = setting_distance(empirical, solved);

    std::ofstream f = open_out(opts, "distance.csv");
    csv_header(f, cfg, "kind,level,distance");
    for (std::size_t k = 0; k < sd.d_k.size(); ++k)
        f << "nu," << (k + 1) << "," << fmt(sd.d_k[k]) << "\n";
    for (const auto& [m, d] : sd.d_mum) f << "mum," << m << "," << fmt(d) << "\n";
    f << "total,0," << fmt(sd.d0) << "\n";
}

void escape_json(const std::string& in, std::string& out) {
    for (char c : in) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
}

void error_record(const std::string& category, const std::string& message) {
    std::string esc;
    escape_json(message, esc);
    std::fprintf(stderr, "{\"error\":\"%s\",\"message\":\"%s\"}\n", category.c_str(), esc.c_str());
}

} // namespace

int run_experiment(const ExperimentOptions& opts) {
    try {
        const Config cfg = Config::from_file(opts.config_path);
        validate_keys(cfg);
        if (opts.subcommand == "sample") {
            run_sample(cfg, opts);
        } else if (opts.subcommand == "mcmc") {
            run_mcmc(cfg, opts, false);
        } else if (opts.subcommand == "anneal") {
            run_mcmc(cfg, opts, true);
        } else if (opts.subcommand == "solve") {
            run_solve(cfg, opts);
        } else if (opts.subcommand == "functionals") {
            run_functionals(cfg, opts);
        } else if (opts.subcommand == "count-check") {
            run_count_check(cfg, opts);
        } else if (opts.subcommand == "free-energy") {
            run_free_energy(cfg, opts);
        } else if (opts.subcommand == "distance") {
            run_distance(cfg, opts);
        } else {
            throw std::runtime_error("unknown subcommand '" + opts.subcommand + "'");
        }
        return exit_ok;
    } catch (const BudgetExceeded& e) {
        error_record("budget", e.what());
        return exit_budget_refusal;
    } catch (const NoConvergence& e) {
        error_record("no-convergence", e.what());
        return exit_no_convergence;
    } catch (const std::exception& e) {
        error_record("config", e.what());
        return exit_config_error;
    }
}

} // namespace hopnet
