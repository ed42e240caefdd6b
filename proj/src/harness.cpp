#include "abc/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <sstream>

#include "CLI11.hpp"

#include "abc/continuum.hpp"
#include "abc/dynamics.hpp"
#include "abc/generators.hpp"
#include "abc/hydro.hpp"
#include "abc/interchange.hpp"
#include "abc/spectral.hpp"

namespace abc::harness {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string full(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void say(const Context& ctx, const std::string& line) {
    if (!ctx.quiet) std::cout << line << '\n';
}

void check_sizes(const std::vector<int>& sizes) {
    if (sizes.empty()) throw UsageError("no N values given");
    for (int n : sizes)
        if (n <= 0 || n % 3 != 0)
            throw UsageError("N=" + std::to_string(n) + " is not a positive multiple of 3 (equal densities need 3 | N)");
}

void check_betas(const std::vector<double>& betas) {
    if (betas.empty()) throw UsageError("no beta values given");
    for (double b : betas)
        if (!(b >= 0.0)) throw UsageError("beta must be nonnegative");
}

GapMethod resolve_method(const std::string& m, std::uint64_t dim) {
    if (m == "auto") return dim <= 600 ? GapMethod::dense : GapMethod::iterative;
    try {
        return parse_gap_method(m);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

Graph graph_of(const std::string& name) {
    try {
        return parse_graph(name);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

void write_plot_script(Context& ctx, const std::string& name, const std::string& body) {
    auto out = open_output(ctx, name);
    out << "# Generated by abc_lab " << kVersion << "; reads the CSV files next to it.\n"
        << "import sys\nimport pandas as pd\nimport matplotlib\nmatplotlib.use('Agg')\n"
        << "import matplotlib.pyplot as plt\n\n"
        << "def load(path):\n    return pd.read_csv(path, comment='#')\n\n"
        << body;
}

std::vector<double> cosine_test_values(const GibbsEnsemble& ens) {
    const int n = ens.sites();
    std::vector<double> phi(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) phi[x] = std::cos(2.0 * std::numbers::pi * x / n);
    // The grid mean of cos(2πx/N) is zero up to round-off; remove it exactly.
    double m = 0.0;
    for (double v : phi) m += v;
    for (double& v : phi) v -= m / n;
    return ens.tabulate([&](SiteCodes c) { return test_function(c, phi); });
}

}  // namespace

std::ofstream open_output(Context& ctx, const std::string& name) {
    std::filesystem::create_directories(ctx.out);
    const auto path = ctx.out / name;
    if (std::filesystem::exists(path) && !ctx.force)
        throw UsageError("refusing to overwrite " + path.string() + " (pass --force)");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    ctx.outputs.push_back(path.string());
    return out;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("line fit needs at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.residual = std::sqrt(ss / n);
    return f;
}

// ---------------------------------------------------------------------------

json cmd_gap(Context& ctx, const GapSpec& spec) {
    check_sizes(spec.sizes);
    check_betas(spec.betas);
    std::vector<Graph> graphs;
    for (const auto& g : spec.graphs) graphs.push_back(graph_of(g));
    if (spec.method != "auto") resolve_method(spec.method, 0);

    auto csv = open_output(ctx, "gap.csv");
    csv << "# schema=1\nN,beta,graph,gap,method,residual,wall_time_s\n";
    json rows = json::array(), failures = json::array();
    for (int n : spec.sizes) {
        for (double beta : spec.betas)
            for (Graph graph : graphs) {
                try {
                    const StateIndexing idx = enumerate(n, ctx.budget);
                    const GibbsEnsemble ens = build_ensemble(idx, beta);
                    const SparseGenerator g = build_generator(ens, graph, Exec::parallel, AssemblyBudget{ctx.budget});
                    GapOptions opts;
                    opts.method = resolve_method(spec.method, g.dim);
                    opts.seed = ctx.seed;
                    const GapResult r = spectral_gap(g, opts);
                    csv << n << ',' << full(beta) << ',' << to_string(graph) << ',' << full(r.gap) << ','
                        << to_string(r.method) << ',' << full(r.residual) << ',' << full(r.wall_time_s) << '\n';
                    rows.push_back({{"N", n},
                                    {"beta", beta},
                                    {"graph", to_string(graph)},
                                    {"gap", r.gap},
                                    {"method", to_string(r.method)},
                                    {"residual", r.residual},
                                    {"iterations", r.iterations}});
                    say(ctx, "N=" + std::to_string(n) + " beta=" + num(beta) + " " + to_string(graph) +
                                 " gap=" + full(r.gap));
                    if (spec.export_matrix) {
                        auto mtx = open_output(ctx, "generator_" + to_string(graph) + "_N" + std::to_string(n) +
                                                        "_beta" + num(beta) + ".txt");
                        write_coordinate(g, mtx);
                    }
                } catch (const BudgetExceeded& e) {
                    std::cerr << "N=" << n << ": " << e.what() << '\n';
                    failures.push_back({{"N", n}, {"beta", beta}, {"graph", to_string(graph)}, {"error", e.what()}});
                }
            }
    }
    write_plot_script(ctx, "plot_gap.py",
                      "d = load('gap.csv')\n"
                      "for (b, g), part in d.groupby(['beta', 'graph']):\n"
                      "    plt.loglog(part.N, part.gap, 'o-', label=f'beta={b} {g}')\n"
                      "plt.xlabel('N'); plt.ylabel('gap'); plt.legend(); plt.savefig('gap.png')\n");
    return {{"rows", rows}, {"failures", failures}};
}

json cmd_scaling(Context& ctx, const ScalingSpec& spec) {
    check_sizes(spec.sizes);
    if (spec.sizes.size() < 4) throw UsageError("scaling needs at least 4 values of N");
    check_betas({spec.beta});
    const Graph graph = graph_of(spec.graph);
    auto csv = open_output(ctx, "scaling.csv");
    csv << "# schema=1\nN,beta,graph,gap,method,quotient,quotient_N3,variance\n";
    std::vector<double> log_n, log_gap, log_q;
    json rows = json::array();
    double q3_min = INFINITY, q3_max = 0.0;
    bool bound_holds = true;
    for (int n : spec.sizes) {
        const StateIndexing idx = enumerate(n, ctx.budget);
        const GibbsEnsemble ens = build_ensemble(idx, spec.beta);
        const SparseGenerator g = build_generator(ens, graph, Exec::parallel, AssemblyBudget{ctx.budget});
        GapOptions opts;
        opts.method = resolve_method(spec.method, g.dim);
        opts.seed = ctx.seed;
        const GapResult r = spectral_gap(g, opts);
        const std::vector<double> f = cosine_test_values(ens);
        const double var = measure_variance(g, f);
        const double q = dirichlet_half_sum(g, f) / var;
        const double q3 = q * n * n * n;
        q3_min = std::min(q3_min, q3);
        q3_max = std::max(q3_max, q3);
        bound_holds = bound_holds && q >= r.gap * (1.0 - 1e-9);
        log_n.push_back(std::log(n));
        log_gap.push_back(std::log(r.gap));
        log_q.push_back(std::log(q));
        csv << n << ',' << full(spec.beta) << ',' << to_string(graph) << ',' << full(r.gap) << ','
            << to_string(r.method) << ',' << full(q) << ',' << full(q3) << ',' << full(var) << '\n';
        rows.push_back({{"N", n}, {"gap", r.gap}, {"quotient", q}, {"quotient_N3", q3}, {"variance", var}});
        say(ctx, "N=" + std::to_string(n) + " gap=" + full(r.gap) + " quotient=" + full(q));
    }
    const LineFit gap_fit = fit_line(log_n, log_gap);
    const LineFit q_fit = fit_line(log_n, log_q);
    say(ctx, "log-log slope of gap: " + full(gap_fit.slope) + " (residual " + num(gap_fit.residual) + ")");
    write_plot_script(ctx, "plot_scaling.py",
                      "d = load('scaling.csv')\n"
                      "plt.loglog(d.N, d.gap, 'o-', label='gap')\n"
                      "plt.loglog(d.N, d.quotient, 's--', label='Rayleigh quotient, cos(2 pi r)')\n"
                      "plt.xlabel('N'); plt.legend(); plt.savefig('scaling.png')\n");
    return {{"rows", rows},
            {"gap_slope", gap_fit.slope},
            {"gap_intercept", gap_fit.intercept},
            {"gap_fit_residual", gap_fit.residual},
            {"quotient_slope", q_fit.slope},
            {"quotient_N3_min", q3_min},
            {"quotient_N3_max", q3_max},
            {"quotient_bounds_gap", bound_holds}};
}

json cmd_minimizer(Context& ctx, const MinimizerSpec& spec) {
    check_betas(spec.betas);
    if (spec.grid < 16) throw UsageError("minimizer grid must be at least 16");
    json records = json::array();
    for (double beta : spec.betas) {
        if (!(beta > 0.0)) throw UsageError("minimizer needs beta > 0");
        const MinimizerResult res = solve_minimizer(beta, static_cast<std::size_t>(spec.grid));
        if (const auto* sol = std::get_if<MinimizerSolution>(&res)) {
            auto csv = open_output(ctx, "minimizer_beta" + num(beta) + ".csv");
            write_profile_csv(sol->profile, csv);
            json rec = sol->record();
            rec["solution"] = "nontrivial";
            rec["fourier_amplitude_b"] = std::abs(fourier_coefficient(sol->profile.rho[1], 1));
            records.push_back(rec);
            say(ctx, "beta=" + num(beta) + " period residual " + num(sol->period_residual) + " F=" +
                         full(sol->free_energy) + " (homogeneous " + full(beta / 6.0) + ")");
        } else {
            const auto& none = std::get<NoNontrivialSolution>(res);
            records.push_back({{"beta", beta},
                               {"solution", "none"},
                               {"small_amplitude_period", none.small_amplitude_period},
                               {"critical_beta", critical_beta()}});
            say(ctx, "beta=" + num(beta) + ": homogeneous profile is the minimizer");
        }
    }
    auto js = open_output(ctx, "minimizer.json");
    js << records.dump(2) << '\n';
    write_plot_script(ctx, "plot_minimizer.py",
                      "import glob\n"
                      "for path in sorted(glob.glob('minimizer_beta*.csv')):\n"
                      "    d = load(path)\n"
                      "    for ch in ['rho_A', 'rho_B', 'rho_C']:\n"
                      "        plt.plot(d.r, d[ch], label=f'{path} {ch}')\n"
                      "plt.xlabel('r'); plt.legend(fontsize=6); plt.savefig('minimizer.png')\n");
    return {{"records", records}};
}

json cmd_hydro(Context& ctx, const HydroSpec& spec) {
    if (spec.grid < 8) throw UsageError("hydro grid must be at least 8");
    if (!(spec.beta >= 0.0)) throw UsageError("beta must be nonnegative");
    HydroOptions opts;
    try {
        opts.scheme = parse_hydro_scheme(spec.scheme);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    opts.dt = spec.dt;
    opts.exec = Exec::parallel;
    json rec;
    if (spec.threshold) {
        const ThresholdResult th = instability_threshold(static_cast<std::size_t>(spec.grid), spec.threshold_lo,
                                                         spec.threshold_hi);
        const double h = 1.0 / spec.grid;
        rec["threshold"] = {{"beta", th.beta},
                            {"lower", th.lower},
                            {"upper", th.upper},
                            {"runs", th.runs},
                            {"critical_beta", critical_beta()},
                            {"relative_deviation", th.beta / critical_beta() - 1.0},
                            {"discrete_prediction", 2.0 * std::sqrt(3.0) * std::tan(std::numbers::pi * h) / h}};
        say(ctx, "k=1 instability threshold " + full(th.beta) + " vs 2*pi*sqrt(3) = " + full(critical_beta()));
    }
    const auto m = static_cast<std::size_t>(spec.grid);
    DensityProfile init;
    if (spec.init == "homogeneous") {
        init = homogeneous_profile(m);
    } else if (spec.init == "perturbed") {
        init = perturbed_homogeneous(m, spec.eps, spec.mode);
    } else if (spec.init == "minimizer") {
        const MinimizerResult res = solve_minimizer(spec.beta, m);
        if (!std::holds_alternative<MinimizerSolution>(res))
            throw UsageError("init=minimizer needs beta above 2*pi*sqrt(3)");
        init = std::get<MinimizerSolution>(res).profile;
    } else {
        throw UsageError("unknown init '" + spec.init + "' (expected homogeneous, perturbed or minimizer)");
    }
    const HydroRun run = integrate_hydro(init, spec.beta, spec.horizon, opts);
    auto csv = open_output(ctx, "hydro.csv");
    write_hydro_csv(run, csv);
    auto prof = open_output(ctx, "hydro_final.csv");
    write_profile_csv(run.final_state, prof);
    write_plot_script(ctx, "plot_hydro.py",
                      "d = load('hydro.csv')\n"
                      "fig, ax = plt.subplots(2, 1, sharex=True)\n"
                      "ax[0].plot(d.t, d.free_energy); ax[0].set_ylabel('free energy')\n"
                      "for k in range(1, 5):\n"
                      "    ax[1].semilogy(d.t, d[f'mode_{k}'] + 1e-300, label=f'k={k}')\n"
                      "ax[1].legend(); ax[1].set_xlabel('t'); fig.savefig('hydro.png')\n");
    rec["run"] = {{"steps", run.steps},
                  {"dt", run.dt},
                  {"time", run.time},
                  {"max_mass_drift_per_step", run.max_mass_drift_per_step},
                  {"max_simplex_defect", run.max_simplex_defect},
                  {"min_density", run.min_density},
                  {"free_energy_monotone", run.free_energy_monotone},
                  {"max_free_energy_increase_per_step", run.max_free_energy_increase_per_step},
                  {"final_free_energy", run.trace.back().free_energy},
                  {"final_residual", run.trace.back().residual}};
    say(ctx, "hydro: " + std::to_string(run.steps) + " steps, final F=" + full(run.trace.back().free_energy));
    return rec;
}

namespace {

struct ReplicaOutcome {
    std::vector<EstimateWithError> est;
    std::vector<std::array<double, 7>> series;  // t, H, f, |m1|..|m4|
};

}  // namespace

json cmd_sample(Context& ctx, const SampleSpec& spec) {
    check_sizes({spec.sites});
    check_betas({spec.beta});
    const Graph graph = graph_of(spec.graph);
    if (spec.replicas < 1) throw UsageError("need at least one replica");
    if (!(spec.interval > 0.0)) throw UsageError("sampling interval must be positive");
    if (!(spec.burn_in >= 0.0 && spec.burn_in < spec.horizon)) throw UsageError("burn-in must lie in [0, horizon)");
    const int n = spec.sites;
    std::vector<double> phi(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) phi[x] = std::cos(2.0 * std::numbers::pi * x / n);
    double pm = 0.0;
    for (double v : phi) pm += v;
    for (double& v : phi) v -= pm / n;
    const double nn = static_cast<double>(n) * n;
    std::vector<Observable> obs{
        [nn](SiteCodes c) { return static_cast<double>(kernel::energy_count(c)) / nn; },
        [&phi](SiteCodes c) {
            const double f = test_function(c, phi);
            return f * f;
        },
        [](SiteCodes c) { return order_parameter(c, 1); }};

    std::vector<ReplicaOutcome> out(static_cast<std::size_t>(spec.replicas));
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < spec.replicas; ++r) {
        Rng rng = make_stream(ctx.seed, static_cast<std::uint64_t>(r));
        McmcOptions opts;
        opts.batches = spec.batches;
        opts.sample_interval = spec.interval;
        auto& series = out[r].series;
        opts.on_sample = [&](double t, SiteCodes c) {
            series.push_back({t, static_cast<double>(kernel::energy_count(c)) / nn, test_function(c, phi),
                              order_parameter(c, 1), order_parameter(c, 2), order_parameter(c, 3),
                              order_parameter(c, 4)});
        };
        out[r].est = mcmc_expectations(obs, n, spec.beta, graph, spec.horizon, spec.burn_in, rng, opts);
    }

    auto csv = open_output(ctx, "sample.csv");
    csv << "# schema=1\nreplica,t,H,f,order_1,order_2,order_3,order_4\n";
    for (int r = 0; r < spec.replicas; ++r)
        for (const auto& row : out[r].series) {
            csv << r;
            for (double v : row) csv << ',' << full(v);
            csv << '\n';
        }
    const char* names[] = {"H", "f_squared", "order_1"};
    json est = json::object();
    for (std::size_t q = 0; q < obs.size(); ++q) {
        json reps = json::array();
        double mean = 0.0, var = 0.0;
        for (int r = 0; r < spec.replicas; ++r) {
            const auto& e = out[r].est[q];
            reps.push_back({{"mean", e.mean}, {"standard_error", e.standard_error}, {"effective_samples", e.effective_samples}});
            mean += e.mean;
            var += e.standard_error * e.standard_error;
        }
        mean /= spec.replicas;
        est[names[q]] = {{"replicas", reps},
                         {"mean", mean},
                         {"standard_error", std::sqrt(var) / spec.replicas},
                         {"method", out[0].est[q].method}};
    }
    auto js = open_output(ctx, "sample.json");
    js << est.dump(2) << '\n';
    write_plot_script(ctx, "plot_sample.py",
                      "d = load('sample.csv')\n"
                      "for r, part in d.groupby('replica'):\n"
                      "    plt.plot(part.t, part.order_1, lw=0.5, label=f'replica {r}')\n"
                      "plt.xlabel('t'); plt.ylabel('|order parameter k=1|'); plt.legend(); plt.savefig('sample.png')\n");
    say(ctx, "H: " + full(est["H"]["mean"].get<double>()) + " +- " + num(est["H"]["standard_error"].get<double>()));
    return {{"estimates", est}};
}

json cmd_lln(Context& ctx, const LlnSpec& spec) {
    check_sizes({spec.sites});
    check_betas(spec.betas);
    if (spec.replicas < 1) throw UsageError("need at least one replica");
    if (!(spec.burn_in >= 0.0 && spec.burn_in < spec.horizon)) throw UsageError("burn-in must lie in [0, horizon)");
    const int n = spec.sites;
    const double threshold = 3.0 / std::sqrt(static_cast<double>(n));
    auto csv = open_output(ctx, "lln.csv");
    csv << "# schema=1\nN,beta,replica,mean_modulus,standard_error\n";
    json rows = json::array();
    for (double beta : spec.betas) {
        double target = 0.0;
        const bool super = beta > critical_beta();
        if (super) {
            const auto res = solve_minimizer(beta, 1024);
            target = std::abs(fourier_coefficient(std::get<MinimizerSolution>(res).profile.rho[1], 1));
        }
        std::vector<EstimateWithError> est(static_cast<std::size_t>(spec.replicas));
#pragma omp parallel for schedule(dynamic)
        for (int r = 0; r < spec.replicas; ++r) {
            Rng rng = make_stream(ctx.seed, static_cast<std::uint64_t>(r));
            McmcOptions opts;
            opts.sample_interval = spec.interval;
            if (super) {
                // Segregated start: the modulus relaxes on the diffusive scale
                // instead of waiting for nucleation from a flat state.
                std::vector<std::uint8_t> codes(static_cast<std::size_t>(n));
                for (int x = 0; x < n; ++x) codes[x] = static_cast<std::uint8_t>(3 * x / n);
                opts.initial = Configuration(std::move(codes));
            }
            const Observable m1 = [](SiteCodes c) { return order_parameter(c, 1); };
            est[r] = mcmc_expectation(m1, n, beta, Graph::ring, spec.horizon, spec.burn_in, rng, opts);
        }
        double mean = 0.0, var = 0.0;
        for (int r = 0; r < spec.replicas; ++r) {
            csv << n << ',' << full(beta) << ',' << r << ',' << full(est[r].mean) << ',' << full(est[r].standard_error)
                << '\n';
            mean += est[r].mean;
            var += est[r].standard_error * est[r].standard_error;
        }
        mean /= spec.replicas;
        json row = {{"beta", beta}, {"mean_modulus", mean}, {"standard_error", std::sqrt(var) / spec.replicas}};
        if (super) {
            row["target_amplitude"] = target;
            row["relative_error"] = std::abs(mean - target) / target;
            row["within_15_percent"] = std::abs(mean - target) <= 0.15 * target;
        } else {
            row["threshold"] = threshold;
            row["below_threshold"] = mean < threshold;
        }
        rows.push_back(row);
        say(ctx, "beta=" + num(beta) + " mean |order_1| = " + full(mean) +
                     (super ? " target " + full(target) : " threshold " + full(threshold)));
    }
    write_plot_script(ctx, "plot_lln.py",
                      "d = load('lln.csv')\n"
                      "g = d.groupby('beta').mean_modulus.mean()\n"
                      "plt.plot(g.index, g.values, 'o-'); plt.xlabel('beta'); plt.ylabel('mean |order_1|')\n"
                      "plt.savefig('lln.png')\n");
    return {{"rows", rows},
            {"caveat",
             "the Gibbs measure above the critical point is a uniform mixture over translates of the minimizer; "
             "only the modulus of the Fourier mode concentrates, its phase does not"}};
}

json cmd_interchange(Context& ctx, const InterchangeSpec& spec) {
    if (spec.sites < 2) throw UsageError("interchange needs N >= 2");
    check_betas(spec.betas);
    InterchangeLimits limits;
    if (spec.allow_eight) limits.max_sites = 8;
    std::unique_ptr<EnergyOracle> oracle;
    try {
        oracle = make_oracle(spec.oracle, spec.sites);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    json records = json::array();
    auto csv = open_output(ctx, "interchange.csv");
    csv << "# schema=1\nN,beta,oracle,gap,method,residual,abc_complete_gap,pushforward_discrepancy\n";
    for (double beta : spec.betas) {
        const SparseGenerator g = build_interchange_generator(spec.sites, beta, *oracle, Exec::parallel, limits);
        auto mtx = open_output(ctx, "interchange_N" + std::to_string(spec.sites) + "_beta" + num(beta) + ".txt");
        write_coordinate(g, mtx);
        GapOptions opts;
        opts.method = g.dim <= opts.dense_cap ? GapMethod::dense : GapMethod::iterative;
        opts.seed = ctx.seed;
        const GapResult r = spectral_gap(g, opts);
        const DetailedBalanceReport db = detailed_balance(g);
        json rec = {{"N", spec.sites},
                    {"beta", beta},
                    {"oracle", oracle->name()},
                    {"states", g.dim},
                    {"gap", r.gap},
                    {"method", to_string(r.method)},
                    {"detailed_balance_exact", db.exact()},
                    {"detailed_balance_float_residual", db.float_residual}};
        if (g.dim <= 120) rec["spectrum"] = dense_spectrum(g);
        double abc_gap = NAN, discrepancy = NAN;
        if (spec.oracle == "colorblind" && spec.sites % 3 == 0) {
            const StateIndexing idx = enumerate(spec.sites, ctx.budget);
            const GibbsEnsemble ens = build_ensemble(idx, beta);
            const SparseGenerator lc = build_complete_generator(ens);
            GapOptions lo;
            lo.method = lc.dim <= lo.dense_cap ? GapMethod::dense : GapMethod::iterative;
            abc_gap = spectral_gap(lc, lo).gap;
            discrepancy = pushforward_check(spec.sites, beta).max_discrepancy;
            rec["abc_complete_gap"] = abc_gap;
            rec["projection_gap_inequality"] = abc_gap >= r.gap * (1.0 - 1e-10);
            rec["pushforward_discrepancy"] = discrepancy;
        }
        csv << spec.sites << ',' << full(beta) << ',' << oracle->name() << ',' << full(r.gap) << ','
            << to_string(r.method) << ',' << full(r.residual) << ',' << full(abc_gap) << ',' << full(discrepancy)
            << '\n';
        records.push_back(rec);
        say(ctx, "S_" + std::to_string(spec.sites) + " beta=" + num(beta) + " gap=" + full(r.gap));
    }
    return {{"records", records}};
}

json cmd_selftest(Context& ctx) {
    json checks = json::array();
    bool all = true;
    auto check = [&](const std::string& name, bool ok, double value) {
        all = all && ok;
        checks.push_back({{"check", name}, {"passed", ok}, {"value", value}});
        say(ctx, std::string(ok ? "PASS " : "FAIL ") + name + " (" + full(value) + ")");
    };
    {
        const GibbsEnsemble ens = build_ensemble(enumerate(3), 0.0);
        GapOptions o;
        o.method = GapMethod::dense;
        const double ring = spectral_gap(build_ring_generator(ens), o).gap;
        const double comp = spectral_gap(build_complete_generator(ens), o).gap;
        check("ring gap N=3 beta=0 equals 3", std::abs(ring - 3.0) < 1e-10, ring);
        check("complete gap N=3 beta=0 equals 1", std::abs(comp - 1.0) < 1e-10, comp);
    }
    {
        const ZeroOracle zero;
        const auto ev = dense_spectrum(build_interchange_generator(3, 0.0, zero));
        const double expected[] = {-2, -1, -1, -1, -1, 0};
        double err = 0.0;
        for (int i = 0; i < 6; ++i) err = std::max(err, std::abs(ev[i] - expected[i]));
        check("S_3 interchange spectrum {0, -1 x4, -2}", err < 1e-10, err);
    }
    {
        const GibbsEnsemble ens = build_ensemble(enumerate(6), 5.0);
        const auto a = detailed_balance(build_ring_generator(ens));
        const auto b = detailed_balance(build_complete_generator(ens));
        check("detailed balance N=6 beta=5 exact", a.exact() && b.exact(),
              static_cast<double>(a.exponent_residual + b.exponent_residual));
    }
    {
        const StateIndexing idx = enumerate(6);
        double err = 0.0;
        for (std::uint64_t i = 0; i < idx.total(); ++i) {
            const Configuration z = idx.unrank(i);
            err = std::max(err, std::abs(energy(empirical_density(z)) - hamiltonian(z)));
        }
        check("energy of empirical density equals H_N at N=6", err < 1e-12, err);
    }
    {
        const auto res = solve_minimizer(15.0, 256);
        const auto* sol = std::get_if<MinimizerSolution>(&res);
        check("minimizer beta=15 period residual", sol && sol->period_residual < 1e-8,
              sol ? sol->period_residual : 1.0);
    }
    check("homogeneous profile is stationary", stationarity_residual(homogeneous_profile(64), 15.0) == 0.0,
          stationarity_residual(homogeneous_profile(64), 15.0));
    {
        const Configuration z = Configuration::parse("ABCABCABC");
        Rng r1 = make_stream(ctx.seed), r2 = make_stream(ctx.seed);
        const auto t1 = simulate(z, 5.0, 50.0, Graph::ring, r1);
        const auto t2 = simulate(z, 5.0, 50.0, Graph::ring, r2);
        check("trajectory determinism", t1.events == t2.events, static_cast<double>(t1.events.size()));
    }
    return {{"checks", checks}, {"passed", all}};
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for the ABC model on a ring at equal densities", "abc_lab"};
    app.set_config("--config", "", "Configuration file (key = value, one [section] per command)");
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Context ctx;
    double budget_gib = 2.0;
    app.add_option("--seed", ctx.seed, "64-bit master seed")->capture_default_str();
    std::string out_dir = "out";
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--workers", ctx.workers, "Worker threads (0: OpenMP default)")->check(CLI::NonNegativeNumber);
    app.add_option("--budget-gib", budget_gib, "Memory budget for enumerated state spaces")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_flag("--force", ctx.force, "Overwrite existing outputs");

    GapSpec gap;
    auto* c_gap = app.add_subcommand("gap", "Exact spectral gaps over (N, beta, graph)");
    c_gap->add_option("--N", gap.sizes, "Site counts")->delimiter(',');
    c_gap->add_option("--beta", gap.betas, "Inverse temperatures")->delimiter(',');
    c_gap->add_option("--graph", gap.graphs, "ring and/or complete")->delimiter(',');
    c_gap->add_option("--method", gap.method, "auto, dense or iterative");
    c_gap->add_flag("--export-matrix", gap.export_matrix, "Write generators in coordinate format");

    ScalingSpec scaling;
    auto* c_scaling = app.add_subcommand("scaling", "Log-log gap scaling over an N sweep");
    c_scaling->add_option("--N", scaling.sizes, "Site counts (at least 4)")->delimiter(',');
    c_scaling->add_option("--beta", scaling.beta, "Inverse temperature");
    c_scaling->add_option("--graph", scaling.graph, "ring or complete");
    c_scaling->add_option("--method", scaling.method, "auto, dense or iterative");

    MinimizerSpec mini;
    auto* c_min = app.add_subcommand("minimizer", "Free-energy minimizer by periodic-orbit shooting");
    c_min->add_option("--beta", mini.betas, "Inverse temperatures")->delimiter(',');
    c_min->add_option("--grid", mini.grid, "Samples per period");

    HydroSpec hydro;
    auto* c_hydro = app.add_subcommand("hydro", "Integrate the hydrodynamic equations");
    c_hydro->add_option("--beta", hydro.beta, "Inverse temperature");
    c_hydro->add_option("--grid", hydro.grid, "Grid size M");
    c_hydro->add_option("--horizon", hydro.horizon, "Final time");
    c_hydro->add_option("--scheme", hydro.scheme, "semi-implicit or explicit");
    c_hydro->add_option("--dt", hydro.dt, "Time step (0: scheme default)");
    c_hydro->add_option("--init", hydro.init, "homogeneous, perturbed or minimizer");
    c_hydro->add_option("--eps", hydro.eps, "Perturbation amplitude");
    c_hydro->add_option("--mode", hydro.mode, "Perturbation mode");
    c_hydro->add_flag("--threshold", hydro.threshold, "Also bisect the k=1 instability threshold");
    c_hydro->add_option("--threshold-lo", hydro.threshold_lo, "Lower bracket for the threshold");
    c_hydro->add_option("--threshold-hi", hydro.threshold_hi, "Upper bracket for the threshold");

    SampleSpec sample;
    auto* c_sample = app.add_subcommand("sample", "Kinetic Monte Carlo estimates of Gibbs expectations");
    c_sample->add_option("--N", sample.sites, "Site count");
    c_sample->add_option("--beta", sample.beta, "Inverse temperature");
    c_sample->add_option("--graph", sample.graph, "ring or complete");
    c_sample->add_option("--horizon", sample.horizon, "Simulated time");
    c_sample->add_option("--burn-in", sample.burn_in, "Discarded initial time");
    c_sample->add_option("--interval", sample.interval, "Sampling interval");
    c_sample->add_option("--replicas", sample.replicas, "Independent replicas");
    c_sample->add_option("--batches", sample.batches, "Batch-means batches");

    LlnSpec lln;
    auto* c_lln = app.add_subcommand("lln", "Order-parameter probe of segregation");
    c_lln->add_option("--N", lln.sites, "Site count");
    c_lln->add_option("--beta", lln.betas, "Inverse temperatures")->delimiter(',');
    c_lln->add_option("--horizon", lln.horizon, "Simulated time");
    c_lln->add_option("--burn-in", lln.burn_in, "Discarded initial time");
    c_lln->add_option("--interval", lln.interval, "Sampling interval");
    c_lln->add_option("--replicas", lln.replicas, "Independent replicas");

    InterchangeSpec inter;
    auto* c_inter = app.add_subcommand("interchange", "Interchange process on S_N");
    c_inter->add_option("--N", inter.sites, "Site count (<= 7, 8 with --allow-eight)");
    c_inter->add_option("--beta", inter.betas, "Inverse temperatures")->delimiter(',');
    c_inter->add_option("--oracle", inter.oracle, "zero or colorblind");
    c_inter->add_flag("--allow-eight", inter.allow_eight, "Permit N = 8 (40320 states)");

    auto* c_self = app.add_subcommand("selftest", "Quick end-to-end checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    ctx.out = out_dir;
    ctx.budget = MemoryBudget::gib(budget_gib);
    set_worker_count(ctx.workers);

    const auto t0 = std::chrono::steady_clock::now();
    json record, params;
    std::string command;
    try {
        if (c_gap->parsed()) {
            command = "gap";
            params = {{"N", gap.sizes}, {"beta", gap.betas}, {"graph", gap.graphs}, {"method", gap.method},
                      {"export_matrix", gap.export_matrix}};
            record = cmd_gap(ctx, gap);
        } else if (c_scaling->parsed()) {
            command = "scaling";
            params = {{"N", scaling.sizes}, {"beta", scaling.beta}, {"graph", scaling.graph}, {"method", scaling.method}};
            record = cmd_scaling(ctx, scaling);
        } else if (c_min->parsed()) {
            command = "minimizer";
            params = {{"beta", mini.betas}, {"grid", mini.grid}};
            record = cmd_minimizer(ctx, mini);
        } else if (c_hydro->parsed()) {
            command = "hydro";
            params = {{"beta", hydro.beta},   {"grid", hydro.grid}, {"horizon", hydro.horizon},
                      {"scheme", hydro.scheme}, {"dt", hydro.dt},   {"init", hydro.init},
                      {"eps", hydro.eps},       {"mode", hydro.mode}, {"threshold", hydro.threshold},
                      {"threshold_lo", hydro.threshold_lo}, {"threshold_hi", hydro.threshold_hi}};
            record = cmd_hydro(ctx, hydro);
        } else if (c_sample->parsed()) {
            command = "sample";
            params = {{"N", sample.sites},         {"beta", sample.beta},         {"graph", sample.graph},
                      {"horizon", sample.horizon}, {"burn_in", sample.burn_in},   {"interval", sample.interval},
                      {"replicas", sample.replicas}, {"batches", sample.batches}};
            record = cmd_sample(ctx, sample);
        } else if (c_lln->parsed()) {
            command = "lln";
            params = {{"N", lln.sites},       {"beta", lln.betas},         {"horizon", lln.horizon},
                      {"burn_in", lln.burn_in}, {"interval", lln.interval}, {"replicas", lln.replicas}};
            record = cmd_lln(ctx, lln);
        } else if (c_inter->parsed()) {
            command = "interchange";
            params = {{"N", inter.sites}, {"beta", inter.betas}, {"oracle", inter.oracle},
                      {"allow_eight", inter.allow_eight}};
            record = cmd_interchange(ctx, inter);
        } else if (c_self->parsed()) {
            command = "selftest";
            record = cmd_selftest(ctx);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        auto manifest = open_output(ctx, command + ".manifest.json");
        json m = {{"tool", "abc_lab"},
                  {"version", kVersion},
                  {"command", command},
                  {"seed", ctx.seed},
                  {"workers", ctx.workers},
                  {"budget_bytes", ctx.budget.bytes},
                  {"parameters", params},
                  {"outputs", ctx.outputs},
                  {"record", record},
                  {"wall_time_s", wall}};
        manifest << m.dump(2) << '\n';
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const NonConvergence& e) {
        std::cerr << "numerical failure: " << e.what() << " (residual " << e.residual() << ", " << e.iterations()
                  << " iterations)\n";
        return kNumerical;
    } catch (const HydroFailure& e) {
        std::cerr << "numerical failure at step " << e.step() << ": " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    }
    if (command == "selftest" && !record["passed"].get<bool>()) return kNumerical;
    if (command == "gap" && !record["failures"].empty()) return kNumerical;
    return kOk;
}

}  // namespace abc::harness
