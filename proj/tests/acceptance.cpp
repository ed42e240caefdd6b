// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all twelve
//   acceptance 3 7        run a subset
// Exit status is nonzero when any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "abc/continuum.hpp"
#include "abc/dynamics.hpp"
#include "abc/generators.hpp"
#include "abc/hydro.hpp"
#include "abc/interchange.hpp"
#include "abc/spectral.hpp"

using namespace abc;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double exact_gap(const SparseGenerator& g) {
    GapOptions o;
    o.method = g.dim <= 600 ? GapMethod::dense : GapMethod::iterative;
    return spectral_gap(g, o).gap;
}

std::vector<double> cosine_grid(int n) {
    std::vector<double> phi(static_cast<std::size_t>(n));
    double m = 0.0;
    for (int x = 0; x < n; ++x) m += phi[x] = std::cos(2.0 * std::numbers::pi * x / n);
    for (double& v : phi) v -= m / n;
    return phi;
}

double loglog_slope(const std::vector<int>& n, const std::vector<double>& gap) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        mx += std::log(n[i]);
        my += std::log(gap[i]);
    }
    mx /= n.size();
    my /= n.size();
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        sxx += (std::log(n[i]) - mx) * (std::log(n[i]) - mx);
        sxy += (std::log(n[i]) - mx) * (std::log(gap[i]) - my);
    }
    return sxy / sxx;
}

// 1 -------------------------------------------------------------------------
void s3_matrix(Outcome& out) {
    const ZeroOracle zero;
    const SparseGenerator g = build_interchange_generator(3, 0.0, zero);
    // Row/column order 123, 132, 231, 213, 312, 321.
    const std::vector<std::vector<std::uint8_t>> order{{1, 2, 3}, {1, 3, 2}, {2, 3, 1},
                                                       {2, 1, 3}, {3, 1, 2}, {3, 2, 1}};
    const int third[6][6] = {{-3, 1, 0, 1, 0, 1}, {1, -3, 1, 0, 1, 0}, {0, 1, -3, 1, 0, 1},
                             {1, 0, 1, -3, 1, 0}, {0, 1, 0, 1, -3, 1}, {1, 0, 1, 0, 1, -3}};
    int mismatches = 0;
    for (int r = 0; r < 6; ++r)
        for (int c = 0; c < 6; ++c) {
            const auto i = permutation_rank(order[r]);
            const auto j = permutation_rank(order[c]);
            const double got = i == j ? g.diag[i] : g.rate_of(i, j);
            // Entries are k/3 with k integer: compare 3·entry with k exactly.
            if (3.0 * got != static_cast<double>(third[r][c])) ++mismatches;
        }
    out.require(mismatches == 0, "matrix entries");
    const auto ev = dense_spectrum(g);
    const double expected[6] = {-2, -1, -1, -1, -1, 0};
    double err = 0.0;
    for (int i = 0; i < 6; ++i) err = std::max(err, std::abs(ev[i] - expected[i]));
    out.require(err < 1e-10, "spectrum");
    out.detail << "entry mismatches " << mismatches << ", spectrum error " << err;
}

// 2 -------------------------------------------------------------------------
void detailed_balance_suite(Outcome& out) {
    int cases = 0;
    std::int64_t worst = 0;
    for (int n : {3, 6, 9})
        for (double beta : {0.0, 1.0, 5.0, 15.0}) {
            const GibbsEnsemble ens = build_ensemble(enumerate(n), beta);
            for (Graph graph : {Graph::ring, Graph::complete}) {
                const auto r = detailed_balance(build_generator(ens, graph));
                worst = std::max(worst, r.exponent_residual);
                out.require(r.exact(), "N=" + std::to_string(n) + " " + to_string(graph));
                ++cases;
            }
        }
    for (int n : {3, 6})
        for (double beta : {0.0, 1.0, 5.0, 15.0}) {
            const ColorblindOracle oracle(n);
            const auto r = detailed_balance(build_interchange_generator(n, beta, oracle));
            worst = std::max(worst, r.exponent_residual);
            out.require(r.exact(), "interchange N=" + std::to_string(n));
            ++cases;
        }
    out.detail << cases << " generators, max exponent residual " << worst;
}

// 3 -------------------------------------------------------------------------
void identity_suite(Outcome& out) {
    double h_err = 0.0;
    std::uint64_t states = 0;
    for (int n : {3, 6, 9}) {
        const StateIndexing idx = enumerate(n);
        for (std::uint64_t i = 0; i < idx.total(); ++i, ++states) {
            const Configuration z = idx.unrank(i);
            h_err = std::max(h_err, std::abs(energy(empirical_density(z)) - hamiltonian(z)));
        }
    }
    // Both sides are sums of multiples of 1/N²; allow only accumulated rounding.
    out.require(h_err < 1e-13, "energy bridge");

    Rng rng = make_stream(2024, 3);
    double rate_err = 0.0;
    int rate_cases = 0;
    while (rate_cases < 1000) {
        const int n = 3 * (1 + static_cast<int>(uniform_index(rng, 10)));
        const Configuration z = random_equal_density(n, rng);
        const auto x = static_cast<std::size_t>(uniform_index(rng, n));
        const std::size_t y = (x + 1) % n;
        if (z[x] == z[y]) continue;
        const double beta = 20.0 * uniform01(rng);
        const double ring = ring_rate(z, x, beta);
        rate_err = std::max(rate_err, std::abs(n * complete_rate(z, x, y, beta) - ring) / ring);
        ++rate_cases;
    }
    out.require(rate_err < 1e-14, "N c_{x,x+1} = c_x");

    double sim_err = 0.0;
    for (int k = 0; k < 10000; ++k) {
        const int n = 4 + static_cast<int>(uniform_index(rng, 5));  // 4..8
        std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(i + 1);
        std::shuffle(v.begin(), v.end(), rng);
        const Permutation sigma(v);
        std::size_t pos[4];
        for (int i = 0; i < 4; ++i) {
            // four distinct positions
            for (;;) {
                pos[i] = uniform_index(rng, n);
                if (std::find(pos, pos + i, pos[i]) == pos + i) break;
            }
        }
        const double beta = 10.0 * uniform01(rng);
        double r;
        if (n % 3 == 0) {
            r = rate_identity_residual(sigma, pos[0], pos[1], pos[2], pos[3], beta, ColorblindOracle(n));
        } else {
            r = rate_identity_residual(sigma, pos[0], pos[1], pos[2], pos[3], beta, ZeroOracle());
        }
        sim_err = std::max(sim_err, r);
    }
    out.require(sim_err <= 1e-14, "rate identity");
    out.detail << "H bridge over " << states << " states err " << h_err << "; rate ratio err " << rate_err
               << "; rate identity max rel err " << sim_err;
}

// 4 -------------------------------------------------------------------------
void comparison_suite(Outcome& out) {
    Rng rng = make_stream(7, 4);
    int cases = 0;
    double worst_ratio = 0.0;
    for (int n : {6, 9})
        for (double beta : {0.0, 2.0, 12.0}) {
            const GibbsEnsemble ens = build_ensemble(enumerate(n), beta);
            const SparseGenerator ring = build_ring_generator(ens);
            const SparseGenerator comp = build_complete_generator(ens);
            std::vector<double> f(ens.size());
            for (int k = 0; k < 100; ++k) {
                for (double& v : f) v = uniform01(rng) - 0.5;
                const auto r = comparison_check(ring, comp, n, beta, f);
                out.require(r.holds, "N=" + std::to_string(n) + " beta=" + std::to_string(beta));
                worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
                ++cases;
            }
        }
    for (double beta : {0.0, 2.0, 12.0}) {
        const GibbsEnsemble ens = build_ensemble(enumerate(3), beta);
        const SparseGenerator ring = build_ring_generator(ens);
        const SparseGenerator comp = build_complete_generator(ens);
        for (std::uint64_t i = 0; i < ens.size(); ++i) {
            std::vector<double> f(ens.size(), 0.0);
            f[i] = 1.0;
            const auto r = comparison_check(ring, comp, 3, beta, f);
            out.require(r.holds, "indicator at N=3");
            worst_ratio = std::max(worst_ratio, r.lhs / r.rhs);
            ++cases;
        }
    }
    out.detail << cases << " functions, max lhs/rhs " << worst_ratio;
}

// 5 -------------------------------------------------------------------------
void subcritical_scaling(Outcome& out) {
    const std::vector<int> sizes{6, 9, 12, 15};
    for (double beta : {0.0, 2.0}) {
        std::vector<double> gaps;
        for (int n : sizes) gaps.push_back(exact_gap(build_ring_generator(build_ensemble(enumerate(n), beta))));
        const double s = loglog_slope(sizes, gaps);
        out.require(s >= -2.2 && s <= -1.8, "slope at beta=" + std::to_string(beta));
        out.detail << "beta=" << beta << " slope " << s << "; ";
    }
    const double g3 = exact_gap(build_ring_generator(build_ensemble(enumerate(3), 0.0)));
    const double g6 = exact_gap(build_ring_generator(build_ensemble(enumerate(6), 0.0)));
    out.require(std::abs(g3 - 3.0) < 1e-8, "N=3 gap");
    out.require(std::abs(g6 - 2.0 * (1.0 - std::cos(std::numbers::pi / 3))) < 1e-8, "N=6 gap");
    out.detail << "gap(3)=" << g3 << " gap(6)=" << g6;
}

// 6 -------------------------------------------------------------------------
void complete_uniformity(Outcome& out) {
    for (double beta : {0.0, 0.1, 0.5}) {
        double base = 0.0, lo = INFINITY, hi = 0.0;
        for (int n : {3, 6, 9, 12}) {
            const double g = exact_gap(build_complete_generator(build_ensemble(enumerate(n), beta)));
            if (n == 3) base = g;
            lo = std::min(lo, g / base);
            hi = std::max(hi, g / base);
        }
        out.require(lo > 0.5 && hi < 2.0, "beta=" + std::to_string(beta));
        out.detail << "beta=" << beta << " gap/gap(3) in [" << lo << ", " << hi << "]; ";
    }
}

// 7 -------------------------------------------------------------------------
void supercritical_upper_bound(Outcome& out) {
    const double beta = 15.0;
    double q3_lo = INFINITY, q3_hi = 0.0, var15 = 0.0;
    for (int n : {6, 9, 12, 15}) {
        const GibbsEnsemble ens = build_ensemble(enumerate(n), beta);
        const SparseGenerator g = build_ring_generator(ens);
        const double gap = exact_gap(g);
        const auto phi = cosine_grid(n);
        const auto f = ens.tabulate([&](SiteCodes c) { return test_function(c, phi); });
        const double var = measure_variance(g, f);
        const double q = dirichlet_half_sum(g, f) / var;
        out.require(q >= gap * (1.0 - 1e-9), "quotient >= gap at N=" + std::to_string(n));
        const double q3 = q * n * n * n;
        q3_lo = std::min(q3_lo, q3);
        q3_hi = std::max(q3_hi, q3);
        if (n == 15) var15 = var;
        out.detail << "N=" << n << " gap " << gap << " quotient " << q << " variance " << var << "; ";
    }
    out.require(q3_hi <= 3.0 * q3_lo, "quotient*N^3 spread");
    const auto sol = std::get<MinimizerSolution>(solve_minimizer(beta, 1024));
    // ∫ds[∫ρ_B(r−s)cos(2πr)dr]² = ½|ρ̂_B(1)|².
    const double target = 0.5 * std::norm(fourier_coefficient(sol.profile.rho[1], 1));
    const double rel = std::abs(var15 - target) / target;
    out.require(rel <= 0.25, "variance limit at N=15");
    out.detail << "quotient*N^3 in [" << q3_lo << ", " << q3_hi << "]; variance(N=15) " << var15 << " vs limit "
               << target << " (rel " << rel << ")";
}

// 8 -------------------------------------------------------------------------
void minimizer_suite(Outcome& out) {
    out.require(std::holds_alternative<NoNontrivialSolution>(solve_minimizer(5.0)), "beta=5 trivial");
    for (double beta : {12.0, 15.0, 20.0}) {
        const auto res = solve_minimizer(beta);
        const auto* s = std::get_if<MinimizerSolution>(&res);
        if (!s) {
            out.require(false, "no solution at beta=" + std::to_string(beta));
            continue;
        }
        double mean_err = 0.0;
        for (double m : s->means) mean_err = std::max(mean_err, std::abs(m - 1.0 / 3));
        out.require(s->period_residual < 1e-8, "period residual");
        out.require(mean_err <= 1e-8, "channel means");
        out.require(s->product_drift < 1e-10, "product drift");
        out.require(s->free_energy < beta / 6.0, "free energy below homogeneous");
        out.require(validate_orbit(s->amplitude, beta).accepted, "solution orbit accepted");
        out.detail << "beta=" << beta << " F=" << s->free_energy << " res " << s->period_residual << "; ";
    }
    // Above 2β_c a period-1/2 orbit exists; it must be recognised and refused.
    const ShootingResult half = shoot_period(25.0, 0.5);
    const OrbitValidation v = validate_orbit(half.amplitude, 25.0);
    out.require(!v.accepted && v.subharmonic == 2, "subharmonic rejection");
    out.detail << "beta=25 P=1/2 orbit: subharmonic " << v.subharmonic;
}

// 9 -------------------------------------------------------------------------
void hydro_suite(Outcome& out) {
    out.require(stationarity_residual(homogeneous_profile(256), 15.0) == 0.0, "homogeneous stationary");
    HydroOptions quiet;
    quiet.output_every = 1L << 40;
    const auto bar = integrate_hydro(homogeneous_profile(64), 15.0, 1.0, quiet);
    double bar_dev = 0.0;
    for (const auto& ch : bar.final_state.rho)
        for (double v : ch) bar_dev = std::max(bar_dev, std::abs(v - 1.0 / 3));
    out.require(bar_dev == 0.0, "homogeneous run unchanged");

    double prev = 0.0, worst_ratio = INFINITY;
    for (std::size_t m : {64, 128, 256, 512}) {
        const auto sol = std::get<MinimizerSolution>(solve_minimizer(15.0, m));
        const double r = stationarity_residual(sol.profile, 15.0);
        if (prev > 0) worst_ratio = std::min(worst_ratio, prev / r);
        prev = r;
    }
    // Second order: each halving of h should divide the residual by about 4.
    out.require(worst_ratio > 3.5, "O(h^2) refinement");

    HydroOptions opts;
    const auto run = integrate_hydro(perturbed_homogeneous(256, 1e-3), 15.0, 20.0, opts);
    out.require(run.free_energy_monotone, "free energy non-increasing");
    out.require(run.max_mass_drift_per_step < 1e-12, "mass drift");

    const ThresholdResult th = instability_threshold(256, 10.0, 12.0);
    const double dev = std::abs(th.beta / critical_beta() - 1.0);
    out.require(dev < 0.02, "instability threshold");
    out.detail << "refinement ratio >= " << worst_ratio << "; max F increase/step "
               << run.max_free_energy_increase_per_step << "; mass drift " << run.max_mass_drift_per_step
               << "; threshold " << th.beta << " (rel dev " << dev << ")";
}

// 10 ------------------------------------------------------------------------
void monte_carlo_suite(Outcome& out) {
    const int n = 9;
    const auto phi = cosine_grid(n);
    const double nn = n * n;
    const std::vector<Observable> obs{
        [nn](SiteCodes c) { return static_cast<double>(kernel::energy_count(c)) / nn; },
        [&phi](SiteCodes c) {
            const double f = test_function(c, phi);
            return f * f;
        }};
    for (double beta : {0.0, 5.0, 15.0}) {
        const GibbsEnsemble ens = build_ensemble(enumerate(n), beta);
        Rng rng = make_stream(10, static_cast<std::uint64_t>(beta));
        McmcOptions opts;
        opts.batches = 40;
        const auto est = mcmc_expectations(obs, n, beta, Graph::ring, 2e5, 2e3, rng, opts);
        for (std::size_t q = 0; q < obs.size(); ++q) {
            const double exact = expectation(ens, obs[q]);
            const double z = (est[q].mean - exact) / est[q].standard_error;
            out.require(std::abs(z) <= 4.0, "beta=" + std::to_string(beta) + " observable " + std::to_string(q));
            out.detail << "beta=" << beta << (q ? " f^2" : " H") << " z=" << z << "; ";
        }
    }
    // Stationarity at N=3: state frequencies at well-separated times.
    for (double beta : {0.0, 5.0}) {
        const GibbsEnsemble ens = build_ensemble(enumerate(3), beta);
        Rng rng = make_stream(11, static_cast<std::uint64_t>(beta));
        KineticSimulator sim(Configuration::parse("ABC"), beta, Graph::ring);
        const double spacing = 10.0;
        const int samples = 20000;
        std::vector<double> counts(ens.size(), 0.0);
        double t = spacing;
        for (int s = 0; s < samples; ++s, t += spacing) {
            while (sim.step(t, rng)) {
            }
            counts[ens.indexing().rank(sim.state())] += 1.0;
        }
        double chi2 = 0.0;
        for (std::uint64_t i = 0; i < ens.size(); ++i) {
            const double e = samples * ens.probability(i);
            chi2 += (counts[i] - e) * (counts[i] - e) / e;
        }
        const boost::math::chi_squared dist(static_cast<double>(ens.size() - 1));
        const double p = boost::math::cdf(boost::math::complement(dist, chi2));
        out.require(p > 0.01, "chi-square at beta=" + std::to_string(beta));
        out.detail << "N=3 beta=" << beta << " chi2 p=" << p << "; ";
    }
}

// 11 ------------------------------------------------------------------------
void projection_suite(Outcome& out) {
    double disc = 0.0;
    for (int n : {3, 6})
        for (double beta : {0.0, 0.5, 2.0, 5.0}) disc = std::max(disc, pushforward_check(n, beta).max_discrepancy);
    out.require(disc < 1e-12, "pushforward");
    for (int n : {3, 6})
        for (double beta : {0.0, 0.5, 2.0}) {
            const double abc = exact_gap(build_complete_generator(build_ensemble(enumerate(n), beta)));
            const ColorblindOracle oracle(n);
            const double perm = exact_gap(build_interchange_generator(n, beta, oracle));
            out.require(abc >= perm * (1.0 - 1e-10), "gap inequality N=" + std::to_string(n));
            out.detail << "N=" << n << " beta=" << beta << " " << abc << ">=" << perm << "; ";
        }
    out.detail << "pushforward max discrepancy " << disc;
}

// 12 ------------------------------------------------------------------------
void lln_probe(Outcome& out) {
    const int n = 120;
    const Observable m1 = [](SiteCodes c) { return order_parameter(c, 1); };
    McmcOptions opts;
    opts.sample_interval = 5.0;
    Rng rng = make_stream(12, 0);
    const auto sub = mcmc_expectation(m1, n, 5.0, Graph::ring, 2e4, 2e3, rng, opts);
    const double threshold = 3.0 / std::sqrt(static_cast<double>(n));
    out.require(sub.mean < threshold, "subcritical modulus");

    std::vector<std::uint8_t> codes(n);
    for (int x = 0; x < n; ++x) codes[x] = static_cast<std::uint8_t>(3 * x / n);
    opts.initial = Configuration(codes);
    Rng rng2 = make_stream(12, 1);
    const auto super = mcmc_expectation(m1, n, 15.0, Graph::ring, 2e4, 2e3, rng2, opts);
    const auto sol = std::get<MinimizerSolution>(solve_minimizer(15.0, 1024));
    const double target = std::abs(fourier_coefficient(sol.profile.rho[1], 1));
    const double rel = std::abs(super.mean - target) / target;
    out.require(rel <= 0.15, "supercritical modulus");
    out.detail << "beta=5 " << sub.mean << " < " << threshold << "; beta=15 " << super.mean << " vs " << target
               << " (rel " << rel << ")";
}

struct Criterion {
    const char* name;
    std::function<void(Outcome&)> body;
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {"S3 interchange matrix and spectrum", s3_matrix},
        {"detailed balance in exponent arithmetic", detailed_balance_suite},
        {"energy bridge, rate scaling and rate identity", identity_suite},
        {"complete/ring Dirichlet form comparison", comparison_suite},
        {"subcritical ring gap scaling", subcritical_scaling},
        {"complete-graph gap uniform in N", complete_uniformity},
        {"supercritical Rayleigh-quotient upper bound", supercritical_upper_bound},
        {"minimizer solver", minimizer_suite},
        {"hydrodynamic scheme", hydro_suite},
        {"Monte Carlo against enumeration", monte_carlo_suite},
        {"colorblind projection", projection_suite},
        {"order-parameter LLN probe", lln_probe},
    };
    std::vector<int> pick;
    for (int i = 1; i < argc; ++i) pick.push_back(std::atoi(argv[i]));
    if (pick.empty())
        for (int i = 1; i <= static_cast<int>(all.size()); ++i) pick.push_back(i);

    int failed = 0;
    for (int id : pick) {
        if (id < 1 || id > static_cast<int>(all.size())) {
            std::fprintf(stderr, "no criterion %d\n", id);
            return 2;
        }
        Outcome out;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            all[id - 1].body(out);
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s criterion %2d: %s (%.1fs) %s\n", out.pass ? "PASS" : "FAIL", id, all[id - 1].name, secs,
                    out.detail.str().c_str());
        std::fflush(stdout);
        failed += !out.pass;
    }
    return failed ? 1 : 0;
}
