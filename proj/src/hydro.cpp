#include "abc/hydro.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace abc {

std::string to_string(HydroScheme s) { return s == HydroScheme::explicit_euler ? "explicit" : "semi-implicit"; }

HydroScheme parse_hydro_scheme(const std::string& name) {
    if (name == "explicit") return HydroScheme::explicit_euler;
    if (name == "semi-implicit") return HydroScheme::semi_implicit;
    throw std::invalid_argument("unknown hydro scheme '" + name + "' (expected explicit or semi-implicit)");
}

namespace {

// Drift divergence −∂[βρ_α(ρ_γ − ρ_δ)] with face-averaged values; the three
// face fluxes sum to zero identically.
void drift(const DensityProfile& p, double beta, std::array<std::vector<double>, 3>& out, Exec exec) {
    const auto m = static_cast<std::int64_t>(p.size());
    const double h = 1.0 / static_cast<double>(m);
    const auto& a = p.rho[0];
    const auto& b = p.rho[1];
    const auto& c = p.rho[2];
    std::array<std::vector<double>, 3> flux;
    for (auto& f : flux) f.resize(static_cast<std::size_t>(m));
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::int64_t j = 0; j < m; ++j) {
        const std::int64_t k = j + 1 == m ? 0 : j + 1;
        const double fa = 0.5 * (a[j] + a[k]), fb = 0.5 * (b[j] + b[k]), fc = 0.5 * (c[j] + c[k]);
        flux[0][j] = beta * fa * (fc - fb);
        flux[1][j] = beta * fb * (fa - fc);
        flux[2][j] = beta * fc * (fb - fa);
    }
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::int64_t j = 0; j < m; ++j) {
        const std::int64_t l = j == 0 ? m - 1 : j - 1;
        for (int s = 0; s < 3; ++s) out[s][j] = -(flux[s][j] - flux[s][l]) / h;
    }
}

// Solves the symmetric circulant tridiagonal system with diagonal d and
// off-diagonals e by Sherman–Morrison around a Thomas sweep.
void cyclic_solve(double d, double e, std::vector<double>& x) {
    const std::size_t n = x.size();
    const double gamma = -d;
    std::vector<double> diag(n, d), cp(n), u(n, 0.0);
    diag[0] = d - gamma;
    diag[n - 1] = d - e * e / gamma;
    u[0] = gamma;
    u[n - 1] = e;
    auto thomas = [&](std::vector<double>& r) {
        cp[0] = e / diag[0];
        r[0] /= diag[0];
        for (std::size_t i = 1; i < n; ++i) {
            const double den = diag[i] - e * cp[i - 1];
            cp[i] = e / den;
            r[i] = (r[i] - e * r[i - 1]) / den;
        }
        for (std::size_t i = n - 1; i-- > 0;) r[i] -= cp[i] * r[i + 1];
    };
    // Solve for the deviation from x[0]: rows sum to one, so constants pass
    // through exactly and the homogeneous state never picks up round-off.
    const double ref = x[0];
    for (double& v : x) v -= ref;
    thomas(x);
    thomas(u);
    const double vx = x[0] + e / gamma * x[n - 1];
    const double vu = u[0] + e / gamma * u[n - 1];
    const double f = vx / (1.0 + vu);
    for (std::size_t i = 0; i < n; ++i) x[i] = ref + (x[i] - f * u[i]);
}

}  // namespace

DensityProfile hydro_rhs(const DensityProfile& p, double beta, Exec exec) {
    const auto m = static_cast<std::int64_t>(p.size());
    const double inv_h2 = static_cast<double>(m) * static_cast<double>(m);
    DensityProfile out(p.size(), ProfileKind::smooth_samples);
    drift(p, beta, out.rho, exec);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (std::int64_t j = 0; j < m; ++j) {
        const std::int64_t k = j + 1 == m ? 0 : j + 1, l = j == 0 ? m - 1 : j - 1;
        for (int s = 0; s < 3; ++s) out.rho[s][j] += (p.rho[s][k] - 2.0 * p.rho[s][j] + p.rho[s][l]) * inv_h2;
    }
    return out;
}

double stationarity_residual(const DensityProfile& p, double beta) {
    const DensityProfile r = hydro_rhs(p, beta);
    double s = 0.0;
    for (const auto& ch : r.rho)
        for (double v : ch) s = std::max(s, std::abs(v));
    return s;
}

void hydro_step(DensityProfile& p, double beta, double dt, HydroScheme scheme, Exec exec) {
    const auto m = static_cast<std::int64_t>(p.size());
    if (scheme == HydroScheme::explicit_euler) {
        const DensityProfile r = hydro_rhs(p, beta, exec);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
        for (std::int64_t j = 0; j < m; ++j)
            for (int s = 0; s < 3; ++s) p.rho[s][j] += dt * r.rho[s][j];
        return;
    }
    std::array<std::vector<double>, 3> d;
    for (auto& ch : d) ch.resize(static_cast<std::size_t>(m));
    drift(p, beta, d, exec);
    const double r = dt * static_cast<double>(m) * static_cast<double>(m);
#pragma omp parallel for schedule(static) if (exec == Exec::parallel)
    for (int s = 0; s < 3; ++s) {
        for (std::int64_t j = 0; j < m; ++j) p.rho[s][j] += dt * d[s][j];
        cyclic_solve(1.0 + 2.0 * r, -r, p.rho[s]);
    }
}

DensityProfile perturbed_homogeneous(std::size_t m, double eps, int k) {
    DensityProfile p = homogeneous_profile(m);
    for (std::size_t j = 0; j < m; ++j) {
        const double v = eps * std::cos(2.0 * std::numbers::pi * k * static_cast<double>(j) / m);
        p.rho[0][j] += v;
        p.rho[1][j] -= v;
    }
    return p;
}

double mode_amplitude(const DensityProfile& p, int k) {
    double s = 0.0;
    for (const auto& ch : p.rho) s += std::norm(fourier_coefficient(ch, k));
    return std::sqrt(s);
}

HydroSample observe(const DensityProfile& p, double beta, double t) {
    HydroSample o;
    o.t = t;
    o.free_energy = free_energy(p, beta);
    o.mass = p.means();
    o.residual = stationarity_residual(p, beta);
    for (int k = 1; k <= 4; ++k) o.modes[k - 1] = std::abs(fourier_coefficient(p.rho[1], k));
    return o;
}

HydroRun integrate_hydro(const DensityProfile& initial, double beta, double horizon, const HydroOptions& opts) {
    const std::size_t m = initial.size();
    if (m < 3) throw std::invalid_argument("hydro grid needs at least 3 cells");
    if (!(horizon > 0.0)) throw std::invalid_argument("hydro horizon must be positive");
    const double h = 1.0 / static_cast<double>(m);
    double dt = opts.dt;
    if (dt <= 0.0) dt = opts.scheme == HydroScheme::semi_implicit ? h : kExplicitCfl * h * h;
    if (opts.scheme == HydroScheme::explicit_euler && dt > kExplicitCfl * h * h * (1.0 + 1e-12))
        throw std::invalid_argument("explicit hydro step violates dt <= 0.4 h^2");
    const long steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    dt = horizon / static_cast<double>(steps);
    const long every = opts.output_every > 0 ? opts.output_every : std::max(1L, steps / 1000);

    HydroRun run;
    run.dt = dt;
    run.steps = steps;
    DensityProfile p = initial;
    p.kind = ProfileKind::smooth_samples;
    run.trace.push_back(observe(p, beta, 0.0));
    run.max_simplex_defect = p.simplex_defect();
    run.min_density = 1.0;
    std::array<double, 3> mass = p.means();
    double f_last = run.trace.back().free_energy;
    long last_out = 0;
    for (long n = 1; n <= steps; ++n) {
        hydro_step(p, beta, dt, opts.scheme, opts.exec);
        const auto now = p.means();
        for (int s = 0; s < 3; ++s) {
            if (!std::isfinite(now[s])) {
                throw HydroFailure("non-finite density at step " + std::to_string(n), n);
            }
            run.max_mass_drift_per_step = std::max(run.max_mass_drift_per_step, std::abs(now[s] - mass[s]));
        }
        mass = now;
        run.max_simplex_defect = std::max(run.max_simplex_defect, p.simplex_defect());
        for (const auto& ch : p.rho)
            for (double v : ch) run.min_density = std::min(run.min_density, v);
        if (n % every == 0 || n == steps) {
            run.trace.push_back(observe(p, beta, n * dt));
            const double f = run.trace.back().free_energy;
            const double inc = (f - f_last) / static_cast<double>(n - last_out);
            run.max_free_energy_increase_per_step = std::max(run.max_free_energy_increase_per_step, inc);
            if (inc > opts.free_energy_slack) run.free_energy_monotone = false;
            f_last = f;
            last_out = n;
        }
    }
    run.time = steps * dt;
    run.final_state = std::move(p);
    return run;
}

ThresholdResult instability_threshold(std::size_t m, double lo, double hi, double horizon, double resolution) {
    ThresholdResult res;
    auto grows = [&](double beta) {
        ++res.runs;
        HydroOptions opts;
        opts.output_every = 1L << 40;
        const DensityProfile p0 = perturbed_homogeneous(m, 1e-6);
        // The partner mode decays at rate ~4π², so after horizon/3 only the
        // critical mode is left; short runs keep the amplitude linear and
        // above round-off.
        const HydroRun early = integrate_hydro(p0, beta, horizon / 3, opts);
        const HydroRun late = integrate_hydro(early.final_state, beta, 2 * horizon / 3, opts);
        return mode_amplitude(late.final_state, 1) > mode_amplitude(early.final_state, 1);
    };
    if (grows(lo) || !grows(hi)) throw std::invalid_argument("threshold bracket does not straddle the instability");
    while (hi - lo > resolution) {
        const double mid = 0.5 * (lo + hi);
        (grows(mid) ? hi : lo) = mid;
    }
    res.lower = lo;
    res.upper = hi;
    res.beta = 0.5 * (lo + hi);
    return res;
}

void write_hydro_csv(const HydroRun& run, std::ostream& out) {
    out << "# schema=1\n" << "t,free_energy,mass_A,mass_B,mass_C,residual,mode_1,mode_2,mode_3,mode_4\n";
    char line[512];
    for (const auto& s : run.trace) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                      s.free_energy, s.mass[0], s.mass[1], s.mass[2], s.residual, s.modes[0], s.modes[1], s.modes[2],
                      s.modes[3]);
        out << line;
    }
}

}  // namespace abc
