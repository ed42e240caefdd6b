#include "abc/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

namespace abc {

namespace odeint = boost::numeric::odeint;

DensityProfile::DensityProfile(std::size_t m, ProfileKind k) : kind(k) {
    for (auto& ch : rho) ch.assign(m, 0.0);
}

std::array<double, 3> DensityProfile::means() const {
    std::array<double, 3> m{};
    for (int a = 0; a < 3; ++a) {
        double s = 0.0;
        for (double v : rho[a]) s += v;
        m[a] = s / static_cast<double>(size());
    }
    return m;
}

double DensityProfile::simplex_defect() const {
    double d = 0.0;
    for (std::size_t j = 0; j < size(); ++j) d = std::max(d, std::abs(rho[0][j] + rho[1][j] + rho[2][j] - 1.0));
    return d;
}

bool DensityProfile::in_unit_range() const {
    for (const auto& ch : rho)
        for (double v : ch)
            if (!(v >= 0.0 && v <= 1.0)) return false;
    return true;
}

DensityProfile homogeneous_profile(std::size_t m) {
    DensityProfile p(m, ProfileKind::smooth_samples);
    for (auto& ch : p.rho) std::fill(ch.begin(), ch.end(), 1.0 / 3.0);
    return p;
}

DensityProfile empirical_density(const Configuration& zeta) {
    if (!zeta.is_equal_density()) throw std::invalid_argument("empirical density needs an equal-density configuration");
    DensityProfile p(zeta.size(), ProfileKind::piecewise_constant);
    for (std::size_t x = 0; x < zeta.size(); ++x) p.rho[zeta.codes()[x]][x] = 1.0;
    return p;
}

DensityProfile shift_cells(const DensityProfile& p, long long k) {
    const auto m = static_cast<long long>(p.size());
    DensityProfile out(p.size(), p.kind);
    const long long kk = ((k % m) + m) % m;
    for (int a = 0; a < 3; ++a)
        for (long long j = 0; j < m; ++j) out.rho[a][(j + kk) % m] = p.rho[a][j];
    return out;
}

namespace {

std::vector<std::complex<double>> twiddles(std::size_t m) {
    std::vector<std::complex<double>> w(m);
    for (std::size_t j = 0; j < m; ++j) w[j] = std::polar(1.0, 2.0 * std::numbers::pi * static_cast<double>(j) / m);
    return w;
}

// f̂_k for k = 0..M/2.
std::vector<std::complex<double>> half_spectrum(std::span<const double> v) {
    const std::size_t m = v.size();
    const auto w = twiddles(m);
    std::vector<std::complex<double>> c(m / 2 + 1);
    for (std::size_t k = 0; k < c.size(); ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += v[j] * std::conj(w[(k * j) % m]);
        c[k] = s / static_cast<double>(m);
    }
    return c;
}

double moment_from_spectrum(const std::vector<std::complex<double>>& c, std::size_t m, double s) {
    // Coefficients of v(r − s) are f̂_k e^{−2πiks}; the Nyquist term has no
    // linear-moment contribution for real data sampled symmetrically.
    double acc = c[0].real() / 2.0;
    const std::size_t kmax = (m - 1) / 2;
    for (std::size_t k = 1; k <= kmax; ++k) {
        const std::complex<double> g = c[k] * std::polar(1.0, -2.0 * std::numbers::pi * k * s);
        acc += g.imag() / (std::numbers::pi * static_cast<double>(k));
    }
    return 3.0 * acc;
}

}  // namespace

DensityProfile shift_profile(const DensityProfile& p, double s) {
    const std::size_t m = p.size();
    DensityProfile out(m, p.kind);
    const auto w = twiddles(m);
    for (int a = 0; a < 3; ++a) {
        const auto c = half_spectrum(p.rho[a]);
        const std::size_t kmax = (m - 1) / 2;
        std::vector<std::complex<double>> g(kmax + 1);
        for (std::size_t k = 0; k <= kmax; ++k) g[k] = c[k] * std::polar(1.0, -2.0 * std::numbers::pi * k * s);
        const bool nyquist = m % 2 == 0;
        for (std::size_t j = 0; j < m; ++j) {
            double v = g[0].real();
            for (std::size_t k = 1; k <= kmax; ++k) v += 2.0 * (g[k] * w[(k * j) % m]).real();
            if (nyquist)
                v += c[m / 2].real() * std::cos(std::numbers::pi * static_cast<double>(m) *
                                                (static_cast<double>(j) / m - s));
            out.rho[a][j] = v;
        }
    }
    return out;
}

DensityProfile relabel_cyclic(const DensityProfile& p) {
    DensityProfile out = p;
    out.rho[1] = p.rho[0];
    out.rho[2] = p.rho[1];
    out.rho[0] = p.rho[2];
    return out;
}

double entropy(const DensityProfile& p) {
    double s = 0.0;
    for (const auto& ch : p.rho)
        for (double v : ch)
            if (v > 0.0) s += v * std::log(3.0 * std::max(v, 1e-300));
    return s / static_cast<double>(p.size());
}

double energy(const DensityProfile& p) {
    // Ordered cell pairs plus the within-cell triangle at half weight.
    const auto& a = p.rho[0];
    const auto& b = p.rho[1];
    const auto& c = p.rho[2];
    double sa = 0.0, sb = 0.0, sc = 0.0, acc = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        acc += sa * c[j] + sb * a[j] + sc * b[j];
        acc += 0.5 * (a[j] * c[j] + b[j] * a[j] + c[j] * b[j]);
        sa += a[j];
        sb += b[j];
        sc += c[j];
    }
    const double m = static_cast<double>(p.size());
    return acc / (m * m);
}

double free_energy(const DensityProfile& p, double beta) { return entropy(p) + beta * energy(p); }

double critical_beta() { return 2.0 * std::numbers::pi * std::sqrt(3.0); }

Point3 el_rhs(const Point3& r, double beta) {
    return {beta * r[0] * (r[2] - r[1]), beta * r[1] * (r[0] - r[2]), beta * r[2] * (r[1] - r[0])};
}

std::complex<double> fourier_coefficient(std::span<const double> v, int k) {
    const std::size_t m = v.size();
    std::complex<double> s = 0.0;
    for (std::size_t j = 0; j < m; ++j)
        s += v[j] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(j) / m);
    return s / static_cast<double>(m);
}

double linear_moment(std::span<const double> v) { return moment_from_spectrum(half_spectrum(v), v.size(), 0.0); }

double circular_mean(std::span<const double> v) {
    const double phase = std::arg(std::conj(fourier_coefficient(v, 1))) / (2.0 * std::numbers::pi);
    return phase - std::floor(phase);
}

// ---------------------------------------------------------------------------
// Orbit integration in logarithmic coordinates u = log ρ: the product
// invariant becomes the linear invariant Σu, kept to round-off by any
// Runge–Kutta method, and channels near the simplex boundary keep full
// relative accuracy. The channel-sum invariant is monitored for rejection.

namespace {

using State = std::array<double, 3>;

struct LogSystem {
    double beta;
    void operator()(const State& u, State& du, double) const {
        const double a = std::exp(u[0]), b = std::exp(u[1]), c = std::exp(u[2]);
        du[0] = beta * (c - b);
        du[1] = beta * (a - c);
        du[2] = beta * (b - a);
    }
};

Point3 to_rho(const State& u) { return {std::exp(u[0]), std::exp(u[1]), std::exp(u[2])}; }

State to_log(const Point3& r) {
    for (double v : r)
        if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument("orbit initial point must lie in the open simplex");
    if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-12) throw std::invalid_argument("orbit initial point off the simplex");
    return {std::log(r[0]), std::log(r[1]), std::log(r[2])};
}

double sum_defect(const State& u) { return std::exp(u[0]) + std::exp(u[1]) + std::exp(u[2]) - 1.0; }

using StepHook = std::function<bool(double t0, const State& u0, double t1, const State& u1)>;

// Advances from t = 0 to `length`, landing exactly on each of `stops`
// (ascending, within (0, length]). Calls hook after every accepted step;
// hook returning true ends the run early. Returns the final state and time.
struct DriveResult {
    State u;
    double t;
    std::size_t steps = 0;
    std::size_t rejected = 0;
    double sum_drift = 0.0;
};

DriveResult drive(State u, double beta, double length, const std::vector<double>& stops, const OrbitOptions& opts,
                  const StepHook& hook) {
    LogSystem sys{beta};
    auto ctrl = odeint::make_controlled(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_fehlberg78<State>());
    DriveResult r{u, 0.0};
    double dt = std::min(1e-2 / std::max(beta, 1.0), length);
    std::size_t next = 0;
    const double defect0 = sum_defect(u);
    while (r.t < length) {
        while (next < stops.size() && stops[next] <= r.t) ++next;
        const double target = next < stops.size() ? stops[next] : length;
        double h = std::min(dt, target - r.t);
        const bool clamped = h < dt;
        const State u_old = r.u;
        const double t_old = r.t;
        State u_try = u_old;
        double t_try = t_old;
        if (ctrl.try_step(sys, u_try, t_try, h) == odeint::fail) {
            dt = h;
            ++r.rejected;
            if (dt < opts.min_step) throw OrbitFailure("step size underflow in orbit integration");
            continue;
        }
        const double taken = t_try - t_old;
        const double slack = opts.invariant_tol * taken + 64.0 * std::numeric_limits<double>::epsilon();
        if (std::abs(sum_defect(u_try) - sum_defect(u_old)) > slack) {
            dt = taken / 2.0;
            ++r.rejected;
            if (dt < opts.min_step) throw OrbitFailure("step size underflow in orbit integration (invariant)");
            continue;
        }
        if (clamped && std::abs(t_try - target) < 1e-15 * std::max(1.0, target)) t_try = target;
        r.u = u_try;
        r.t = t_try;
        ++r.steps;
        r.sum_drift = std::max(r.sum_drift, std::abs(sum_defect(r.u) - defect0));
        if (!clamped) dt = h;
        if (hook && hook(t_old, u_old, r.t, r.u)) break;
    }
    return r;
}

}  // namespace

OrbitTrace integrate_orbit(const Point3& initial, double beta, double length, const OrbitOptions& opts) {
    if (!(length > 0.0)) throw std::invalid_argument("orbit length must be positive");
    OrbitTrace tr;
    tr.initial = initial;
    tr.beta = beta;
    tr.length = length;
    tr.product = initial[0] * initial[1] * initial[2];
    const State u0 = to_log(initial);
    const double log_product = u0[0] + u0[1] + u0[2];

    std::vector<double> stops;
    if (opts.samples > 0) {
        tr.times.reserve(opts.samples);
        for (std::size_t j = 0; j < opts.samples; ++j)
            tr.times.push_back(length * static_cast<double>(j) / static_cast<double>(opts.samples));
        stops.assign(tr.times.begin() + 1, tr.times.end());
        tr.states.push_back(initial);
    }
    std::size_t recorded = 1;
    auto track = [&](const State& u) {
        tr.product_drift = std::max(tr.product_drift, std::abs(std::expm1(u[0] + u[1] + u[2] - log_product)));
    };
    const auto res = drive(u0, beta, length, stops, opts, [&](double, const State&, double t1, const State& u1) {
        track(u1);
        if (recorded < tr.times.size() && t1 == tr.times[recorded]) {
            tr.states.push_back(to_rho(u1));
            ++recorded;
        }
        return false;
    });
    tr.final_state = to_rho(res.u);
    tr.sum_drift = res.sum_drift;
    tr.steps = res.steps;
    tr.rejected = res.rejected;
    if (tr.states.size() != tr.times.size()) throw OrbitFailure("orbit sampling missed a sample time");
    return tr;
}

double orbit_period(const Point3& initial, double beta, const OrbitOptions& opts, double horizon) {
    const Point3 f0 = el_rhs(initial, beta);
    const double speed2 = f0[0] * f0[0] + f0[1] * f0[1] + f0[2] * f0[2];
    if (!(speed2 > 1e-28)) throw OrbitFailure("orbit_period: initial point is (numerically) the fixed point");
    auto section = [&](const State& u) {
        const Point3 x = to_rho(u);
        return (x[0] - initial[0]) * f0[0] + (x[1] - initial[1]) * f0[1] + (x[2] - initial[2]) * f0[2];
    };
    OrbitOptions quiet = opts;
    quiet.samples = 0;
    bool seen_negative = false;
    double period = -1.0;
    LogSystem sys{beta};
    odeint::runge_kutta_fehlberg78<State> single;
    drive(to_log(initial), beta, horizon, {}, quiet, [&](double t0, const State& u0, double t1, const State& u1) {
        const double g1 = section(u1);
        if (!seen_negative) {
            seen_negative = g1 < 0.0;
            return false;
        }
        if (g1 < 0.0) return false;
        // Upward crossing inside [t0, t1]; refine with sub-steps from u0.
        auto g_at = [&](double tau) {
            if (tau <= 0.0) return section(u0);
            State u = u0;
            single.do_step(sys, u, t0, tau);
            return section(u);
        };
        const double h = t1 - t0;
        const double ga = g_at(0.0);
        const double gb = g_at(h);
        if (ga >= 0.0 || gb < 0.0) {
            period = gb == 0.0 ? t1 : t0;
            return true;
        }
        std::uintmax_t iters = 200;
        const auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-15; };
        const auto br = boost::math::tools::toms748_solve(g_at, 0.0, h, ga, gb, tol, iters);
        period = t0 + 0.5 * (br.first + br.second);
        return true;
    });
    if (period < 0.0) throw OrbitFailure("orbit_period: no return to the section within the horizon");
    return period;
}

Point3 ray_point(double a) { return {a, 0.5 * (1.0 - a), 0.5 * (1.0 - a)}; }

OrbitValidation validate_orbit(double a, double beta, const OrbitOptions& opts) {
    OrbitValidation v;
    v.fundamental_period = orbit_period(ray_point(a), beta, opts);
    const double p = v.fundamental_period;
    const long n = std::lround(1.0 / p);
    if (n >= 2 && std::abs(static_cast<double>(n) * p - 1.0) < 1e-6) {
        v.subharmonic = static_cast<int>(n);
        v.reason = "fundamental period is 1/" + std::to_string(n) + "; excluded critical point";
        return v;
    }
    v.accepted = std::abs(p - 1.0) < 1e-8;
    if (!v.accepted) v.reason = "fundamental period differs from 1";
    return v;
}

ShootingResult shoot_period(double beta, double target, const OrbitOptions& opts) {
    // Ray parameter u ∈ (0,1) maps to a = 1/3 + (2/3)u.
    std::vector<double> grid{1e-3};
    for (int i = 1; i < 20; ++i) grid.push_back(0.05 * i);
    for (int k = 2; k <= 9; ++k) grid.push_back(1.0 - std::pow(10.0, -k));
    ShootingResult res;
    auto period_at = [&](double u) {
        ++res.period_evaluations;
        try {
            return orbit_period(ray_point(1.0 / 3.0 + (2.0 / 3.0) * u), beta, opts, 50.0 + 20.0 * target);
        } catch (const OrbitFailure&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    double u_lo = -1.0, p_lo = 0.0, prev = -std::numeric_limits<double>::infinity();
    for (double u : grid) {
        const double p = period_at(u);
        if (p < prev) res.monotone_scan = false;
        prev = p;
        if (p >= target) {
            if (u_lo < 0.0) throw OrbitFailure("shooting bracket empty: period already exceeds the target at the smallest amplitude");
            auto f = [&](double x) { return period_at(x) - target; };
            std::uintmax_t iters = 200;
            const auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 4e-16 * std::max(1.0, hi); };
            const double f_hi = std::isfinite(p) ? p - target : 1e3;
            const auto br = boost::math::tools::toms748_solve(f, u_lo, u, p_lo - target, f_hi, tol, iters);
            const double u_star = 0.5 * (br.first + br.second);
            res.amplitude = 1.0 / 3.0 + (2.0 / 3.0) * u_star;
            res.period = orbit_period(ray_point(res.amplitude), beta, opts);
            return res;
        }
        u_lo = u;
        p_lo = p;
    }
    throw OrbitFailure("shooting bracket not found along the ray");
}

double centering_shift(const DensityProfile& p) {
    const auto& b = p.rho[1];
    const std::size_t m = b.size();
    const auto spec = half_spectrum(b);
    const double s0 = 0.5 - circular_mean(b);
    auto g = [&](double s) { return moment_from_spectrum(spec, m, s) - 0.5; };
    // Sign change of the linear moment closest to the circular pre-centering.
    const int steps = 100;
    double best_lo = 0.0, best_hi = 0.0, best_dist = std::numeric_limits<double>::infinity();
    if (g(s0) == 0.0) return s0 - std::floor(s0);
    for (int side = -1; side <= 1; side += 2) {
        double a = s0, ga = g(a);
        for (int i = 1; i <= steps; ++i) {
            const double bpt = s0 + side * 0.25 * i / steps;
            const double gb = g(bpt);
            if ((ga < 0.0) != (gb < 0.0)) {
                const double dist = std::abs(bpt - s0);
                if (dist < best_dist) {
                    best_dist = dist;
                    best_lo = std::min(a, bpt);
                    best_hi = std::max(a, bpt);
                }
                break;
            }
            a = bpt;
            ga = gb;
        }
    }
    if (!std::isfinite(best_dist)) throw OrbitFailure("centering: linear moment has no root near the circular mean");
    std::uintmax_t iters = 200;
    const auto tol = [](double lo, double hi) { return std::abs(hi - lo) <= 1e-15; };
    const auto br = boost::math::tools::toms748_solve(g, best_lo, best_hi, tol, iters);
    const double s = 0.5 * (br.first + br.second);
    return s - std::floor(s);
}

MinimizerResult solve_minimizer(double beta, std::size_t grid, const OrbitOptions& opts) {
    if (!(beta > 0.0)) throw std::invalid_argument("solve_minimizer needs beta > 0");
    if (grid < 16) throw std::invalid_argument("minimizer grid too small");
    // Periods grow with amplitude from the linearized value β_c/β, so no
    // period-1 orbit exists when the smallest-amplitude period is ≥ 1.
    const double p_small = orbit_period(ray_point(1.0 / 3.0 + (2.0 / 3.0) * 1e-3), beta, opts);
    if (p_small >= 1.0) return NoNontrivialSolution{beta, p_small};

    const ShootingResult shot = shoot_period(beta, 1.0, opts);
    const OrbitValidation check = validate_orbit(shot.amplitude, beta, opts);
    if (!check.accepted) throw OrbitFailure("minimizer candidate rejected: " + check.reason);

    const Point3 x0 = ray_point(shot.amplitude);
    OrbitOptions sampled = opts;
    sampled.samples = grid;
    const OrbitTrace base = integrate_orbit(x0, beta, 1.0, sampled);
    DensityProfile base_profile(grid, ProfileKind::smooth_samples);
    for (std::size_t j = 0; j < grid; ++j)
        for (int a = 0; a < 3; ++a) base_profile.rho[a][j] = base.states[j][a];

    // profile(r) = base(r − s) = orbit((r − s) mod 1): restart the orbit at 1 − s.
    const double s = centering_shift(base_profile);
    const double t0 = std::fmod(1.0 - s, 1.0);
    Point3 start = x0;
    double drift = base.product_drift;
    if (t0 > 0.0) {
        OrbitOptions plain = opts;
        plain.samples = 0;
        const OrbitTrace lead = integrate_orbit(x0, beta, t0, plain);
        start = lead.final_state;
        drift = std::max(drift, lead.product_drift);
    }
    const OrbitTrace fin = integrate_orbit(start, beta, 1.0, sampled);

    MinimizerSolution sol;
    sol.beta = beta;
    sol.amplitude = shot.amplitude;
    sol.period = shot.period;
    sol.shift = s;
    sol.monotone_scan = shot.monotone_scan;
    sol.profile = DensityProfile(grid, ProfileKind::smooth_samples);
    for (std::size_t j = 0; j < grid; ++j)
        for (int a = 0; a < 3; ++a) sol.profile.rho[a][j] = fin.states[j][a];
    for (int a = 0; a < 3; ++a)
        sol.period_residual = std::max(sol.period_residual, std::abs(fin.final_state[a] - fin.initial[a]));
    sol.means = sol.profile.means();
    sol.product = x0[0] * x0[1] * x0[2];
    sol.product_drift = std::max(drift, fin.product_drift);
    sol.free_energy = free_energy(sol.profile, beta);
    sol.linear_moment_b = linear_moment(sol.profile.rho[1]);
    return sol;
}

nlohmann::json MinimizerSolution::record() const {
    return {{"beta", beta},
            {"amplitude", amplitude},
            {"period", period},
            {"period_residual", period_residual},
            {"means", {means[0], means[1], means[2]}},
            {"product", product},
            {"product_drift", product_drift},
            {"free_energy", free_energy},
            {"homogeneous_free_energy", beta / 6.0},
            {"shift", shift},
            {"linear_moment_b", linear_moment_b},
            {"monotone_scan", monotone_scan},
            {"grid", profile.size()}};
}

void write_profile_csv(const DensityProfile& p, std::ostream& out) {
    out << "# schema=1\n" << "r,rho_A,rho_B,rho_C\n";
    char line[128];
    for (std::size_t j = 0; j < p.size(); ++j) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", static_cast<double>(j) / p.size(), p.rho[0][j],
                      p.rho[1][j], p.rho[2][j]);
        out << line;
    }
}

}  // namespace abc
