#include "doctest.h"

#include <cmath>
#include <numbers>

#include "abc/continuum.hpp"
#include "abc/hydro.hpp"
#include "abc/rng.hpp"

using namespace abc;

TEST_SUITE("hydrodynamics") {

TEST_CASE("right-hand side") {
    const auto z = hydro_rhs(homogeneous_profile(32), 15.0);
    for (const auto& ch : z.rho)
        for (double v : ch) CHECK(v == 0.0);

    Rng rng = make_stream(14);
    DensityProfile p(64, ProfileKind::smooth_samples);
    for (std::size_t j = 0; j < 64; ++j) {
        const double a = uniform01(rng), b = uniform01(rng) * (1 - a);
        p.rho[0][j] = a;
        p.rho[1][j] = b;
        p.rho[2][j] = 1 - a - b;
    }
    const auto r = hydro_rhs(p, 12.0);
    for (std::size_t j = 0; j < 64; ++j) CHECK(std::abs(r.rho[0][j] + r.rho[1][j] + r.rho[2][j]) < 1e-12 * 64 * 64);
    CHECK(stationarity_residual(p, 12.0) > 0.0);
}

TEST_CASE("heat-mode decay at beta=0") {
    double prev = 0.0;
    for (std::size_t m : {32, 64, 128}) {
        const auto p = perturbed_homogeneous(m, 1e-3);
        const auto r = hydro_rhs(p, 0.0);
        double err = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double exact = -1e-3 * 4 * std::numbers::pi * std::numbers::pi *
                                 std::cos(2 * std::numbers::pi * static_cast<double>(j) / m);
            err = std::max(err, std::abs(r.rho[0][j] - exact));
        }
        if (prev > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.05));
        prev = err;
    }
}

TEST_CASE("homogeneous state is kept exactly") {
    for (HydroScheme sch : {HydroScheme::semi_implicit, HydroScheme::explicit_euler}) {
        HydroOptions o;
        o.scheme = sch;
        const auto run = integrate_hydro(homogeneous_profile(32), 15.0, 0.5, o);
        for (const auto& ch : run.final_state.rho)
            for (double v : ch) CHECK(v == 1.0 / 3);
    }
}

TEST_CASE("minimizer drift is second order") {
    double prev = 0.0;
    HydroOptions o;
    for (std::size_t m : {64, 128, 256}) {
        const auto s = std::get<MinimizerSolution>(solve_minimizer(15.0, m));
        const auto run = integrate_hydro(s.profile, 15.0, 1.0, o);
        double d = 0.0;
        for (int a = 0; a < 3; ++a)
            for (std::size_t j = 0; j < m; ++j)
                d = std::max(d, std::abs(run.final_state.rho[a][j] - s.profile.rho[a][j]));
        if (prev > 0) CHECK(prev / d > 3.0);
        prev = d;
    }
}

TEST_CASE("relaxation to a translate of the minimizer") {
    HydroOptions o;
    const auto run = integrate_hydro(perturbed_homogeneous(256, 1e-3), 15.0, 30.0, o);
    CHECK(run.free_energy_monotone);
    CHECK(run.max_mass_drift_per_step < 1e-12);
    const auto s = std::get<MinimizerSolution>(solve_minimizer(15.0, 256));
    const auto c = shift_profile(run.final_state, centering_shift(run.final_state));
    double d = 0.0;
    for (int a = 0; a < 3; ++a)
        for (std::size_t j = 0; j < 256; ++j) d = std::max(d, std::abs(c.rho[a][j] - s.profile.rho[a][j]));
    CHECK(d < 1e-4);
}

TEST_CASE("explicit step bound and parsing") {
    HydroOptions o;
    o.scheme = HydroScheme::explicit_euler;
    o.dt = 1e-2;
    CHECK_THROWS_AS(integrate_hydro(homogeneous_profile(32), 1.0, 1.0, o), std::invalid_argument);
    CHECK(parse_hydro_scheme("explicit") == HydroScheme::explicit_euler);
    CHECK_THROWS(parse_hydro_scheme("rk4"));
}

TEST_CASE("serial and parallel steps agree") {
    auto a = perturbed_homogeneous(128, 1e-2, 2), b = a;
    for (int k = 0; k < 20; ++k) {
        hydro_step(a, 14.0, 1e-3, HydroScheme::semi_implicit, Exec::serial);
        hydro_step(b, 14.0, 1e-3, HydroScheme::semi_implicit, Exec::parallel);
    }
    CHECK(a.rho == b.rho);
}

}
