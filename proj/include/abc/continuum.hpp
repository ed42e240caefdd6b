#pragma once

// Macroscopic density profiles on the unit torus, the entropy / energy /
// free-energy functionals, and the periodic-orbit solver for the nontrivial
// minimizer above the critical inverse temperature.

#include <array>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "abc/lattice.hpp"

namespace abc {

enum class ProfileKind { piecewise_constant, smooth_samples };

/// Three channels on the grid r_j = j/M.
struct DensityProfile {
    std::array<std::vector<double>, 3> rho;
    ProfileKind kind = ProfileKind::smooth_samples;

    DensityProfile() = default;
    DensityProfile(std::size_t m, ProfileKind k);

    std::size_t size() const { return rho[0].size(); }
    std::span<const double> channel(Species s) const { return rho[static_cast<int>(s)]; }
    std::array<double, 3> point(std::size_t j) const { return {rho[0][j], rho[1][j], rho[2][j]}; }
    std::array<double, 3> means() const;
    /// max_j |Σ_α ρ_α(j) − 1| and whether every entry lies in [0, 1].
    double simplex_defect() const;
    bool in_unit_range() const;
};

DensityProfile homogeneous_profile(std::size_t m);
DensityProfile empirical_density(const Configuration& zeta);
/// Cyclic shift by whole cells: result(j) = p(j − k).
DensityProfile shift_cells(const DensityProfile& p, long long k);
/// Trigonometric-interpolation translate: result(r) = p(r − s).
DensityProfile shift_profile(const DensityProfile& p, double s);
/// Species relabeling A→B→C→A.
DensityProfile relabel_cyclic(const DensityProfile& p);

double entropy(const DensityProfile& p);
double energy(const DensityProfile& p);
double free_energy(const DensityProfile& p, double beta);

/// 2π√3.
double critical_beta();

using Point3 = std::array<double, 3>;

Point3 el_rhs(const Point3& rho, double beta);

/// (1/M) Σ_j v_j e^{−2πikj/M}.
std::complex<double> fourier_coefficient(std::span<const double> samples, int k);
/// 3∫₀¹ r v(r) dr for a smooth periodic channel, from its Fourier series.
double linear_moment(std::span<const double> samples);
/// Arg of ∫ e^{2πir} v(r) dr divided by 2π, in [0, 1).
double circular_mean(std::span<const double> samples);

class OrbitFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OrbitOptions {
    double rel_tol = 1e-13;
    double abs_tol = 1e-15;
    /// Allowed drift of Σρ per unit length before a step is rejected.
    double invariant_tol = 1e-10;
    double min_step = 1e-14;
    /// Uniformly spaced samples over the requested length (0: endpoints only).
    std::size_t samples = 0;
};

struct OrbitTrace {
    Point3 initial{};
    double beta = 0.0;
    double length = 0.0;
    std::vector<double> times;
    std::vector<Point3> states;
    Point3 final_state{};
    double product = 0.0;
    /// max over the run of |ρ_Aρ_Bρ_C − product| / product and |Σρ − 1|.
    double product_drift = 0.0;
    double sum_drift = 0.0;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

/// Integrates the Euler–Lagrange system from a point of the open simplex.
/// Throws OrbitFailure on step-size underflow.
OrbitTrace integrate_orbit(const Point3& initial, double beta, double length, const OrbitOptions& opts = {});

/// First return time to the section {(x − x₀)·F(x₀) = 0} crossed upward.
double orbit_period(const Point3& initial, double beta, const OrbitOptions& opts = {}, double horizon = 50.0);

/// Point on the shooting ray ρ_A = a, ρ_B = ρ_C = (1 − a)/2.
Point3 ray_point(double a);

struct OrbitValidation {
    double fundamental_period = 0.0;
    /// n ≥ 2 when the fundamental period is 1/n; 0 otherwise.
    int subharmonic = 0;
    bool accepted = false;
    std::string reason;
};

/// Accepts an orbit for the minimizer only when its fundamental period is 1.
OrbitValidation validate_orbit(double a, double beta, const OrbitOptions& opts = {});

/// Amplitude a on the shooting ray whose orbit has the given period.
/// Throws OrbitFailure when the bracket is empty.
struct ShootingResult {
    double amplitude = 0.0;
    double period = 0.0;
    bool monotone_scan = true;
    int period_evaluations = 0;
};
ShootingResult shoot_period(double beta, double target, const OrbitOptions& opts = {});

struct MinimizerSolution {
    double beta = 0.0;
    double amplitude = 0.0;
    double period = 0.0;
    double period_residual = 0.0;
    double shift = 0.0;
    std::array<double, 3> means{};
    double product = 0.0;
    double product_drift = 0.0;
    double free_energy = 0.0;
    double linear_moment_b = 0.0;
    bool monotone_scan = true;
    DensityProfile profile;

    nlohmann::json record() const;
};

struct NoNontrivialSolution {
    double beta = 0.0;
    double small_amplitude_period = 0.0;
};

using MinimizerResult = std::variant<MinimizerSolution, NoNontrivialSolution>;

MinimizerResult solve_minimizer(double beta, std::size_t grid = 1024, const OrbitOptions& opts = {});

/// Translates a smooth profile so that the B channel's circular mean is 1/2
/// and then its linear moment 3∫rρ_B is exactly 1/2. Returns the shift s
/// applied as r ↦ r − s.
double centering_shift(const DensityProfile& p);

void write_profile_csv(const DensityProfile& p, std::ostream& out);

}  // namespace abc
