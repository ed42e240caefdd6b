#pragma once

// Finite-volume integrator for the three-species hydrodynamic system on the
// periodic grid: drift in divergence form with face-averaged fluxes,
// diffusion by the 3-point stencil.

#include <array>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "abc/continuum.hpp"
#include "abc/parallel.hpp"

namespace abc {

enum class HydroScheme { explicit_euler, semi_implicit };

std::string to_string(HydroScheme s);
HydroScheme parse_hydro_scheme(const std::string& name);

/// Largest stable explicit step is kExplicitCfl·h².
inline constexpr double kExplicitCfl = 0.4;

class HydroFailure : public std::runtime_error {
public:
    HydroFailure(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
    long step() const { return step_; }

private:
    long step_;
};

DensityProfile hydro_rhs(const DensityProfile& p, double beta, Exec exec = Exec::serial);

/// Supremum norm of hydro_rhs.
double stationarity_residual(const DensityProfile& p, double beta);

struct HydroOptions {
    HydroScheme scheme = HydroScheme::semi_implicit;
    /// 0 selects h for the semi-implicit scheme and kExplicitCfl·h² for the
    /// explicit one.
    double dt = 0.0;
    long output_every = 0;  // 0: about 1000 trace rows
    double free_energy_slack = 1e-8;
    Exec exec = Exec::serial;
};

struct HydroSample {
    double t = 0.0;
    double free_energy = 0.0;
    std::array<double, 3> mass{};
    double residual = 0.0;
    std::array<double, 4> modes{};  // |ρ̂_B(k)|, k = 1..4
};

struct HydroRun {
    DensityProfile final_state;
    double time = 0.0;
    double dt = 0.0;
    long steps = 0;
    std::vector<HydroSample> trace;
    double max_mass_drift_per_step = 0.0;
    double max_simplex_defect = 0.0;
    double min_density = 0.0;
    /// Largest increase of the free energy between consecutive outputs,
    /// divided by the number of steps in between.
    double max_free_energy_increase_per_step = 0.0;
    bool free_energy_monotone = true;
};

HydroSample observe(const DensityProfile& p, double beta, double t);

HydroRun integrate_hydro(const DensityProfile& initial, double beta, double horizon, const HydroOptions& opts = {});

/// Single step; exposed for the benchmark and the serial/parallel check.
void hydro_step(DensityProfile& p, double beta, double dt, HydroScheme scheme, Exec exec = Exec::serial);

/// ρ̄ plus ε·cos(2πkr) moved from B into A.
DensityProfile perturbed_homogeneous(std::size_t m, double eps, int k = 1);

/// Amplitude of the k-th Fourier mode of the deviation from ρ̄, summed over
/// channels in quadrature.
double mode_amplitude(const DensityProfile& p, int k);

struct ThresholdResult {
    double beta = 0.0;
    double lower = 0.0;  // largest β observed to decay
    double upper = 0.0;  // smallest β observed to grow
    int runs = 0;
};

/// Bisects on β for growth of the k=1 mode from a small perturbation of ρ̄.
ThresholdResult instability_threshold(std::size_t m, double lo, double hi, double horizon = 3.0,
                                      double resolution = 1e-3);

void write_hydro_csv(const HydroRun& run, std::ostream& out);

}  // namespace abc
