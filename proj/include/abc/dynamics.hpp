#pragma once

// Continuous-time kinetic Monte Carlo for the ring and complete-graph
// dynamics, time-averaged Gibbs estimates with batch-means errors, and the
// observables used to probe relaxation.

#include <complex>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abc/generators.hpp"
#include "abc/lattice.hpp"
#include "abc/rng.hpp"

namespace abc {

/// Binary sum tree over nonnegative leaf weights: O(log n) update and
/// proportional selection. Parent sums are recomputed from children, so no
/// drift accumulates.
class SumTree {
public:
    explicit SumTree(std::size_t leaves);
    void set(std::size_t leaf, double w);
    double get(std::size_t leaf) const { return node_[base_ + leaf]; }
    double total() const { return node_[1]; }
    /// Leaf whose cumulative interval contains u ∈ [0, total).
    std::size_t find(double u) const;
    std::size_t size() const { return leaves_; }

private:
    std::size_t leaves_;
    std::size_t base_;
    std::vector<double> node_;
};

struct Event {
    double time;
    std::uint32_t x;
    std::uint32_t y;
    friend bool operator==(const Event&, const Event&) = default;
};

struct Trajectory {
    Configuration initial;
    Configuration final_state;
    double horizon = 0.0;
    std::vector<Event> events;
};

/// Exact event-driven simulation. Equal-species exchanges are no-ops and are
/// left out of the event table.
class KineticSimulator {
public:
    KineticSimulator(const Configuration& initial, double beta, Graph graph);

    double time() const { return time_; }
    SiteCodes state() const { return codes_; }
    Configuration configuration() const { return Configuration(codes_); }
    std::int64_t energy_count() const { return energy_; }
    double total_rate() const { return tree_.total(); }
    int sites() const { return n_; }

    /// Performs the next event if it occurs before `horizon` and returns it;
    /// otherwise advances the clock to `horizon` and returns nothing.
    std::optional<Event> step(double horizon, Rng& rng);

private:
    void refresh_ring(std::size_t bond);
    void refresh_complete();

    int n_;
    double beta_;
    Graph graph_;
    double time_ = 0.0;
    std::int64_t energy_;
    std::vector<std::uint8_t> codes_;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bonds_;
    std::vector<std::int32_t> bond_delta_;
    SumTree tree_;
};

Trajectory simulate(const Configuration& initial, double beta, double horizon, Graph graph, Rng& rng);

struct EstimateWithError {
    double mean = 0.0;
    double standard_error = 0.0;
    double effective_samples = 0.0;
    std::string method;
};

struct McmcOptions {
    int batches = 32;
    /// 0: exact time integral of the piecewise-constant path; > 0: average
    /// of samples taken on this time grid.
    double sample_interval = 0.0;
    std::optional<Configuration> initial;
    /// Called at every grid sample (sampling mode only).
    std::function<void(double, SiteCodes)> on_sample;
};

/// Time average of `f` over (burn_in, horizon] of a stationary-targeted run.
/// Without an explicit initial state, starts from a uniformly shuffled
/// equal-density configuration.
EstimateWithError mcmc_expectation(const Observable& f, int n, double beta, Graph graph, double horizon,
                                   double burn_in, Rng& rng, const McmcOptions& opts = {});

/// Several observables from one run; same batching for all.
std::vector<EstimateWithError> mcmc_expectations(std::span<const Observable> fs, int n, double beta, Graph graph,
                                                 double horizon, double burn_in, Rng& rng,
                                                 const McmcOptions& opts = {});

Configuration random_equal_density(int n, Rng& rng);

/// (1/N) Σ_x η_B(x) φ(x/N) with φ given on the N-point grid; φ must have
/// zero grid mean.
double test_function(SiteCodes codes, std::span<const double> phi_grid);
double test_function(const Configuration& zeta, const std::function<double(double)>& phi);

/// |(1/N) Σ_x (η_B(x) − 1/3) e^{2πikx/N}|.
double order_parameter(SiteCodes codes, int k);
std::complex<double> fourier_mode(SiteCodes codes, int k);

struct AutocorrelationResult {
    double tau = 0.0;   // in units of the series spacing
    int window = 0;
};

/// Integrated autocorrelation time with the self-consistent window W ≥ 6τ.
AutocorrelationResult autocorrelation_time(std::span<const double> series, double spacing);

}  // namespace abc
