#pragma once

// Enumeration of the equal-density state space and the mean-field Gibbs
// measure on it.
//
// States are ordered lexicographically with A < B < C, which is exactly the
// order produced by std::next_permutation on the sorted word A..AB..BC..C.
// Ranks are computed with a multinomial table in O(N).

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "json.hpp"

#include "abc/lattice.hpp"
#include "abc/rng.hpp"

namespace abc {

struct MemoryBudget {
    std::uint64_t bytes = 2ULL << 30;  // 2 GiB
    static MemoryBudget gib(double g) { return {static_cast<std::uint64_t>(g * double(1ULL << 30))}; }
};

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, std::uint64_t required, std::uint64_t budget);
    std::uint64_t required() const { return required_; }
    std::uint64_t budget() const { return budget_; }

private:
    std::uint64_t required_;
    std::uint64_t budget_;
};

/// Bytes per state held by a GibbsEnsemble.
inline constexpr std::uint64_t kEnsembleBytesPerState = sizeof(std::int32_t) + sizeof(double);

std::uint64_t multinomial_count(int n_a, int n_b, int n_c);

class StateIndexing {
public:
    explicit StateIndexing(int n);

    int sites() const { return n_; }
    std::uint64_t total() const { return total_; }

    std::uint64_t rank(SiteCodes codes) const;
    void unrank(std::uint64_t index, std::span<std::uint8_t> out) const;
    Configuration unrank(std::uint64_t index) const;
    std::uint64_t rank(const Configuration& zeta) const { return rank(zeta.codes()); }

    /// Calls visit(index, codes) for every state in [begin, end) in order.
    void for_range(std::uint64_t begin, std::uint64_t end,
                   const std::function<void(std::uint64_t, SiteCodes)>& visit) const;

private:
    std::uint64_t count(int a, int b, int c) const { return table_[(a * (m_ + 1) + b) * (m_ + 1) + c]; }

    int n_;
    int m_;  // n / 3
    std::uint64_t total_;
    std::vector<std::uint64_t> table_;
};

/// Throws std::invalid_argument for N not a positive multiple of 3 and
/// BudgetExceeded when an ensemble over Ω_N would not fit the budget.
StateIndexing enumerate(int n, MemoryBudget budget = {});

using Observable = std::function<double(SiteCodes)>;

class GibbsEnsemble {
public:
    GibbsEnsemble(StateIndexing indexing, double beta);

    const StateIndexing& indexing() const { return indexing_; }
    int sites() const { return indexing_.sites(); }
    std::uint64_t size() const { return indexing_.total(); }
    double beta() const { return beta_; }
    double log_z() const { return log_z_; }

    /// N²·H_N per state.
    std::span<const std::int32_t> energy_counts() const { return energy_; }
    std::span<const double> probabilities() const { return prob_; }
    double probability(std::uint64_t i) const { return prob_[i]; }
    double log_probability(std::uint64_t i) const;
    double unnormalized_weight(std::uint64_t i) const;

    double min_energy() const;
    double max_energy() const;

    /// Observable values for every state, in rank order.
    std::vector<double> tabulate(const Observable& f) const;

    nlohmann::json summary() const;

private:
    StateIndexing indexing_;
    double beta_;
    double log_z_ = 0.0;
    std::int32_t k_min_ = 0;
    std::int32_t k_max_ = 0;
    std::vector<std::int32_t> energy_;
    std::vector<double> prob_;
};

GibbsEnsemble build_ensemble(const StateIndexing& indexing, double beta);

double expectation(const GibbsEnsemble& ens, std::span<const double> values);
double variance(const GibbsEnsemble& ens, std::span<const double> values);
double expectation(const GibbsEnsemble& ens, const Observable& f);
double variance(const GibbsEnsemble& ens, const Observable& f);

struct StreamedMoments {
    std::uint64_t total = 0;
    double log_z = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

/// Gibbs mean and variance of f evaluated in one enumeration pass without
/// storing Ω_N. Suitable for N up to ~18.
StreamedMoments stream_moments(int n, double beta, const Observable& f);

/// Draws states i.i.d. from a discrete distribution by CDF inversion.
class DiscreteSampler {
public:
    explicit DiscreteSampler(std::span<const double> weights);
    std::uint64_t operator()(Rng& rng) const;
    std::size_t size() const { return cdf_.size(); }

private:
    std::vector<double> cdf_;
};

class ExactSampler {
public:
    explicit ExactSampler(const GibbsEnsemble& ens);
    Configuration operator()(Rng& rng) const;
    std::uint64_t sample_index(Rng& rng) const { return sampler_(rng); }

private:
    const GibbsEnsemble* ens_;
    DiscreteSampler sampler_;
};

}  // namespace abc
