#pragma once

// Ring (nearest-neighbour) and complete-graph ABC generators on Ω_N, their
// Dirichlet forms, and the comparison between the two.

#include <cstdint>
#include <span>
#include <string>

#include "abc/lattice.hpp"
#include "abc/parallel.hpp"
#include "abc/sparse.hpp"
#include "abc/state_space.hpp"

namespace abc {

enum class Graph { ring, complete };

std::string to_string(Graph g);
Graph parse_graph(const std::string& name);

/// Rate of the nearest-neighbour exchange across bond (x, x+1).
/// e^{+β/2N} when the swap lowers H_N ((A,C), (C,B), (B,A)), e^{−β/2N} when
/// it raises H_N, and e^{+β/2N} when the two species coincide.
double ring_rate(const Configuration& zeta, std::size_t x, double beta);

/// (1/N)·exp{−(βN/2)·∇_{x,y}H_N}.
double complete_rate(const Configuration& zeta, std::size_t x, std::size_t y, double beta);

/// Nonzero-entry limits; both generators refuse to assemble past them.
struct AssemblyBudget {
    MemoryBudget memory{};
    static constexpr std::uint64_t kBytesPerEntry =
        sizeof(std::uint32_t) + sizeof(double) + sizeof(std::int32_t);
};

SparseGenerator build_ring_generator(const GibbsEnsemble& ens, Exec exec = Exec::parallel,
                                     AssemblyBudget budget = {});
SparseGenerator build_complete_generator(const GibbsEnsemble& ens, Exec exec = Exec::parallel,
                                         AssemblyBudget budget = {});
SparseGenerator build_generator(const GibbsEnsemble& ens, Graph graph, Exec exec = Exec::parallel,
                                AssemblyBudget budget = {});

struct DetailedBalanceReport {
    std::uint64_t entries_checked = 0;
    std::uint64_t missing_reverse = 0;
    /// max |(2·level_i + delta_ij) − (2·level_j + delta_ji)| in energy units.
    std::int64_t exponent_residual = 0;
    /// Entries whose stored delta differs from level_j − level_i.
    std::uint64_t inconsistent_deltas = 0;
    /// max |w_i q_ij − w_j q_ji| / max(w_i q_ij) in floating point.
    double float_residual = 0.0;
    bool exact() const { return missing_reverse == 0 && exponent_residual == 0 && inconsistent_deltas == 0; }
};

DetailedBalanceReport detailed_balance(const SparseGenerator& g);

/// ν(f·(−L f)).
double dirichlet_quadratic(const SparseGenerator& g, std::span<const double> f);
/// ½ Σ_i ν_i Σ_j q_ij (f_j − f_i)².
double dirichlet_half_sum(const SparseGenerator& g, std::span<const double> f);

double measure_variance(const SparseGenerator& g, std::span<const double> f);

/// Dirichlet form over variance. Throws std::invalid_argument when f has
/// (numerically) zero variance.
double rayleigh_quotient(const SparseGenerator& g, std::span<const double> f);

struct ComparisonReport {
    double lhs = 0.0;  // complete-graph Dirichlet form
    double rhs = 0.0;  // 2 e^{3β} N² × ring Dirichlet form
    bool holds = false;
};

ComparisonReport comparison_check(const SparseGenerator& ring, const SparseGenerator& complete, int n, double beta,
                                  std::span<const double> f);

}  // namespace abc
