#pragma once

// Perturbed interchange process on the complete graph: one transposition
// rate per pair of positions, tilted by an energy on S_N. The colorblind
// (mod 3) projection maps it onto the complete-graph ABC dynamics.
//
// Positions are 0-based; permutation values are 1..N.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "abc/lattice.hpp"
#include "abc/parallel.hpp"
#include "abc/sparse.hpp"

namespace abc {

class Permutation {
public:
    Permutation() = default;
    explicit Permutation(std::vector<std::uint8_t> values);
    static Permutation identity(int n);

    std::size_t size() const { return v_.size(); }
    std::uint8_t operator[](std::size_t x) const { return v_[x]; }
    std::span<const std::uint8_t> values() const { return v_; }
    int sign() const;
    std::string str() const;
    friend bool operator==(const Permutation&, const Permutation&) = default;

private:
    std::vector<std::uint8_t> v_;
};

/// σ∘τ_{x,y}: the values at positions x and y swapped.
Permutation apply_transposition(const Permutation& sigma, std::size_t x, std::size_t y);

std::uint64_t factorial(int n);
/// Lexicographic rank via the Lehmer code.
std::uint64_t permutation_rank(std::span<const std::uint8_t> values);
Permutation permutation_unrank(int n, std::uint64_t rank);

/// Colorblind map: values ≡ 1, 2, 0 (mod 3) become A, B, C.
Configuration colorblind_project(const Permutation& sigma);

class EnergyOracle {
public:
    virtual ~EnergyOracle() = default;
    virtual std::string name() const = 0;
    virtual double energy(std::span<const std::uint8_t> sigma) const = 0;
    /// E(σ^{x,y}) − E(σ).
    virtual double gradient(std::span<const std::uint8_t> sigma, std::size_t x, std::size_t y) const;
    /// Declared uniform bound on |gradient|.
    virtual double gradient_bound() const = 0;
    /// Energy as an integer multiple of unit(), when it is one.
    virtual std::optional<std::int64_t> energy_units(std::span<const std::uint8_t>) const { return std::nullopt; }
    virtual double unit() const { return 1.0; }
};

class ZeroOracle final : public EnergyOracle {
public:
    std::string name() const override { return "zero"; }
    double energy(std::span<const std::uint8_t>) const override { return 0.0; }
    double gradient(std::span<const std::uint8_t>, std::size_t, std::size_t) const override { return 0.0; }
    double gradient_bound() const override { return 0.0; }
    std::optional<std::int64_t> energy_units(std::span<const std::uint8_t>) const override { return 0; }
};

/// E_N = N·H_N∘χ_N, i.e. (energy count of the projection)/N.
class ColorblindOracle final : public EnergyOracle {
public:
    explicit ColorblindOracle(int n);
    std::string name() const override { return "colorblind"; }
    double energy(std::span<const std::uint8_t> sigma) const override;
    double gradient(std::span<const std::uint8_t> sigma, std::size_t x, std::size_t y) const override;
    /// |ΔK| ≤ 2N/3 for every exchange, so |∇E| ≤ 1.
    double gradient_bound() const override { return 1.0; }
    std::optional<std::int64_t> energy_units(std::span<const std::uint8_t> sigma) const override;
    double unit() const override { return 1.0 / n_; }

private:
    int n_;
};

std::unique_ptr<EnergyOracle> make_oracle(const std::string& name, int n);

/// (1/N)·exp(−(β/2)·∇_{x,y}E).
double transposition_rate(const Permutation& sigma, std::size_t x, std::size_t y, double beta,
                          const EnergyOracle& oracle);

struct InterchangeLimits {
    int max_sites = 7;  // raise to 8 explicitly
};

/// Generator over S_N in lexicographic order, reversible w.r.t. ∝ exp(−βE).
SparseGenerator build_interchange_generator(int n, double beta, const EnergyOracle& oracle,
                                            Exec exec = Exec::parallel, InterchangeLimits limits = {});

struct PushforwardReport {
    int n = 0;
    double beta = 0.0;
    std::uint64_t permutations = 0;
    std::uint64_t configurations = 0;
    std::uint64_t fiber_min = 0;
    std::uint64_t fiber_max = 0;
    double max_discrepancy = 0.0;
};

/// Sums the permutation Gibbs measure over each colorblind fiber and compares
/// with the ABC Gibbs measure.
PushforwardReport pushforward_check(int n, double beta);

struct GapCharacterization {
    double lhs = 0.0;  // π[(Gf)²]
    double rhs = 0.0;  // k·ℰ(f, f)
    bool holds = false;
};

GapCharacterization gap_characterization_check(const SparseGenerator& g, std::span<const double> f, double k);

/// |c_a(c_b + c_b^a) − c_b(c_a + c_a^b)| for disjoint bonds a = {x,y},
/// b = {u,v}, relative to the larger side.
double rate_identity_residual(const Permutation& sigma, std::size_t x, std::size_t y, std::size_t u, std::size_t v,
                              double beta, const EnergyOracle& oracle);

}  // namespace abc
