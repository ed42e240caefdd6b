#pragma once

// Microscopic configurations of the three-species ring and the mean-field
// Hamiltonian. Species are stored one byte per site (A=0, B=1, C=2).

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace abc {

enum class Species : std::uint8_t { A = 0, B = 1, C = 2 };

inline constexpr std::array<Species, 3> kAllSpecies{Species::A, Species::B, Species::C};

char species_char(Species s);

using SiteCodes = std::span<const std::uint8_t>;

class Configuration {
public:
    Configuration() = default;
    explicit Configuration(std::vector<std::uint8_t> codes);

    static Configuration parse(std::string_view text);
    std::string str() const;

    std::size_t size() const { return sites_.size(); }
    Species operator[](std::size_t x) const { return static_cast<Species>(sites_[x]); }
    SiteCodes codes() const { return sites_; }
    std::array<int, 3> counts() const;
    bool is_equal_density() const;

    friend bool operator==(const Configuration&, const Configuration&) = default;

private:
    std::vector<std::uint8_t> sites_;
};

/// Index pair of an unordered bond, both reduced mod N.
struct Bond {
    std::size_t x;
    std::size_t y;
};

// Ordered pairs (s, t) with s left of t that contribute to the Hamiltonian:
// (A,C), (B,A), (C,B).
constexpr int pair_weight(std::uint8_t s, std::uint8_t t) { return t == (s + 2) % 3 ? 1 : 0; }
constexpr int pair_sign(std::uint8_t s, std::uint8_t t) { return pair_weight(s, t) - pair_weight(t, s); }

Configuration exchange(const Configuration& zeta, std::size_t x, std::size_t y);
std::vector<std::uint8_t> occupation(const Configuration& zeta, Species alpha);
Configuration translate(const Configuration& zeta, long long k);

/// N² H_N(ζ): the integer pair count before the 1/N² prefactor.
/// Throws std::invalid_argument unless ζ is equal-density.
std::int64_t energy_count(const Configuration& zeta);
double hamiltonian(const Configuration& zeta);

/// N²[H_N(ζ^{x,y}) − H_N(ζ)]. O(1) for nearest-neighbour bonds (including
/// the wrap bond), O(|y−x|) otherwise.
std::int64_t exchange_energy_delta(const Configuration& zeta, std::size_t x, std::size_t y);
double exchange_gradient(const Configuration& zeta, std::size_t x, std::size_t y);

namespace kernel {

// Unchecked variants over raw site codes, used by enumeration and simulation.
std::int64_t energy_count(SiteCodes codes);
std::int64_t exchange_delta(SiteCodes codes, std::size_t x, std::size_t y);

// Nearest-neighbour bond (x, x+1 mod N).
inline int neighbour_delta(SiteCodes codes, std::size_t x) {
    const std::size_t y = x + 1 == codes.size() ? 0 : x + 1;
    return pair_sign(codes[y], codes[x]);
}

}  // namespace kernel

}  // namespace abc
