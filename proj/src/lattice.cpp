#include "abc/lattice.hpp"

#include <algorithm>

namespace abc {

char species_char(Species s) { return "ABC"[static_cast<int>(s)]; }

Configuration::Configuration(std::vector<std::uint8_t> codes) : sites_(std::move(codes)) {
    for (auto c : sites_) {
        if (c > 2) throw std::invalid_argument("species code out of range");
    }
}

Configuration Configuration::parse(std::string_view text) {
    std::vector<std::uint8_t> codes;
    codes.reserve(text.size());
    for (char ch : text) {
        switch (ch) {
        case 'A': codes.push_back(0); break;
        case 'B': codes.push_back(1); break;
        case 'C': codes.push_back(2); break;
        default:
            throw std::invalid_argument(std::string("invalid species character '") + ch + "'");
        }
    }
    if (codes.empty()) throw std::invalid_argument("empty configuration");
    return Configuration(std::move(codes));
}

std::string Configuration::str() const {
    std::string s(sites_.size(), ' ');
    std::transform(sites_.begin(), sites_.end(), s.begin(), [](std::uint8_t c) { return "ABC"[c]; });
    return s;
}

std::array<int, 3> Configuration::counts() const {
    std::array<int, 3> n{0, 0, 0};
    for (auto c : sites_) ++n[c];
    return n;
}

bool Configuration::is_equal_density() const {
    const auto n = counts();
    return !sites_.empty() && sites_.size() % 3 == 0 && n[0] == n[1] && n[1] == n[2];
}

namespace {

void require_bond(std::size_t n, std::size_t& x, std::size_t& y) {
    if (n == 0) throw std::invalid_argument("empty configuration");
    x %= n;
    y %= n;
    if (x == y) throw std::invalid_argument("exchange requires two distinct sites");
}

void require_equal_density(const Configuration& zeta) {
    if (!zeta.is_equal_density())
        throw std::invalid_argument("Hamiltonian requires an equal-density configuration, got " + zeta.str());
}

}  // namespace

Configuration exchange(const Configuration& zeta, std::size_t x, std::size_t y) {
    require_bond(zeta.size(), x, y);
    std::vector<std::uint8_t> codes(zeta.codes().begin(), zeta.codes().end());
    std::swap(codes[x], codes[y]);
    return Configuration(std::move(codes));
}

std::vector<std::uint8_t> occupation(const Configuration& zeta, Species alpha) {
    std::vector<std::uint8_t> eta(zeta.size());
    const auto a = static_cast<std::uint8_t>(alpha);
    for (std::size_t x = 0; x < zeta.size(); ++x) eta[x] = zeta.codes()[x] == a ? 1 : 0;
    return eta;
}

Configuration translate(const Configuration& zeta, long long k) {
    const auto n = static_cast<long long>(zeta.size());
    std::vector<std::uint8_t> codes(zeta.size());
    const long long shift = ((k % n) + n) % n;
    for (long long x = 0; x < n; ++x) codes[(x + shift) % n] = zeta.codes()[x];
    return Configuration(std::move(codes));
}

namespace kernel {

std::int64_t energy_count(SiteCodes codes) {
    // Each site of species t pairs with every earlier site of species t+1 mod 3.
    std::array<std::int64_t, 3> seen{0, 0, 0};
    std::int64_t k = 0;
    for (auto t : codes) {
        k += seen[(t + 1) % 3];
        ++seen[t];
    }
    return k;
}

std::int64_t exchange_delta(SiteCodes codes, std::size_t x, std::size_t y) {
    const std::size_t n = codes.size();
    if (x > y) std::swap(x, y);
    if (y == x + 1) return pair_sign(codes[y], codes[x]);
    if (x == 0 && y == n - 1) return pair_sign(codes[0], codes[n - 1]);
    const std::uint8_t alpha = codes[x];
    const std::uint8_t gamma = codes[y];
    if (alpha == gamma) return 0;
    std::array<std::int64_t, 3> between{0, 0, 0};
    for (std::size_t z = x + 1; z < y; ++z) ++between[codes[z]];
    std::int64_t d = pair_sign(gamma, alpha);
    for (std::uint8_t s = 0; s < 3; ++s) d += between[s] * (pair_sign(gamma, s) - pair_sign(alpha, s));
    return d;
}

}  // namespace kernel

std::int64_t energy_count(const Configuration& zeta) {
    require_equal_density(zeta);
    return kernel::energy_count(zeta.codes());
}

double hamiltonian(const Configuration& zeta) {
    const double n = static_cast<double>(zeta.size());
    return static_cast<double>(energy_count(zeta)) / (n * n);
}

std::int64_t exchange_energy_delta(const Configuration& zeta, std::size_t x, std::size_t y) {
    require_equal_density(zeta);
    require_bond(zeta.size(), x, y);
    return kernel::exchange_delta(zeta.codes(), x, y);
}

double exchange_gradient(const Configuration& zeta, std::size_t x, std::size_t y) {
    const double n = static_cast<double>(zeta.size());
    return static_cast<double>(exchange_energy_delta(zeta, x, y)) / (n * n);
}

}  // namespace abc
