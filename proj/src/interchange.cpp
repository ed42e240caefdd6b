#include "abc/interchange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "abc/state_space.hpp"

namespace abc {

Permutation::Permutation(std::vector<std::uint8_t> values) : v_(std::move(values)) {
    std::vector<char> seen(v_.size() + 1, 0);
    for (auto x : v_) {
        if (x < 1 || x > v_.size() || seen[x]) throw std::invalid_argument("not a permutation of 1..N");
        seen[x] = 1;
    }
}

Permutation Permutation::identity(int n) {
    std::vector<std::uint8_t> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = static_cast<std::uint8_t>(i + 1);
    return Permutation(std::move(v));
}

int Permutation::sign() const {
    std::vector<char> seen(v_.size(), 0);
    int s = 1;
    for (std::size_t i = 0; i < v_.size(); ++i) {
        if (seen[i]) continue;
        std::size_t len = 0;
        for (std::size_t j = i; !seen[j]; j = v_[j] - 1u) {
            seen[j] = 1;
            ++len;
        }
        if (len % 2 == 0) s = -s;
    }
    return s;
}

std::string Permutation::str() const {
    std::string s;
    for (auto x : v_) s += std::to_string(x) + (v_.size() > 9 ? " " : "");
    return s;
}

Permutation apply_transposition(const Permutation& sigma, std::size_t x, std::size_t y) {
    if (x >= sigma.size() || y >= sigma.size()) throw std::invalid_argument("transposition position out of range");
    if (x == y) throw std::invalid_argument("transposition needs two distinct positions");
    std::vector<std::uint8_t> v(sigma.values().begin(), sigma.values().end());
    std::swap(v[x], v[y]);
    return Permutation(std::move(v));
}

std::uint64_t factorial(int n) {
    if (n < 0 || n > 20) throw std::invalid_argument("factorial out of range");
    std::uint64_t f = 1;
    for (int i = 2; i <= n; ++i) f *= static_cast<std::uint64_t>(i);
    return f;
}

std::uint64_t permutation_rank(std::span<const std::uint8_t> v) {
    const int n = static_cast<int>(v.size());
    std::uint64_t r = 0;
    for (int i = 0; i < n; ++i) {
        int smaller = 0;
        for (int j = i + 1; j < n; ++j) smaller += v[j] < v[i];
        r = r * static_cast<std::uint64_t>(n - i) + static_cast<std::uint64_t>(smaller);
    }
    return r;
}

Permutation permutation_unrank(int n, std::uint64_t rank) {
    if (rank >= factorial(n)) throw std::invalid_argument("permutation rank out of range");
    std::vector<std::uint8_t> pool(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) pool[i] = static_cast<std::uint8_t>(i + 1);
    std::vector<std::uint8_t> out;
    out.reserve(pool.size());
    for (int i = 0; i < n; ++i) {
        const std::uint64_t f = factorial(n - 1 - i);
        const auto k = static_cast<std::ptrdiff_t>(rank / f);
        rank %= f;
        out.push_back(pool[k]);
        pool.erase(pool.begin() + k);
    }
    return Permutation(std::move(out));
}

namespace {

std::uint8_t colour_of(std::uint8_t value) {
    switch (value % 3) {
        case 1: return static_cast<std::uint8_t>(Species::A);
        case 2: return static_cast<std::uint8_t>(Species::B);
        default: return static_cast<std::uint8_t>(Species::C);
    }
}

std::vector<std::uint8_t> colours(std::span<const std::uint8_t> sigma) {
    std::vector<std::uint8_t> c(sigma.size());
    for (std::size_t x = 0; x < sigma.size(); ++x) c[x] = colour_of(sigma[x]);
    return c;
}

}  // namespace

Configuration colorblind_project(const Permutation& sigma) {
    if (sigma.size() == 0 || sigma.size() % 3 != 0)
        throw std::invalid_argument("colorblind projection needs N a positive multiple of 3");
    return Configuration(colours(sigma.values()));
}

double EnergyOracle::gradient(std::span<const std::uint8_t> sigma, std::size_t x, std::size_t y) const {
    std::vector<std::uint8_t> w(sigma.begin(), sigma.end());
    std::swap(w[x], w[y]);
    return energy(w) - energy(sigma);
}

ColorblindOracle::ColorblindOracle(int n) : n_(n) {
    if (n <= 0 || n % 3 != 0) throw std::invalid_argument("colorblind oracle needs N a positive multiple of 3");
}

double ColorblindOracle::energy(std::span<const std::uint8_t> sigma) const {
    return static_cast<double>(kernel::energy_count(colours(sigma))) / n_;
}

double ColorblindOracle::gradient(std::span<const std::uint8_t> sigma, std::size_t x, std::size_t y) const {
    return static_cast<double>(kernel::exchange_delta(colours(sigma), x, y)) / n_;
}

std::optional<std::int64_t> ColorblindOracle::energy_units(std::span<const std::uint8_t> sigma) const {
    return kernel::energy_count(colours(sigma));
}

std::unique_ptr<EnergyOracle> make_oracle(const std::string& name, int n) {
    if (name == "zero") return std::make_unique<ZeroOracle>();
    if (name == "colorblind") return std::make_unique<ColorblindOracle>(n);
    throw std::invalid_argument("unknown energy oracle '" + name + "' (expected zero or colorblind)");
}

double transposition_rate(const Permutation& sigma, std::size_t x, std::size_t y, double beta,
                          const EnergyOracle& oracle) {
    if (x == y) throw std::invalid_argument("transposition needs two distinct positions");
    return std::exp(-0.5 * beta * oracle.gradient(sigma.values(), x, y)) / static_cast<double>(sigma.size());
}

SparseGenerator build_interchange_generator(int n, double beta, const EnergyOracle& oracle, Exec exec,
                                            InterchangeLimits limits) {
    if (n < 2) throw std::invalid_argument("interchange process needs N >= 2");
    if (n > limits.max_sites) {
        std::ostringstream msg;
        msg << "S_" << n << " has " << factorial(n) << " states; the limit is N <= " << limits.max_sites
            << " (N = 8 requires an explicit override)";
        throw BudgetExceeded(msg.str(), factorial(n), factorial(limits.max_sites));
    }
    if (n > 8) throw std::invalid_argument("interchange generator supports N <= 8");
    SparseGenerator g;
    g.dim = factorial(n);
    g.beta = beta;
    g.prefactor = 1.0 / n;
    g.energy_unit = oracle.unit();

    std::vector<double> energy(g.dim);
    bool integral = true;
    std::vector<std::int64_t> level(g.dim);
    for (std::uint64_t i = 0; i < g.dim; ++i) {
        const Permutation p = permutation_unrank(n, i);
        energy[i] = oracle.energy(p.values());
        if (const auto u = oracle.energy_units(p.values()))
            level[i] = *u;
        else
            integral = false;
    }
    if (integral) g.level = std::move(level);
    double e_min = *std::min_element(energy.begin(), energy.end());
    double z = 0.0;
    for (double e : energy) z += std::exp(-beta * (e - e_min));
    g.log_measure.resize(g.dim);
    for (std::uint64_t i = 0; i < g.dim; ++i) g.log_measure[i] = -beta * (energy[i] - e_min) - std::log(z);

    const bool units = !g.level.empty();
    assemble_rows(
        g,
        [n](std::uint64_t b, std::uint64_t e,
            const std::function<void(std::uint64_t, std::span<const std::uint8_t>)>& cb) {
            for (std::uint64_t i = b; i < e; ++i) {
                const Permutation p = permutation_unrank(n, i);
                cb(i, p.values());
            }
        },
        [&](std::uint64_t i, std::span<const std::uint8_t> state, std::vector<GeneratorEntry>& out) {
            std::vector<std::uint8_t> w(state.begin(), state.end());
            for (int x = 0; x < n; ++x)
                for (int y = x + 1; y < n; ++y) {
                    const double grad = oracle.gradient(w, static_cast<std::size_t>(x), static_cast<std::size_t>(y));
                    std::swap(w[x], w[y]);
                    const auto j = permutation_rank(w);
                    std::swap(w[x], w[y]);
                    std::int32_t d = 0;
                    if (units) d = static_cast<std::int32_t>(g.level[j] - g.level[i]);
                    out.push_back({static_cast<std::uint32_t>(j), std::exp(-0.5 * beta * grad) / n, d});
                }
        },
        exec);
    return g;
}

PushforwardReport pushforward_check(int n, double beta) {
    if (n <= 0 || n % 3 != 0) throw std::invalid_argument("pushforward check needs N a positive multiple of 3");
    if (n > 8) throw std::invalid_argument("pushforward check enumerates S_N; N <= 8");
    PushforwardReport r;
    r.n = n;
    r.beta = beta;
    r.permutations = factorial(n);
    const StateIndexing idx = enumerate(n);
    const GibbsEnsemble ens = build_ensemble(idx, beta);
    r.configurations = idx.total();

    const ColorblindOracle oracle(n);
    std::vector<double> log_w(r.permutations);
    std::vector<std::uint64_t> target(r.permutations);
    double w_max = -std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < r.permutations; ++i) {
        const Permutation p = permutation_unrank(n, i);
        log_w[i] = -beta * oracle.energy(p.values());
        w_max = std::max(w_max, log_w[i]);
        target[i] = idx.rank(colorblind_project(p));
    }
    double z = 0.0;
    for (double lw : log_w) z += std::exp(lw - w_max);
    std::vector<double> fiber_mass(idx.total(), 0.0);
    std::vector<std::uint64_t> fiber_size(idx.total(), 0);
    for (std::uint64_t i = 0; i < r.permutations; ++i) {
        fiber_mass[target[i]] += std::exp(log_w[i] - w_max) / z;
        ++fiber_size[target[i]];
    }
    r.fiber_min = *std::min_element(fiber_size.begin(), fiber_size.end());
    r.fiber_max = *std::max_element(fiber_size.begin(), fiber_size.end());
    for (std::uint64_t k = 0; k < idx.total(); ++k)
        r.max_discrepancy = std::max(r.max_discrepancy, std::abs(fiber_mass[k] - ens.probability(k)));
    return r;
}

GapCharacterization gap_characterization_check(const SparseGenerator& g, std::span<const double> f, double k) {
    std::vector<double> lf(g.dim);
    apply_generator(g, f, lf, Exec::serial);
    GapCharacterization c;
    double form = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i) {
        const double p = std::exp(g.log_measure[i]);
        c.lhs += p * lf[i] * lf[i];
        form -= p * f[i] * lf[i];
    }
    c.rhs = k * form;
    c.holds = c.lhs >= c.rhs - 1e-12 * std::max(1.0, std::abs(c.rhs));
    return c;
}

double rate_identity_residual(const Permutation& sigma, std::size_t x, std::size_t y, std::size_t u, std::size_t v,
                              double beta, const EnergyOracle& oracle) {
    if (x == u || x == v || y == u || y == v) throw std::invalid_argument("rate identity needs disjoint bonds");
    const double ca = transposition_rate(sigma, x, y, beta, oracle);
    const double cb = transposition_rate(sigma, u, v, beta, oracle);
    const double cb_a = transposition_rate(apply_transposition(sigma, x, y), u, v, beta, oracle);
    const double ca_b = transposition_rate(apply_transposition(sigma, u, v), x, y, beta, oracle);
    const double lhs = ca * (cb + cb_a);
    const double rhs = cb * (ca + ca_b);
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
}

}  // namespace abc
