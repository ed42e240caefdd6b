#include "abc/generators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace abc {

std::string to_string(Graph g) { return g == Graph::ring ? "ring" : "complete"; }

Graph parse_graph(const std::string& name) {
    if (name == "ring") return Graph::ring;
    if (name == "complete") return Graph::complete;
    throw std::invalid_argument("unknown graph '" + name + "' (expected ring or complete)");
}

double ring_rate(const Configuration& zeta, std::size_t x, double beta) {
    const std::size_t n = zeta.size();
    x %= n;
    const int d = kernel::neighbour_delta(zeta.codes(), x);
    const double half = beta / (2.0 * static_cast<double>(n));
    if (d == 0) return std::exp(half);
    return std::exp(-half * d);
}

double complete_rate(const Configuration& zeta, std::size_t x, std::size_t y, double beta) {
    const double n = static_cast<double>(zeta.size());
    const double grad = exchange_gradient(zeta, x, y);
    return std::exp(-0.5 * beta * n * grad) / n;
}

namespace {

SparseGenerator skeleton(const GibbsEnsemble& ens, double prefactor) {
    SparseGenerator g;
    g.dim = ens.size();
    g.beta = ens.beta();
    g.prefactor = prefactor;
    g.energy_unit = 1.0 / ens.sites();
    g.level.assign(ens.energy_counts().begin(), ens.energy_counts().end());
    g.log_measure.resize(g.dim);
    for (std::uint64_t i = 0; i < g.dim; ++i) g.log_measure[i] = ens.log_probability(i);
    return g;
}

RangeVisitor state_visitor(const StateIndexing& idx) {
    return [&idx](std::uint64_t b, std::uint64_t e,
                  const std::function<void(std::uint64_t, std::span<const std::uint8_t>)>& cb) {
        idx.for_range(b, e, [&](std::uint64_t i, SiteCodes codes) { cb(i, codes); });
    };
}

void check_budget(const GibbsEnsemble& ens, std::uint64_t bonds, AssemblyBudget budget, const char* what) {
    const std::uint64_t required = bonds * ens.size() * AssemblyBudget::kBytesPerEntry;
    if (required > budget.memory.bytes) {
        std::ostringstream msg;
        msg << what << " generator at N=" << ens.sites() << " needs up to " << required
            << " bytes, above the budget of " << budget.memory.bytes << " bytes";
        throw BudgetExceeded(msg.str(), required, budget.memory.bytes);
    }
}

}  // namespace

SparseGenerator build_ring_generator(const GibbsEnsemble& ens, Exec exec, AssemblyBudget budget) {
    const int n = ens.sites();
    check_budget(ens, static_cast<std::uint64_t>(n), budget, "ring");
    SparseGenerator g = skeleton(ens, 1.0);
    const double half = ens.beta() / (2.0 * n);
    const double down = std::exp(half), up = std::exp(-half);
    const StateIndexing& idx = ens.indexing();
    assemble_rows(
        g, state_visitor(idx),
        [&](std::uint64_t, std::span<const std::uint8_t> state, std::vector<GeneratorEntry>& out) {
            std::vector<std::uint8_t> work(state.begin(), state.end());
            for (int x = 0; x < n; ++x) {
                const int y = (x + 1) % n;
                if (work[x] == work[y]) continue;
                const int d = kernel::neighbour_delta(work, static_cast<std::size_t>(x));
                std::swap(work[x], work[y]);
                const auto j = static_cast<std::uint32_t>(idx.rank(work));
                std::swap(work[x], work[y]);
                out.push_back({j, d < 0 ? down : up, d});
            }
        },
        exec);
    return g;
}

SparseGenerator build_complete_generator(const GibbsEnsemble& ens, Exec exec, AssemblyBudget budget) {
    const int n = ens.sites();
    check_budget(ens, static_cast<std::uint64_t>(n) * (n - 1) / 2, budget, "complete");
    SparseGenerator g = skeleton(ens, 1.0 / n);
    const double half = ens.beta() / (2.0 * n);
    const StateIndexing& idx = ens.indexing();
    assemble_rows(
        g, state_visitor(idx),
        [&](std::uint64_t, std::span<const std::uint8_t> state, std::vector<GeneratorEntry>& out) {
            std::vector<std::uint8_t> work(state.begin(), state.end());
            for (int x = 0; x < n; ++x)
                for (int y = x + 1; y < n; ++y) {
                    if (work[x] == work[y]) continue;
                    const auto d = kernel::exchange_delta(work, static_cast<std::size_t>(x), static_cast<std::size_t>(y));
                    std::swap(work[x], work[y]);
                    const auto j = static_cast<std::uint32_t>(idx.rank(work));
                    std::swap(work[x], work[y]);
                    out.push_back({j, std::exp(-half * static_cast<double>(d)) / n, static_cast<std::int32_t>(d)});
                }
        },
        exec);
    return g;
}

SparseGenerator build_generator(const GibbsEnsemble& ens, Graph graph, Exec exec, AssemblyBudget budget) {
    return graph == Graph::ring ? build_ring_generator(ens, exec, budget) : build_complete_generator(ens, exec, budget);
}

DetailedBalanceReport detailed_balance(const SparseGenerator& g) {
    DetailedBalanceReport r;
    const bool integral = g.level.size() == g.dim;
    double max_flux = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i)
        for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            const std::uint64_t j = g.col[k];
            ++r.entries_checked;
            const auto b = g.col.begin() + static_cast<std::ptrdiff_t>(g.row_ptr[j]);
            const auto e = g.col.begin() + static_cast<std::ptrdiff_t>(g.row_ptr[j + 1]);
            const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(i));
            if (it == e || *it != i) {
                ++r.missing_reverse;
                continue;
            }
            const auto kr = static_cast<std::size_t>(it - g.col.begin());
            if (integral) {
                const std::int64_t lhs = 2 * g.level[i] + g.delta[k];
                const std::int64_t rhs = 2 * g.level[j] + g.delta[kr];
                r.exponent_residual = std::max(r.exponent_residual, std::abs(lhs - rhs));
                if (g.delta[k] != g.level[j] - g.level[i]) ++r.inconsistent_deltas;
            }
            const double fij = std::exp(g.log_measure[i]) * g.rate[k];
            const double fji = std::exp(g.log_measure[j]) * g.rate[kr];
            max_flux = std::max(max_flux, fij);
            r.float_residual = std::max(r.float_residual, std::abs(fij - fji));
        }
    if (max_flux > 0.0) r.float_residual /= max_flux;
    return r;
}

double dirichlet_quadratic(const SparseGenerator& g, std::span<const double> f) {
    std::vector<double> lf(g.dim);
    apply_generator(g, f, lf);
    double s = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i) s -= std::exp(g.log_measure[i]) * f[i] * lf[i];
    return s;
}

double dirichlet_half_sum(const SparseGenerator& g, std::span<const double> f) {
    double s = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i) {
        double row = 0.0;
        for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            const double d = f[g.col[k]] - f[i];
            row += g.rate[k] * d * d;
        }
        s += std::exp(g.log_measure[i]) * row;
    }
    return 0.5 * s;
}

double measure_variance(const SparseGenerator& g, std::span<const double> f) {
    double m = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i) m += std::exp(g.log_measure[i]) * f[i];
    double v = 0.0;
    for (std::uint64_t i = 0; i < g.dim; ++i) v += std::exp(g.log_measure[i]) * (f[i] - m) * (f[i] - m);
    return v;
}

double rayleigh_quotient(const SparseGenerator& g, std::span<const double> f) {
    if (f.size() != g.dim) throw std::invalid_argument("function size does not match generator");
    double scale = 0.0;
    for (double v : f) scale = std::max(scale, std::abs(v));
    const double var = measure_variance(g, f);
    if (!(var > 1e-24 * std::max(1.0, scale * scale)))
        throw std::invalid_argument("Rayleigh quotient of a function with zero variance");
    return dirichlet_half_sum(g, f) / var;
}

ComparisonReport comparison_check(const SparseGenerator& ring, const SparseGenerator& complete, int n, double beta,
                                  std::span<const double> f) {
    ComparisonReport r;
    r.lhs = dirichlet_half_sum(complete, f);
    r.rhs = 2.0 * std::exp(3.0 * beta) * n * n * dirichlet_half_sum(ring, f);
    r.holds = r.lhs <= r.rhs + 1e-12;
    return r;
}

}  // namespace abc
