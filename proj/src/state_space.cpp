#include "abc/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "abc/parallel.hpp"

namespace abc {

BudgetExceeded::BudgetExceeded(const std::string& what, std::uint64_t required, std::uint64_t budget)
    : std::runtime_error(what), required_(required), budget_(budget) {}

std::uint64_t multinomial_count(int n_a, int n_b, int n_c) {
    // Product of binomials keeps every intermediate exact.
    auto binom = [](std::uint64_t n, std::uint64_t k) {
        std::uint64_t r = 1;
        for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    };
    const auto n = static_cast<std::uint64_t>(n_a + n_b + n_c);
    return binom(n, static_cast<std::uint64_t>(n_a)) * binom(n - n_a, static_cast<std::uint64_t>(n_b));
}

StateIndexing::StateIndexing(int n) : n_(n), m_(n / 3) {
    if (n <= 0 || n % 3 != 0)
        throw std::invalid_argument("N must be a positive multiple of 3, got " + std::to_string(n));
    if (n > 36) throw std::invalid_argument("N too large to index with 64-bit ranks");
    table_.resize(static_cast<std::size_t>((m_ + 1) * (m_ + 1) * (m_ + 1)));
    for (int a = 0; a <= m_; ++a)
        for (int b = 0; b <= m_; ++b)
            for (int c = 0; c <= m_; ++c) table_[(a * (m_ + 1) + b) * (m_ + 1) + c] = multinomial_count(a, b, c);
    total_ = count(m_, m_, m_);
}

std::uint64_t StateIndexing::rank(SiteCodes codes) const {
    int left[3] = {m_, m_, m_};
    std::uint64_t r = 0;
    for (auto s : codes) {
        for (std::uint8_t t = 0; t < s; ++t) {
            if (left[t] == 0) continue;
            --left[t];
            r += count(left[0], left[1], left[2]);
            ++left[t];
        }
        --left[s];
    }
    return r;
}

void StateIndexing::unrank(std::uint64_t index, std::span<std::uint8_t> out) const {
    int left[3] = {m_, m_, m_};
    for (int x = 0; x < n_; ++x) {
        for (std::uint8_t t = 0; t < 3; ++t) {
            if (left[t] == 0) continue;
            --left[t];
            const std::uint64_t block = count(left[0], left[1], left[2]);
            if (index < block) {
                out[x] = t;
                break;
            }
            index -= block;
            ++left[t];
        }
    }
}

Configuration StateIndexing::unrank(std::uint64_t index) const {
    if (index >= total_) throw std::out_of_range("state index out of range");
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_));
    unrank(index, codes);
    return Configuration(std::move(codes));
}

void StateIndexing::for_range(std::uint64_t begin, std::uint64_t end,
                              const std::function<void(std::uint64_t, SiteCodes)>& visit) const {
    if (begin >= end) return;
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_));
    unrank(begin, codes);
    for (std::uint64_t i = begin; i < end; ++i) {
        visit(i, codes);
        std::next_permutation(codes.begin(), codes.end());
    }
}

StateIndexing enumerate(int n, MemoryBudget budget) {
    StateIndexing idx(n);
    const std::uint64_t required = idx.total() * kEnsembleBytesPerState;
    if (required > budget.bytes) {
        std::ostringstream msg;
        msg << "N=" << n << " has " << idx.total() << " states requiring " << required
            << " bytes, above the budget of " << budget.bytes << " bytes";
        throw BudgetExceeded(msg.str(), required, budget.bytes);
    }
    return idx;
}

GibbsEnsemble::GibbsEnsemble(StateIndexing indexing, double beta) : indexing_(std::move(indexing)), beta_(beta) {
    if (!(beta >= 0.0)) throw std::invalid_argument("beta must be nonnegative");
    const std::uint64_t total = indexing_.total();
    energy_.resize(total);
    prob_.resize(total);

    const std::uint64_t chunks = chunk_count(total);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        const std::uint64_t e = std::min(total, b + kChunk);
        indexing_.for_range(b, e, [&](std::uint64_t i, SiteCodes codes) {
            energy_[i] = static_cast<std::int32_t>(kernel::energy_count(codes));
        });
    }

    // Z from the integer energy histogram: exact grouping, stable exponent.
    const auto [lo, hi] = std::minmax_element(energy_.begin(), energy_.end());
    k_min_ = *lo;
    k_max_ = *hi;
    std::vector<std::uint64_t> hist(static_cast<std::size_t>(k_max_ - k_min_ + 1), 0);
    for (auto k : energy_) ++hist[static_cast<std::size_t>(k - k_min_)];
    const double n = indexing_.sites();
    double z_shifted = 0.0;
    for (std::size_t d = 0; d < hist.size(); ++d)
        if (hist[d]) z_shifted += static_cast<double>(hist[d]) * std::exp(-beta_ * static_cast<double>(d) / n);
    log_z_ = -beta_ * k_min_ / n + std::log(z_shifted);

    const double log_shift = std::log(z_shifted);
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i)
        prob_[i] = std::exp(-beta_ * (energy_[i] - k_min_) / n - log_shift);
}

double GibbsEnsemble::log_probability(std::uint64_t i) const {
    const double n = indexing_.sites();
    return -beta_ * energy_[i] / n - log_z_;
}

double GibbsEnsemble::unnormalized_weight(std::uint64_t i) const {
    const double n = indexing_.sites();
    return std::exp(-beta_ * energy_[i] / n);
}

double GibbsEnsemble::min_energy() const {
    const double n = indexing_.sites();
    return k_min_ / (n * n);
}

double GibbsEnsemble::max_energy() const {
    const double n = indexing_.sites();
    return k_max_ / (n * n);
}

std::vector<double> GibbsEnsemble::tabulate(const Observable& f) const {
    const std::uint64_t total = size();
    std::vector<double> values(total);
    const std::uint64_t chunks = chunk_count(total);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        indexing_.for_range(b, std::min(total, b + kChunk),
                            [&](std::uint64_t i, SiteCodes codes) { values[i] = f(codes); });
    }
    return values;
}

nlohmann::json GibbsEnsemble::summary() const {
    return {{"N", sites()},       {"beta", beta_},          {"total", size()},
            {"logZ", log_z_},     {"min_energy", min_energy()}, {"max_energy", max_energy()}};
}

GibbsEnsemble build_ensemble(const StateIndexing& indexing, double beta) { return GibbsEnsemble(indexing, beta); }

namespace {

// Ordered chunk reduction of Σ p_i g(v_i).
template <class G>
double weighted_sum(std::span<const double> p, std::span<const double> v, G g) {
    const std::uint64_t total = p.size();
    const std::uint64_t chunks = chunk_count(total);
    std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        const std::uint64_t e = std::min(total, b + kChunk);
        double s = 0.0;
        for (std::uint64_t i = b; i < e; ++i) s += p[i] * g(v[i]);
        partial[c] = s;
    }
    double s = 0.0;
    for (double x : partial) s += x;
    return s;
}

}  // namespace

double expectation(const GibbsEnsemble& ens, std::span<const double> values) {
    if (values.size() != ens.size()) throw std::invalid_argument("observable size does not match ensemble");
    return weighted_sum(ens.probabilities(), values, [](double x) { return x; });
}

double variance(const GibbsEnsemble& ens, std::span<const double> values) {
    const double m = expectation(ens, values);
    return weighted_sum(ens.probabilities(), values, [m](double x) { return (x - m) * (x - m); });
}

double expectation(const GibbsEnsemble& ens, const Observable& f) {
    const auto v = ens.tabulate(f);
    return expectation(ens, v);
}

double variance(const GibbsEnsemble& ens, const Observable& f) {
    const auto v = ens.tabulate(f);
    return variance(ens, v);
}

StreamedMoments stream_moments(int n, double beta, const Observable& f) {
    const StateIndexing idx(n);
    const std::uint64_t total = idx.total();
    const std::uint64_t chunks = chunk_count(total);
    struct Partial {
        double max_exp = -std::numeric_limits<double>::infinity();
        double z = 0.0, s1 = 0.0, s2 = 0.0;
    };
    std::vector<Partial> parts(chunks);
    const double nd = n;
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        Partial p;
        idx.for_range(b, std::min(total, b + kChunk), [&](std::uint64_t, SiteCodes codes) {
            const double e = -beta * static_cast<double>(kernel::energy_count(codes)) / nd;
            if (e > p.max_exp) {
                const double r = std::exp(p.max_exp - e);
                p.z *= r;
                p.s1 *= r;
                p.s2 *= r;
                p.max_exp = e;
            }
            const double w = std::exp(e - p.max_exp);
            const double v = f(codes);
            p.z += w;
            p.s1 += w * v;
            p.s2 += w * v * v;
        });
        parts[c] = p;
    }
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& p : parts) m = std::max(m, p.max_exp);
    double z = 0.0, s1 = 0.0, s2 = 0.0;
    for (const auto& p : parts) {
        const double r = std::exp(p.max_exp - m);
        z += p.z * r;
        s1 += p.s1 * r;
        s2 += p.s2 * r;
    }
    StreamedMoments out;
    out.total = total;
    out.log_z = m + std::log(z);
    out.mean = s1 / z;
    out.variance = std::max(0.0, s2 / z - out.mean * out.mean);
    return out;
}

DiscreteSampler::DiscreteSampler(std::span<const double> weights) : cdf_(weights.size()) {
    if (weights.empty()) throw std::invalid_argument("empty distribution");
    double s = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] >= 0.0)) throw std::invalid_argument("negative weight");
        s += weights[i];
        cdf_[i] = s;
    }
    if (!(s > 0.0)) throw std::invalid_argument("distribution has zero mass");
    for (auto& c : cdf_) c /= s;
    cdf_.back() = 1.0;
}

std::uint64_t DiscreteSampler::operator()(Rng& rng) const {
    const double u = uniform01(rng);
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
}

ExactSampler::ExactSampler(const GibbsEnsemble& ens) : ens_(&ens), sampler_(ens.probabilities()) {}

Configuration ExactSampler::operator()(Rng& rng) const { return ens_->indexing().unrank(sampler_(rng)); }

}  // namespace abc
