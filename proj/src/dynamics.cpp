#include "abc/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace abc {

SumTree::SumTree(std::size_t leaves) : leaves_(leaves), base_(1) {
    while (base_ < std::max<std::size_t>(leaves, 1)) base_ <<= 1;
    node_.assign(2 * base_, 0.0);
}

void SumTree::set(std::size_t leaf, double w) {
    std::size_t i = base_ + leaf;
    node_[i] = w;
    for (i >>= 1; i >= 1; i >>= 1) node_[i] = node_[2 * i] + node_[2 * i + 1];
}

std::size_t SumTree::find(double u) const {
    std::size_t i = 1;
    while (i < base_) {
        const double left = node_[2 * i];
        if ((u < left && left > 0.0) || node_[2 * i + 1] <= 0.0) {
            i = 2 * i;
        } else {
            u -= left;
            i = 2 * i + 1;
        }
    }
    return i - base_;
}

KineticSimulator::KineticSimulator(const Configuration& initial, double beta, Graph graph)
    : n_(static_cast<int>(initial.size())),
      beta_(beta),
      graph_(graph),
      energy_(abc::energy_count(initial)),
      codes_(initial.codes().begin(), initial.codes().end()),
      tree_(graph == Graph::ring ? initial.size() : initial.size() * (initial.size() - 1) / 2) {
    if (graph == Graph::ring) {
        for (int x = 0; x < n_; ++x) bonds_.emplace_back(x, (x + 1) % n_);
    } else {
        for (int x = 0; x < n_; ++x)
            for (int y = x + 1; y < n_; ++y) bonds_.emplace_back(x, y);
    }
    bond_delta_.assign(bonds_.size(), 0);
    if (graph == Graph::ring) {
        for (std::size_t b = 0; b < bonds_.size(); ++b) refresh_ring(b);
    } else {
        refresh_complete();
    }
}

void KineticSimulator::refresh_ring(std::size_t bond) {
    const auto [x, y] = bonds_[bond];
    if (codes_[x] == codes_[y]) {
        bond_delta_[bond] = 0;
        tree_.set(bond, 0.0);
        return;
    }
    const int d = kernel::neighbour_delta(codes_, x);
    bond_delta_[bond] = d;
    tree_.set(bond, std::exp(-beta_ * d / (2.0 * n_)));
}

void KineticSimulator::refresh_complete() {
    // Long-bond energy changes depend on the species strictly between the
    // endpoints, so every bond is recomputed from prefix counts.
    std::vector<std::array<std::int32_t, 3>> prefix(static_cast<std::size_t>(n_) + 1, {0, 0, 0});
    for (int z = 0; z < n_; ++z) {
        prefix[z + 1] = prefix[z];
        ++prefix[z + 1][codes_[z]];
    }
    const double half = beta_ / (2.0 * n_);
    for (std::size_t b = 0; b < bonds_.size(); ++b) {
        const auto [x, y] = bonds_[b];
        const std::uint8_t alpha = codes_[x], gamma = codes_[y];
        if (alpha == gamma) {
            bond_delta_[b] = 0;
            tree_.set(b, 0.0);
            continue;
        }
        std::int32_t d = pair_sign(gamma, alpha);
        for (std::uint8_t s = 0; s < 3; ++s)
            d += (prefix[y][s] - prefix[x + 1][s]) * (pair_sign(gamma, s) - pair_sign(alpha, s));
        bond_delta_[b] = d;
        tree_.set(b, std::exp(-half * d) / n_);
    }
}

std::optional<Event> KineticSimulator::step(double horizon, Rng& rng) {
    const double total = tree_.total();
    if (!(total > 0.0)) {
        time_ = std::max(time_, horizon);
        return std::nullopt;
    }
    const double dt = exponential(rng, total);
    if (time_ + dt > horizon) {
        // Memorylessness: the pending clock can be redrawn from `horizon`.
        time_ = horizon;
        return std::nullopt;
    }
    time_ += dt;
    const std::size_t leaf = tree_.find(uniform_open(rng) * total);
    const auto [x, y] = bonds_[leaf];
    energy_ += bond_delta_[leaf];
    std::swap(codes_[x], codes_[y]);
    if (graph_ == Graph::ring) {
        const std::size_t n = static_cast<std::size_t>(n_);
        refresh_ring((leaf + n - 1) % n);
        refresh_ring(leaf);
        refresh_ring((leaf + 1) % n);
    } else {
        refresh_complete();
    }
    return Event{time_, x, y};
}

Trajectory simulate(const Configuration& initial, double beta, double horizon, Graph graph, Rng& rng) {
    if (!(horizon > 0.0)) throw std::invalid_argument("simulation horizon must be positive");
    KineticSimulator sim(initial, beta, graph);
    Trajectory tr;
    tr.initial = initial;
    tr.horizon = horizon;
    while (auto ev = sim.step(horizon, rng)) tr.events.push_back(*ev);
    tr.final_state = sim.configuration();
    return tr;
}

Configuration random_equal_density(int n, Rng& rng) {
    if (n <= 0 || n % 3 != 0) throw std::invalid_argument("N must be a positive multiple of 3");
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) codes[x] = static_cast<std::uint8_t>(3 * x / n);
    for (std::size_t i = codes.size() - 1; i > 0; --i) std::swap(codes[i], codes[uniform_index(rng, i + 1)]);
    return Configuration(std::move(codes));
}

std::vector<EstimateWithError> mcmc_expectations(std::span<const Observable> fs, int n, double beta, Graph graph,
                                                 double horizon, double burn_in, Rng& rng,
                                                 const McmcOptions& opts) {
    if (opts.batches < 8)
        throw std::invalid_argument("batch means needs at least 8 batches; run longer or use more batches");
    if (!(burn_in >= 0.0 && burn_in < horizon)) throw std::invalid_argument("burn-in must lie in [0, horizon)");
    const Configuration start = opts.initial ? *opts.initial : random_equal_density(n, rng);
    if (static_cast<int>(start.size()) != n) throw std::invalid_argument("initial state has the wrong size");
    KineticSimulator sim(start, beta, graph);
    while (sim.step(burn_in, rng)) {
    }

    const std::size_t nf = fs.size();
    const int nb = opts.batches;
    const double len = (horizon - burn_in) / nb;
    std::vector<std::vector<double>> batch(nf, std::vector<double>(static_cast<std::size_t>(nb)));
    std::vector<double> sum(nf, 0.0), sum2(nf, 0.0);
    double weight_total = 0.0;
    std::vector<double> value(nf);
    // Observables that never change are reported exactly, without the
    // rounding of the weighted sums.
    std::vector<char> constant(nf, 1);
    std::vector<double> first(nf);
    auto evaluate = [&] {
        for (std::size_t q = 0; q < nf; ++q) {
            value[q] = fs[q](sim.state());
            if (value[q] != first[q]) constant[q] = 0;
        }
    };

    for (std::size_t q = 0; q < nf; ++q) first[q] = fs[q](sim.state());
    evaluate();
    for (int b = 0; b < nb; ++b) {
        const double end = burn_in + (b + 1) * len;
        std::vector<double> acc(nf, 0.0);
        double batch_weight = 0.0;
        if (opts.sample_interval > 0.0) {
            const double dt = opts.sample_interval;
            double next = burn_in + dt * std::ceil((sim.time() - burn_in) / dt + 1e-12);
            if (next <= sim.time()) next += dt;
            while (next <= end + 1e-12 * std::max(1.0, end)) {
                while (sim.step(next, rng)) {
                }
                evaluate();
                if (opts.on_sample) opts.on_sample(next, sim.state());
                for (std::size_t q = 0; q < nf; ++q) {
                    acc[q] += value[q];
                    sum2[q] += value[q] * value[q];
                }
                batch_weight += 1.0;
                next += dt;
            }
            while (sim.step(end, rng)) {
            }
            evaluate();
        } else {
            double last = sim.time();
            while (auto ev = sim.step(end, rng)) {
                const double w = ev->time - last;
                for (std::size_t q = 0; q < nf; ++q) {
                    acc[q] += value[q] * w;
                    sum2[q] += value[q] * value[q] * w;
                }
                batch_weight += w;
                last = ev->time;
                evaluate();
            }
            const double w = end - last;
            for (std::size_t q = 0; q < nf; ++q) {
                acc[q] += value[q] * w;
                sum2[q] += value[q] * value[q] * w;
            }
            batch_weight += w;
        }
        if (!(batch_weight > 0.0))
            throw std::invalid_argument("sampling interval longer than a batch; run longer");
        for (std::size_t q = 0; q < nf; ++q) {
            batch[q][b] = acc[q] / batch_weight;
            sum[q] += acc[q];
        }
        weight_total += batch_weight;
    }

    std::vector<EstimateWithError> out(nf);
    for (std::size_t q = 0; q < nf; ++q) {
        double m = 0.0;
        for (double x : batch[q]) m += x;
        m /= nb;
        double ss = 0.0;
        for (double x : batch[q]) ss += (x - m) * (x - m);
        const double se = std::sqrt(ss / (nb - 1) / nb);
        const double mean_all = sum[q] / weight_total;
        const double var = std::max(0.0, sum2[q] / weight_total - mean_all * mean_all);
        auto& e = out[q];
        e.mean = constant[q] ? first[q] : m;
        e.standard_error = constant[q] ? 0.0 : se;
        e.effective_samples = se > 0.0 ? std::max(1.0, var / (se * se)) : static_cast<double>(nb);
        e.method = "batch-means(" + std::to_string(nb) + ")";
    }
    return out;
}

EstimateWithError mcmc_expectation(const Observable& f, int n, double beta, Graph graph, double horizon,
                                   double burn_in, Rng& rng, const McmcOptions& opts) {
    const Observable fs[1] = {f};
    return mcmc_expectations(fs, n, beta, graph, horizon, burn_in, rng, opts).front();
}

double test_function(SiteCodes codes, std::span<const double> phi_grid) {
    const std::size_t n = codes.size();
    if (phi_grid.size() != n) throw std::invalid_argument("phi must be sampled on the N-point grid");
    double mean = 0.0, scale = 0.0;
    for (double v : phi_grid) {
        mean += v;
        scale = std::max(scale, std::abs(v));
    }
    mean /= static_cast<double>(n);
    if (std::abs(mean) > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("test function profile must have zero mean");
    double s = 0.0;
    for (std::size_t x = 0; x < n; ++x)
        if (codes[x] == static_cast<std::uint8_t>(Species::B)) s += phi_grid[x];
    return s / static_cast<double>(n);
}

double test_function(const Configuration& zeta, const std::function<double(double)>& phi) {
    const std::size_t n = zeta.size();
    std::vector<double> grid(n);
    for (std::size_t x = 0; x < n; ++x) grid[x] = phi(static_cast<double>(x) / static_cast<double>(n));
    return test_function(zeta.codes(), grid);
}

std::complex<double> fourier_mode(SiteCodes codes, int k) {
    if (k < 1) throw std::invalid_argument("Fourier mode index must be at least 1");
    const std::size_t n = codes.size();
    std::complex<double> s = 0.0;
    const double w = 2.0 * std::numbers::pi * k / static_cast<double>(n);
    for (std::size_t x = 0; x < n; ++x) {
        const double eta = codes[x] == static_cast<std::uint8_t>(Species::B) ? 1.0 : 0.0;
        s += (eta - 1.0 / 3.0) * std::polar(1.0, w * static_cast<double>(x));
    }
    return s / static_cast<double>(n);
}

double order_parameter(SiteCodes codes, int k) { return std::abs(fourier_mode(codes, k)); }

AutocorrelationResult autocorrelation_time(std::span<const double> series, double spacing) {
    const std::size_t n = series.size();
    if (n < 1000) throw std::invalid_argument("autocorrelation time needs at least 1000 samples");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = series[i] - mean;
    auto cov = [&](std::size_t lag) {
        double s = 0.0;
        for (std::size_t i = 0; i + lag < n; ++i) s += d[i] * d[i + lag];
        return s / static_cast<double>(n);
    };
    const double c0 = cov(0);
    if (!(c0 > 0.0)) throw std::invalid_argument("autocorrelation time of a constant series is undefined");
    double tau = 0.5;
    const std::size_t max_window = n / 4;
    for (std::size_t w = 1; w <= max_window; ++w) {
        tau += cov(w) / c0;
        if (static_cast<double>(w) >= 6.0 * tau) return {tau * spacing, static_cast<int>(w)};
    }
    std::ostringstream msg;
    msg << "autocorrelation window did not converge: tau=" << tau << " samples at window " << max_window << " of "
        << n << " samples; use a longer series";
    throw std::runtime_error(msg.str());
}

}  // namespace abc
