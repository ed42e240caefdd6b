#include "abc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace abc {

void set_worker_count(int workers) {
#ifdef _OPENMP
    if (workers > 0) omp_set_num_threads(workers);
#else
    (void)workers;
#endif
}

int worker_count() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

double SparseGenerator::rate_of(std::uint64_t i, std::uint64_t j) const {
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(b, e, static_cast<std::uint32_t>(j));
    if (it == e || *it != j) return 0.0;
    return rate[static_cast<std::size_t>(it - col.begin())];
}

void assemble_rows(SparseGenerator& g, const RangeVisitor& visit, const RowBuilder& build, Exec exec) {
    const std::uint64_t dim = g.dim;
    const std::uint64_t chunks = chunk_count(dim);
    std::vector<std::vector<GeneratorEntry>> chunk_entries(chunks);
    std::vector<std::vector<std::uint32_t>> chunk_counts(chunks);
    std::vector<char> conflict(chunks, 0);

#pragma omp parallel for schedule(dynamic) if (exec == Exec::parallel)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        const std::uint64_t e = std::min(dim, b + kChunk);
        auto& entries = chunk_entries[c];
        auto& counts = chunk_counts[c];
        counts.reserve(e - b);
        std::vector<GeneratorEntry> row;
        visit(b, e, [&](std::uint64_t i, std::span<const std::uint8_t> state) {
            row.clear();
            build(i, state, row);
            std::sort(row.begin(), row.end(), [](const auto& l, const auto& r) { return l.col < r.col; });
            std::size_t kept = 0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                if (row[k].col == i) continue;  // self-loops never act
                if (kept > 0 && entries.back().col == row[k].col) {
                    if (entries.back().delta != row[k].delta) conflict[c] = 1;
                    entries.back().rate += row[k].rate;
                    continue;
                }
                entries.push_back(row[k]);
                ++kept;
            }
            counts.push_back(static_cast<std::uint32_t>(kept));
        });
    }

    if (std::find(conflict.begin(), conflict.end(), 1) != conflict.end())
        throw std::logic_error("parallel transitions with different energy changes");

    g.row_ptr.assign(dim + 1, 0);
    std::uint64_t r = 0;
    for (const auto& counts : chunk_counts)
        for (auto n : counts) {
            g.row_ptr[r + 1] = g.row_ptr[r] + n;
            ++r;
        }
    if (r != dim) throw std::logic_error("row visitor skipped rows");
    const std::uint64_t nnz = g.row_ptr[dim];
    g.col.resize(nnz);
    g.rate.resize(nnz);
    g.delta.resize(nnz);
    g.diag.assign(dim, 0.0);

#pragma omp parallel for if (exec == Exec::parallel)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t b = static_cast<std::uint64_t>(c) * kChunk;
        std::uint64_t k = g.row_ptr[b];
        for (const auto& en : chunk_entries[c]) {
            g.col[k] = en.col;
            g.rate[k] = en.rate;
            g.delta[k] = en.delta;
            ++k;
        }
        const std::uint64_t e = std::min(dim, b + kChunk);
        for (std::uint64_t i = b; i < e; ++i) {
            double s = 0.0;
            for (std::uint64_t q = g.row_ptr[i]; q < g.row_ptr[i + 1]; ++q) s += g.rate[q];
            g.diag[i] = -s;
        }
        chunk_entries[c].clear();
        chunk_entries[c].shrink_to_fit();
    }
}

SymmetricOperator symmetrize(const SparseGenerator& g) {
    if (g.log_measure.size() != g.dim) throw std::invalid_argument("generator has no reversible measure attached");
    SymmetricOperator s;
    s.dim = g.dim;
    s.row_ptr = g.row_ptr;
    s.col = g.col;
    s.diag = g.diag;
    s.value.resize(g.col.size());
    s.ground_state.resize(g.dim);
#pragma omp parallel for
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(g.dim); ++i) {
        const double li = g.log_measure[i];
        s.ground_state[i] = std::exp(0.5 * li);
        for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k)
            s.value[k] = g.rate[k] * std::exp(0.5 * (li - g.log_measure[g.col[k]]));
    }
    const double norm = std::sqrt(dot(s.ground_state, s.ground_state));
    for (auto& v : s.ground_state) v /= norm;
    return s;
}

void spmv(const SymmetricOperator& s, std::span<const double> x, std::span<double> y, Exec exec) {
    const auto n = static_cast<std::int64_t>(s.dim);
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) {
            double acc = s.diag[i] * x[i];
            for (std::uint64_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) acc += s.value[k] * x[s.col[k]];
            y[i] = acc;
        }
        return;
    }
#pragma omp parallel for schedule(static, 1024)
    for (std::int64_t i = 0; i < n; ++i) {
        double acc = s.diag[i] * x[i];
        for (std::uint64_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) acc += s.value[k] * x[s.col[k]];
        y[i] = acc;
    }
}

void apply_generator(const SparseGenerator& g, std::span<const double> f, std::span<double> y, Exec exec) {
    const auto n = static_cast<std::int64_t>(g.dim);
    auto row = [&](std::int64_t i) {
        double acc = 0.0;
        for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) acc += g.rate[k] * (f[g.col[k]] - f[i]);
        y[i] = acc;
    };
    if (exec == Exec::serial) {
        for (std::int64_t i = 0; i < n; ++i) row(i);
        return;
    }
#pragma omp parallel for schedule(static, 1024)
    for (std::int64_t i = 0; i < n; ++i) row(i);
}

double dot(std::span<const double> a, std::span<const double> b, Exec exec) {
    const std::uint64_t n = a.size();
    if (exec == Exec::serial) {
        double s = 0.0;
        for (std::uint64_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s;
    }
    const std::uint64_t chunks = chunk_count(n);
    std::vector<double> partial(chunks);
#pragma omp parallel for
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(chunks); ++c) {
        const std::uint64_t lo = static_cast<std::uint64_t>(c) * kChunk;
        const std::uint64_t hi = std::min(n, lo + kChunk);
        double s = 0.0;
        for (std::uint64_t i = lo; i < hi; ++i) s += a[i] * b[i];
        partial[c] = s;
    }
    double s = 0.0;
    for (double p : partial) s += p;
    return s;
}

void write_coordinate(const SparseGenerator& g, std::ostream& out) {
    char buf[96];
    for (std::uint64_t i = 0; i < g.dim; ++i) {
        bool diag_done = false;
        auto emit_diag = [&] {
            std::snprintf(buf, sizeof buf, "%llu %llu %.17g\n", static_cast<unsigned long long>(i),
                          static_cast<unsigned long long>(i), g.diag[i]);
            out << buf;
            diag_done = true;
        };
        for (std::uint64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            if (!diag_done && g.col[k] > i) emit_diag();
            std::snprintf(buf, sizeof buf, "%llu %u %.17g\n", static_cast<unsigned long long>(i), g.col[k], g.rate[k]);
            out << buf;
        }
        if (!diag_done) emit_diag();
    }
}

}  // namespace abc
