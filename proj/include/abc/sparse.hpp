#pragma once

// Compressed-sparse-row storage for reversible Markov generators, the
// symmetrized operator W^{1/2} L W^{-1/2}, and the row-parallel kernels that
// assemble and apply them.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "abc/parallel.hpp"

namespace abc {

struct GeneratorEntry {
    std::uint32_t col;
    double rate;
    std::int32_t delta;  // energy change in units of SparseGenerator::energy_unit
};

/// Off-diagonal rates stored by row, sorted by column, deduplicated. The
/// diagonal is implicit as the negative row sum. Every rate has the form
/// prefactor·exp(−(β/2)·energy_unit·delta), and the chain is reversible with
/// respect to exp(−β·energy_unit·level).
struct SparseGenerator {
    std::uint64_t dim = 0;
    double beta = 0.0;
    double prefactor = 1.0;
    double energy_unit = 1.0;
    std::vector<std::uint64_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> rate;
    std::vector<std::int32_t> delta;
    std::vector<double> diag;
    std::vector<std::int64_t> level;  // per-state energy in units (empty if not integral)
    std::vector<double> log_measure;  // normalized log-probabilities of the reversible measure

    std::uint64_t nonzeros() const { return col.size(); }
    double rate_of(std::uint64_t i, std::uint64_t j) const;  // 0 when absent
};

using RowBuilder = std::function<void(std::uint64_t row, std::span<const std::uint8_t> state,
                                      std::vector<GeneratorEntry>& out)>;

/// Visits states of a row range in order: visit(begin, end, callback) must
/// call callback(row, state) for every row in [begin, end).
using RangeVisitor = std::function<void(std::uint64_t, std::uint64_t,
                                        const std::function<void(std::uint64_t, std::span<const std::uint8_t>)>&)>;

/// Assembles the rows [0, dim) in fixed chunks, sorting and merging entries.
void assemble_rows(SparseGenerator& g, const RangeVisitor& visit, const RowBuilder& build, Exec exec);

/// Symmetrized generator S = W^{1/2} L W^{-1/2} in CSR form.
struct SymmetricOperator {
    std::uint64_t dim = 0;
    std::vector<std::uint64_t> row_ptr;
    std::vector<std::uint32_t> col;
    std::vector<double> value;
    std::vector<double> diag;
    std::vector<double> ground_state;  // normalized W^{1/2}·1
};

SymmetricOperator symmetrize(const SparseGenerator& g);

/// y = S x.
void spmv(const SymmetricOperator& s, std::span<const double> x, std::span<double> y, Exec exec = Exec::parallel);

/// y = L f for the generator itself (acting on functions).
void apply_generator(const SparseGenerator& g, std::span<const double> f, std::span<double> y,
                     Exec exec = Exec::parallel);

double dot(std::span<const double> a, std::span<const double> b, Exec exec = Exec::parallel);

/// Coordinate text export: one "row col rate" triple per line, sorted, the
/// diagonal included.
void write_coordinate(const SparseGenerator& g, std::ostream& out);

}  // namespace abc
