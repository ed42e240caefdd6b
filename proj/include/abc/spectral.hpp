#pragma once

// Spectral gap of a reversible generator via its symmetrization
// S = W^{1/2} L W^{-1/2}. The ground state W^{1/2}·1 is known exactly and is
// deflated; the gap is minus the top of the remaining spectrum.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "abc/parallel.hpp"
#include "abc/sparse.hpp"

namespace abc {

enum class GapMethod { dense, iterative };

std::string to_string(GapMethod m);
GapMethod parse_gap_method(const std::string& name);

struct GapOptions {
    GapMethod method = GapMethod::iterative;
    std::uint64_t dense_cap = 5000;
    double tolerance = 1e-10;   // residual ‖Su − θu‖ relative to the spectral radius estimate
    int max_matvecs = 100000;
    int basis_size = 40;
    int keep = 12;
    std::uint64_t seed = 0x5eed;
    bool want_eigenfunction = false;
    Exec exec = Exec::parallel;
};

struct GapResult {
    double gap = 0.0;
    double residual = 0.0;
    int iterations = 0;
    GapMethod method = GapMethod::iterative;
    double wall_time_s = 0.0;
    /// Eigenfunction of L for −gap (W^{-1/2} u), when requested.
    std::vector<double> eigenfunction;
};

class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

GapResult spectral_gap(const SparseGenerator& g, const GapOptions& opts = {});

/// All eigenvalues of L (ascending) by dense symmetric eigensolve.
std::vector<double> dense_spectrum(const SparseGenerator& g, std::uint64_t cap = 5000);

}  // namespace abc
