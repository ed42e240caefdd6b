#include "abc/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "abc/rng.hpp"

namespace abc {

std::string to_string(GapMethod m) { return m == GapMethod::dense ? "dense" : "iterative"; }

GapMethod parse_gap_method(const std::string& name) {
    if (name == "dense") return GapMethod::dense;
    if (name == "iterative") return GapMethod::iterative;
    throw std::invalid_argument("unknown gap method '" + name + "' (expected dense or iterative)");
}

namespace {

Eigen::MatrixXd dense_symmetric(const SymmetricOperator& s) {
    const auto n = static_cast<Eigen::Index>(s.dim);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        m(i, i) = s.diag[i];
        for (std::uint64_t k = s.row_ptr[i]; k < s.row_ptr[i + 1]; ++k) m(i, s.col[k]) = s.value[k];
    }
    // Exact symmetry up to rounding of the exponentials.
    return 0.5 * (m + m.transpose());
}

void check_dense_cap(std::uint64_t dim, std::uint64_t cap) {
    if (dim > cap) {
        std::ostringstream msg;
        msg << "dense eigensolve of dimension " << dim << " exceeds the cap of " << cap;
        throw std::invalid_argument(msg.str());
    }
}

GapResult dense_gap(const SymmetricOperator& s, const GapOptions& opts) {
    check_dense_cap(s.dim, opts.dense_cap);
    if (s.dim < 2) throw std::invalid_argument("spectral gap needs at least two states");
    const Eigen::MatrixXd m = dense_symmetric(s);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NonConvergence("dense eigensolver failed", 0.0, 0);
    const auto n = m.rows();
    GapResult r;
    r.method = GapMethod::dense;
    r.gap = -es.eigenvalues()(n - 2);
    const Eigen::VectorXd u = es.eigenvectors().col(n - 2);
    r.residual = (m * u + r.gap * u).norm();
    if (opts.want_eigenfunction) {
        r.eigenfunction.resize(s.dim);
        for (std::uint64_t i = 0; i < s.dim; ++i) r.eigenfunction[i] = u(static_cast<Eigen::Index>(i)) / s.ground_state[i];
    }
    return r;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale(double a, std::span<double> x) {
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) x[i] *= a;
}

// Thick-restart Lanczos with full reorthogonalization for the largest
// eigenvalue of S restricted to the orthogonal complement of the ground state.
GapResult lanczos_gap(const SymmetricOperator& s, const GapOptions& opts) {
    const std::uint64_t n = s.dim;
    if (n < 2) throw std::invalid_argument("spectral gap needs at least two states");
    const int m = static_cast<int>(std::min<std::uint64_t>(static_cast<std::uint64_t>(opts.basis_size), n - 1));
    const int keep = std::max(1, std::min(opts.keep, m - 2));
    const std::span<const double> g0 = s.ground_state;

    auto deflate = [&](std::span<double> w) {
        for (int pass = 0; pass < 2; ++pass) axpy(-dot(g0, w, opts.exec), g0, w);
    };

    std::vector<std::vector<double>> v(static_cast<std::size_t>(m + 1), std::vector<double>(n));
    Rng rng = make_stream(opts.seed, 17);
    for (auto& x : v[0]) x = uniform01(rng) - 0.5;
    deflate(v[0]);
    scale(1.0 / std::sqrt(dot(v[0], v[0], opts.exec)), v[0]);

    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m, m);
    std::vector<double> w(n);
    int start = 0;
    int matvecs = 0;
    double radius = 0.0;
    double last_residual = 0.0;

    if (m == 1) {
        spmv(s, v[0], w, opts.exec);
        GapResult r;
        r.gap = -dot(v[0], w, opts.exec);
        r.iterations = 1;
        return r;
    }

    for (;;) {
        int filled = m;
        double beta_last = 0.0;
        for (int j = start; j < m; ++j) {
            spmv(s, v[j], w, opts.exec);
            ++matvecs;
            const double image = std::sqrt(dot(w, w, opts.exec));
            for (int pass = 0; pass < 2; ++pass) {
                deflate(w);
                for (int i = 0; i <= j; ++i) {
                    const double c = dot(v[i], w, opts.exec);
                    axpy(-c, v[i], w);
                    h(i, j) += c;
                }
            }
            for (int i = 0; i < j; ++i) h(j, i) = h(i, j);
            beta_last = std::sqrt(dot(w, w, opts.exec));
            // Relative test: a tiny remainder is rounding noise, and normalizing
            // it would reintroduce the ground state.
            if (beta_last < 1e-10 * std::max({image, radius, 1e-300})) {
                filled = j + 1;  // invariant subspace found
                beta_last = 0.0;
                break;
            }
            std::copy(w.begin(), w.end(), v[j + 1].begin());
            scale(1.0 / beta_last, v[j + 1]);
        }

        const Eigen::MatrixXd hs = h.topLeftCorner(filled, filled);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (hs + hs.transpose()));
        const Eigen::VectorXd& theta = es.eigenvalues();  // ascending
        const Eigen::MatrixXd& y = es.eigenvectors();
        radius = std::max({radius, std::abs(theta(0)), std::abs(theta(filled - 1))});
        const double top = theta(filled - 1);
        last_residual = std::abs(beta_last * y(filled - 1, filled - 1));

        if (last_residual <= opts.tolerance * std::max(1.0, radius) || filled < m) {
            GapResult r;
            r.method = GapMethod::iterative;
            r.gap = -top;
            r.iterations = matvecs;
            r.residual = last_residual;
            if (opts.want_eigenfunction) {
                std::vector<double> u(n, 0.0);
                for (int l = 0; l < filled; ++l) axpy(y(l, filled - 1), v[l], u);
                r.eigenfunction.resize(n);
                for (std::uint64_t i = 0; i < n; ++i) r.eigenfunction[i] = u[i] / s.ground_state[i];
            }
            return r;
        }
        if (matvecs >= opts.max_matvecs) {
            std::ostringstream msg;
            msg << "Lanczos did not converge: residual " << last_residual << " after " << matvecs << " matvecs";
            throw NonConvergence(msg.str(), last_residual, matvecs);
        }

        // Restart with the top `keep` Ritz vectors plus the residual direction.
        std::vector<std::vector<double>> ritz(static_cast<std::size_t>(keep), std::vector<double>(n, 0.0));
        for (int q = 0; q < keep; ++q) {
            const int col = filled - 1 - q;
            for (int l = 0; l < filled; ++l) axpy(y(l, col), v[l], ritz[q]);
        }
        std::vector<double> residual_dir = std::move(v[static_cast<std::size_t>(filled)]);
        for (int q = 0; q < keep; ++q) v[q] = std::move(ritz[q]);
        v[keep] = std::move(residual_dir);
        for (int q = keep + 1; q <= m; ++q)
            if (v[q].size() != n) v[q].assign(n, 0.0);
        h.setZero();
        for (int q = 0; q < keep; ++q) h(q, q) = theta(filled - 1 - q);
        start = keep;
    }
}

}  // namespace

GapResult spectral_gap(const SparseGenerator& g, const GapOptions& opts) {
    const auto t0 = std::chrono::steady_clock::now();
    const SymmetricOperator s = symmetrize(g);
    GapResult r = opts.method == GapMethod::dense ? dense_gap(s, opts) : lanczos_gap(s, opts);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

std::vector<double> dense_spectrum(const SparseGenerator& g, std::uint64_t cap) {
    check_dense_cap(g.dim, cap);
    const SymmetricOperator s = symmetrize(g);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_symmetric(s), Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = es.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

}  // namespace abc
