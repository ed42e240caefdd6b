#include "doctest.h"

#include <cmath>

#include "abc/dynamics.hpp"
#include "abc/generators.hpp"
#include "abc/spectral.hpp"

using namespace abc;

TEST_SUITE("generators") {

TEST_CASE("ring rates") {
    // Swapping an (A,C) pair lowers the energy, so it runs at the raised rate.
    CHECK(ring_rate(Configuration::parse("ACB"), 0, 6.0) == doctest::Approx(std::exp(1.0)));
    CHECK(ring_rate(Configuration::parse("CAB"), 0, 6.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(ring_rate(Configuration::parse("AABBCC"), 0, 6.0) == doctest::Approx(std::exp(0.5)));
    Rng rng = make_stream(4);
    const auto z = random_equal_density(9, rng);
    for (std::size_t x = 0; x < 9; ++x) CHECK(ring_rate(z, x, 0.0) == 1.0);
}

TEST_CASE("complete rates") {
    Rng rng = make_stream(5);
    for (int k = 0; k < 100; ++k) {
        const auto z = random_equal_density(12, rng);
        const auto x = uniform_index(rng, 12);
        const auto y = (x + 1) % 12;
        const double beta = 15.0 * uniform01(rng);
        CHECK(complete_rate(z, x, (x + 5) % 12, 0.0) == doctest::Approx(1.0 / 12));
        if (z[x] == z[y])
            CHECK(complete_rate(z, x, y, beta) == doctest::Approx(1.0 / 12));
        else
            CHECK(12 * complete_rate(z, x, y, beta) == doctest::Approx(ring_rate(z, x, beta)).epsilon(1e-14));
    }
}

TEST_CASE("N=3 ring graph is 3-regular bipartite") {
    const auto ens = build_ensemble(enumerate(3), 0.0);
    const auto g = build_ring_generator(ens);
    for (std::uint64_t i = 0; i < 6; ++i) {
        CHECK(g.row_ptr[i + 1] - g.row_ptr[i] == 3);
        const int parity = ens.indexing().unrank(i).str() == "ABC" || ens.indexing().unrank(i).str() == "BCA" ||
                           ens.indexing().unrank(i).str() == "CAB";
        for (auto k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
            const auto s = ens.indexing().unrank(g.col[k]).str();
            const int other = s == "ABC" || s == "BCA" || s == "CAB";
            CHECK(parity != other);
        }
    }
}

TEST_CASE("complete generator restricted to neighbours is the ring generator over N") {
    const auto ens = build_ensemble(enumerate(6), 5.0);
    const auto ring = build_ring_generator(ens);
    const auto comp = build_complete_generator(ens);
    for (std::uint64_t i = 0; i < ring.dim; ++i)
        for (auto k = ring.row_ptr[i]; k < ring.row_ptr[i + 1]; ++k)
            CHECK(6 * comp.rate_of(i, ring.col[k]) == doctest::Approx(ring.rate[k]).epsilon(1e-14));
}

TEST_CASE("serial and parallel assembly agree") {
    const auto ens = build_ensemble(enumerate(9), 2.0);
    for (Graph graph : {Graph::ring, Graph::complete}) {
        const auto a = build_generator(ens, graph, Exec::serial);
        const auto b = build_generator(ens, graph, Exec::parallel);
        CHECK(a.col == b.col);
        CHECK(a.rate == b.rate);
        CHECK(a.diag == b.diag);
    }
}

TEST_CASE("dirichlet forms") {
    const auto ens = build_ensemble(enumerate(6), 2.0);
    const auto g = build_ring_generator(ens);
    std::vector<double> f(g.dim, 4.0);
    CHECK(dirichlet_quadratic(g, f) == doctest::Approx(0.0));
    Rng rng = make_stream(6);
    for (double& v : f) v = uniform01(rng);
    CHECK(std::abs(dirichlet_quadratic(g, f) - dirichlet_half_sum(g, f)) < 1e-10);

    const auto e3 = build_ensemble(enumerate(3), 1.5);
    const auto g3 = build_ring_generator(e3);
    std::vector<double> ind(6, 0.0);
    ind[2] = 1.0;
    double by_hand = 0.0;
    for (auto k = g3.row_ptr[2]; k < g3.row_ptr[3]; ++k) by_hand += e3.probability(2) * g3.rate[k];
    // Each bond of the state appears twice in the half-sum; the ½ cancels one.
    CHECK(dirichlet_half_sum(g3, ind) == doctest::Approx(by_hand));
}

TEST_CASE("rayleigh quotient bounds the gap") {
    const auto ens = build_ensemble(enumerate(6), 5.0);
    const auto g = build_ring_generator(ens);
    GapOptions o;
    o.method = GapMethod::dense;
    o.want_eigenfunction = true;
    const auto r = spectral_gap(g, o);
    CHECK(rayleigh_quotient(g, r.eigenfunction) == doctest::Approx(r.gap).epsilon(1e-10));
    Rng rng = make_stream(7);
    std::vector<double> f(g.dim);
    for (int k = 0; k < 100; ++k) {
        for (double& v : f) v = uniform01(rng);
        CHECK(rayleigh_quotient(g, f) >= r.gap - 1e-10);
    }
    std::fill(f.begin(), f.end(), 1.0);
    CHECK_THROWS_AS(rayleigh_quotient(g, f), std::invalid_argument);
}

TEST_CASE("comparison inequality") {
    for (int n : {6, 9})
        for (double beta : {0.0, 2.0, 12.0}) {
            const auto ens = build_ensemble(enumerate(n), beta);
            const auto ring = build_ring_generator(ens);
            const auto comp = build_complete_generator(ens);
            std::vector<double> f(ens.size(), 1.0);
            const auto c = comparison_check(ring, comp, n, beta, f);
            CHECK(c.lhs == doctest::Approx(0.0));
            CHECK(c.holds);
        }
}

}

TEST_SUITE("spectral") {

TEST_CASE("small exact gaps") {
    GapOptions o;
    o.method = GapMethod::dense;
    const auto e3 = build_ensemble(enumerate(3), 0.0);
    CHECK(spectral_gap(build_ring_generator(e3), o).gap == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(spectral_gap(build_complete_generator(e3), o).gap == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero eigenvalue is simple") {
    for (int n : {3, 6})
        for (double beta : {0.0, 5.0, 15.0})
            for (Graph graph : {Graph::ring, Graph::complete}) {
                const auto ev = dense_spectrum(build_generator(build_ensemble(enumerate(n), beta), graph));
                CHECK(std::abs(ev.back()) < 1e-10);
                CHECK(ev[ev.size() - 2] < -1e-6);
            }
}

TEST_CASE("lanczos agrees with dense") {
    for (double beta : {0.0, 5.0, 15.0})
        for (Graph graph : {Graph::ring, Graph::complete}) {
            const auto g = build_generator(build_ensemble(enumerate(9), beta), graph);
            GapOptions d, it;
            d.method = GapMethod::dense;
            it.method = GapMethod::iterative;
            const double a = spectral_gap(g, d).gap;
            const auto b = spectral_gap(g, it);
            CHECK(b.gap == doctest::Approx(a).epsilon(1e-8));
        }
}

TEST_CASE("ring gap at beta=0 is the single-particle value") {
    for (int n : {6, 9, 12}) {
        GapOptions o;
        o.method = GapMethod::iterative;
        const double g = spectral_gap(build_ring_generator(build_ensemble(enumerate(n), 0.0)), o).gap;
        CHECK(g == doctest::Approx(2.0 * (1.0 - std::cos(2.0 * M_PI / n))).epsilon(1e-8));
    }
}

TEST_CASE("dense cap") {
    GapOptions o;
    o.method = GapMethod::dense;
    o.dense_cap = 10;
    CHECK_THROWS_AS(spectral_gap(build_ring_generator(build_ensemble(enumerate(6), 0.0)), o), std::invalid_argument);
}

}
