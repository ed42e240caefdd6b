#include "doctest.h"

#include <cmath>

#include "abc/rng.hpp"
#include "abc/state_space.hpp"

using namespace abc;

TEST_SUITE("state-space") {

TEST_CASE("state counts") {
    CHECK(enumerate(3).total() == 6);
    CHECK(enumerate(6).total() == 90);
    CHECK(enumerate(12).total() == 34650);
    std::uint64_t seen = 0;
    const auto idx = enumerate(6);
    for (std::uint64_t i = 0; i < idx.total(); ++i) {
        const auto z = idx.unrank(i);
        CHECK(z.is_equal_density());
        CHECK(idx.rank(z) == i);
        ++seen;
    }
    CHECK(seen == 90);
}

TEST_CASE("budget refusal names the requirement") {
    CHECK_THROWS_AS(enumerate(30, MemoryBudget{1024}), BudgetExceeded);
}

TEST_CASE("gibbs weights") {
    const auto idx = enumerate(3);
    const auto flat = build_ensemble(idx, 0.0);
    for (std::uint64_t i = 0; i < 6; ++i) CHECK(flat.probability(i) == doctest::Approx(1.0 / 6));
    const double beta = 4.0;
    const auto ens = build_ensemble(idx, beta);
    const auto abc = idx.rank(Configuration::parse("ABC")), acb = idx.rank(Configuration::parse("ACB"));
    CHECK(ens.probability(abc) / ens.probability(acb) == doctest::Approx(std::exp(beta / 3)));
    for (int n : {3, 6, 9}) {
        const auto e = build_ensemble(enumerate(n), 7.0);
        double s = 0;
        for (double p : e.probabilities()) s += p;
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("expectations") {
    const auto ens = build_ensemble(enumerate(3), 0.0);
    CHECK(expectation(ens, [](SiteCodes) { return 2.5; }) == doctest::Approx(2.5));
    CHECK(variance(ens, [](SiteCodes) { return 2.5; }) == doctest::Approx(0.0));
    CHECK(expectation(ens, [](SiteCodes c) { return c[0] == 0 ? 1.0 : 0.0; }) == doctest::Approx(1.0 / 3));
    const auto e9 = build_ensemble(enumerate(9), 5.0);
    auto f = [](SiteCodes c) { return c[0] == 1 && c[1] == 2 ? 1.0 : 0.0; };
    auto g = [](SiteCodes c) { return c[4] == 1 && c[5] == 2 ? 1.0 : 0.0; };
    CHECK(expectation(e9, f) == doctest::Approx(expectation(e9, g)).epsilon(1e-12));
}

TEST_CASE("streamed moments agree with the table") {
    auto h = [](SiteCodes c) { return static_cast<double>(kernel::energy_count(c)); };
    const auto ens = build_ensemble(enumerate(9), 3.0);
    const auto s = stream_moments(9, 3.0, h);
    CHECK(s.total == ens.size());
    CHECK(s.mean == doctest::Approx(expectation(ens, h)).epsilon(1e-12));
    CHECK(s.log_z == doctest::Approx(ens.log_z()).epsilon(1e-12));
}

TEST_CASE("exact sampler") {
    const auto ens = build_ensemble(enumerate(3), 0.0);
    ExactSampler draw(ens);
    Rng rng = make_stream(5);
    const int draws = 600000;
    std::vector<int> count(6, 0);
    for (int k = 0; k < draws; ++k) ++count[draw.sample_index(rng)];
    const double se = std::sqrt(draws * (1.0 / 6) * (5.0 / 6));
    for (int c : count) CHECK(std::abs(c - draws / 6.0) < 5 * se);

    const std::vector<double> single{0.0, 3.0, 0.0};
    DiscreteSampler one(single);
    for (int k = 0; k < 100; ++k) CHECK(one(rng) == 1);

    const auto e6 = build_ensemble(enumerate(6), 5.0);
    ExactSampler d6(e6);
    auto h = [](SiteCodes c) { return static_cast<double>(kernel::energy_count(c)) / 36.0; };
    double s = 0, s2 = 0;
    const int m = 1000000;
    for (int k = 0; k < m; ++k) {
        const double v = h(d6(rng).codes());
        s += v;
        s2 += v * v;
    }
    const double mean = s / m, se6 = std::sqrt((s2 / m - mean * mean) / m);
    CHECK(std::abs(mean - expectation(e6, h)) < 4 * se6);
}

}
