#include "doctest.h"

#include <cmath>

#include "abc/lattice.hpp"
#include "abc/rng.hpp"
#include "abc/dynamics.hpp"

using namespace abc;

TEST_SUITE("lattice") {

TEST_CASE("exchange swaps and is an involution") {
    const auto z = Configuration::parse("ABC");
    CHECK(exchange(z, 0, 1).str() == "BAC");
    CHECK_THROWS_AS(exchange(z, 0, 0), std::invalid_argument);
    Rng rng = make_stream(1);
    for (int k = 0; k < 50; ++k) {
        const auto w = random_equal_density(12, rng);
        const auto x = uniform_index(rng, 12), y = (x + 1 + uniform_index(rng, 11)) % 12;
        CHECK(exchange(exchange(w, x, y), x, y) == w);
    }
}

TEST_CASE("occupation partitions unity") {
    const auto z = Configuration::parse("AABBCC");
    CHECK(occupation(z, Species::C) == std::vector<std::uint8_t>{0, 0, 0, 0, 1, 1});
    CHECK(occupation(Configuration::parse("ABC"), Species::B) == std::vector<std::uint8_t>{0, 1, 0});
    const auto a = occupation(z, Species::A), b = occupation(z, Species::B), c = occupation(z, Species::C);
    for (int x = 0; x < 6; ++x) CHECK(a[x] + b[x] + c[x] == 1);
}

TEST_CASE("hamiltonian small cases") {
    CHECK(hamiltonian(Configuration::parse("ABC")) == doctest::Approx(1.0 / 9).epsilon(1e-15));
    CHECK(hamiltonian(Configuration::parse("ACB")) == doctest::Approx(2.0 / 9).epsilon(1e-15));
    CHECK(hamiltonian(Configuration::parse("BCA")) == hamiltonian(Configuration::parse("ABC")));
}

TEST_CASE("exchange gradient") {
    CHECK(exchange_gradient(Configuration::parse("ACB"), 0, 1) == doctest::Approx(-1.0 / 9));
    CHECK(exchange_gradient(Configuration::parse("AABBCC"), 0, 1) == 0.0);
    Rng rng = make_stream(2);
    for (int k = 0; k < 200; ++k) {
        const int n = 3 * (1 + static_cast<int>(uniform_index(rng, 8)));
        const auto z = random_equal_density(n, rng);
        const auto x = uniform_index(rng, n), y = (x + 1 + uniform_index(rng, n - 1)) % n;
        CHECK(exchange_energy_delta(z, x, y) == energy_count(exchange(z, x, y)) - energy_count(z));
    }
}

TEST_CASE("translation") {
    const auto z = Configuration::parse("ABC");
    CHECK(translate(z, 1).str() == "CAB");
    Rng rng = make_stream(3);
    for (int k = 0; k < 50; ++k) {
        const auto w = random_equal_density(15, rng);
        CHECK(translate(w, 15) == w);
        CHECK(energy_count(translate(w, static_cast<long long>(uniform_index(rng, 30)))) == energy_count(w));
    }
}

}
