#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kcm/lattice.hpp"
#include "oracles.hpp"

using namespace kcm;

namespace
{
oracle::Bits bits_of(const Configuration& c)
{
    oracle::Bits b(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) b[i] = c[static_cast<long>(i)];
    return b;
}

Configuration random_config(std::mt19937_64& rng, std::size_t n, double p)
{
    std::bernoulli_distribution coin(p);
    Configuration c(n);
    for (std::size_t i = 0; i < n; ++i) c.set(static_cast<long>(i), coin(rng));
    return c;
}
}  // namespace

TEST_CASE("configuration basics")
{
    const auto c = Configuration::from_string("100100");
    CHECK(c.size() == 6);
    CHECK(c[0] == 1);
    CHECK(c[-3] == 1);
    CHECK(c[7] == 0);
    CHECK(c.particle_count() == 2);
    CHECK(c.to_string() == "100100");
    CHECK(Configuration::from_code(c.code(), 6) == c);
    CHECK_THROWS_AS(Configuration::from_string("10a1"), std::invalid_argument);

    auto d = Configuration::from_string("100000");
    d.swap_bond(5);
    CHECK(d.to_string() == "000001");
}

TEST_CASE("parameter validation")
{
    KCMParams p{8, 2, 0.5, 1};
    CHECK_NOTHROW(p.validate());
    p.m = 1;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {8, 2, 0.0, 1};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p = {5, 2, 0.5, 1};
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("jump rate examples")
{
    // x = 2: m=2 uses eta(1) and eta(4).
    CHECK(jump_rate(Configuration::from_string("0110100"), 2, 2) == 2);
    CHECK(jump_rate(Configuration::from_string("0010000"), 2, 2) == 0);
    // m=3, ones on {x-2..x+3} except x+1.
    auto c = Configuration::from_string("0000000000");
    for (long z : {1, 2, 3, 5, 6}) c.set(z, 1);
    CHECK(jump_rate(c, 3, 3) == 3);
}

TEST_CASE("jump rate agrees with the definition")
{
    std::mt19937_64 rng(3);
    for (int m = 2; m <= 4; ++m)
        for (int trial = 0; trial < 300; ++trial)
        {
            const auto c = random_config(rng, 14, 0.6);
            const auto b = bits_of(c);
            for (long x = 0; x < 14; ++x)
            {
                REQUIRE(jump_rate(c, x, m) == oracle::rate(b, x, m));
                REQUIRE(jump_rate(c, x, m) == oracle::rate_reversed(b, x, m));
                const int expected = c[x] != c[x + 1] ? oracle::rate(b, x, m) : 0;
                REQUIRE(bond_exchange_rate(c, x, m) == expected);
            }
        }
}

TEST_CASE("blocked configurations")
{
    CHECK(is_blocked(Configuration::from_string("100100"), 2));
    CHECK_FALSE(is_blocked(Configuration::from_string("110000"), 2));
    CHECK(is_blocked(Configuration::from_string("111111"), 2));
    CHECK(is_blocked(Configuration::from_string("11111111"), 3));
}

TEST_CASE("local h and g")
{
    const auto ones = Configuration::from_string("11111111");
    const auto zeros = Configuration::from_string("00000000");
    CHECK(local_h(ones, 3, 2) == 1.0);
    CHECK(local_h(zeros, 3, 2) == 0.0);
    CHECK(local_g(Configuration::from_string("00110100"), 3, 2) == doctest::Approx(1.0));
    CHECK(local_g(Configuration::from_string("00111100"), 3, 2) == 0.0);

    std::mt19937_64 rng(5);
    for (int m = 2; m <= 4; ++m)
        for (int trial = 0; trial < 200; ++trial)
        {
            const auto c = random_config(rng, 16, 0.5);
            const auto b = bits_of(c);
            for (long x = 0; x < 16; ++x)
            {
                REQUIRE(local_h(c, x, m) == oracle::h(b, x, m));
                REQUIRE(local_g(c, x, m) == oracle::g(b, x, m));
                REQUIRE(std::abs(local_h(c, x, m)) <= 2 * m);
                REQUIRE(h_function(m).at(c, x) == local_h(c, x, m));
                REQUIRE(g_function(m).at(c, x) == local_g(c, x, m));
            }
        }
}

TEST_CASE("local function supports")
{
    CHECK(occupation_function().width() == 1);
    CHECK(pair_function().width() == 2);
    CHECK(h_function(2).width() == 7);
    CHECK(g_function(3).width() == 9);
    const auto c = Configuration::from_string("0110");
    CHECK(pair_function().at(c, 1) == 1.0);
    CHECK(pair_function().at(c, 2) == 0.0);
}

TEST_CASE("block average and mobile clusters")
{
    const auto alt = Configuration::from_string("101010101010");
    CHECK(block_average(alt, 0, 1) == doctest::Approx(1.0 / 3.0));
    CHECK(block_average(alt, 1, 1) == doctest::Approx(2.0 / 3.0));
    CHECK(block_average(alt, 4, 0) == 1.0);
    CHECK(block_average(Configuration::from_string("1111111"), 3, 3) == 1.0);
    CHECK_THROWS_AS(block_average(alt, 0, 6), std::invalid_argument);

    CHECK(has_mobile_cluster(Configuration::from_string("00110000"), 3, 2));
    CHECK_FALSE(has_mobile_cluster(alt, 5, 3));
    for (long x = 0; x < 6; ++x) CHECK_FALSE(has_mobile_cluster(Configuration::from_string("100100"), x, 2));
}

TEST_CASE("generator matrix")
{
    const auto full = build_generator_matrix({6, 2, 0.5, 0});
    CHECK(full.row_sum(63) == 0);
    CHECK(full.transitions[63].empty());
    CHECK(full.transitions[Configuration::from_string("100100").code()].empty());

    const KCMParams p{6, 2, 0.5, 0};
    const auto q = build_generator_matrix(p);
    const auto dense = oracle::dense_generator(6, 2, 1.0);
    for (std::uint32_t s = 0; s < q.dimension(); ++s)
    {
        REQUIRE(q.row_sum(s) == 0);
        for (std::uint32_t t = 0; t < q.dimension(); ++t) REQUIRE(static_cast<double>(q.entry(s, t)) == dense[s][t]);
    }

    // nu_alpha Q = 0.
    for (double alpha : {0.3, 0.5})
    {
        std::vector<double> nu(q.dimension());
        for (std::uint32_t s = 0; s < q.dimension(); ++s)
        {
            const int k = __builtin_popcount(s);
            nu[s] = std::pow(alpha, k) * std::pow(1 - alpha, 6 - k);
        }
        for (std::uint32_t t = 0; t < q.dimension(); ++t)
        {
            double flow = 0.0;
            for (std::uint32_t s = 0; s < q.dimension(); ++s) flow += nu[s] * static_cast<double>(q.entry(s, t));
            REQUIRE(std::abs(flow) < 1e-14);
        }
    }
    CHECK_THROWS_AS(build_generator_matrix({13, 2, 0.5, 0}), std::invalid_argument);
}

TEST_CASE("simulate frozen and trivial runs")
{
    const KCMParams p{6, 2, 0.5, 9};
    const auto frozen = Configuration::from_string("100100");
    const std::vector<double> at{0.0, 5.0, 10.0};
    const auto rec = simulate(frozen, p, 10.0, at);
    CHECK(rec.frozen);
    CHECK(rec.jump_count == 0);
    for (const auto& s : rec.snapshots) CHECK(s == frozen);

    const auto start = Configuration::from_string("110100");
    const std::vector<double> zero{0.0};
    const auto still = simulate(start, p, 0.0, zero);
    CHECK(still.snapshots.front() == start);
    CHECK_THROWS_AS(simulate(start, p, 1.0, std::vector<double>{2.0}), std::invalid_argument);
}

TEST_CASE("simulate conserves particles and is reproducible")
{
    std::mt19937_64 rng(11);
    const KCMParams p{64, 2, 0.5, 77};
    const auto init = random_config(rng, 64, 0.5);
    std::vector<double> at;
    for (int k = 0; k <= 10; ++k) at.push_back(0.001 * k);
    const auto a = simulate(init, p, 0.01, at);
    const auto b = simulate(init, p, 0.01, at);
    CHECK(a.jump_count > 0);
    CHECK(a.snapshots == b.snapshots);
    CHECK(a.jump_count == b.jump_count);
    for (const auto& s : a.snapshots) CHECK(s.particle_count() == init.particle_count());

    KCMParams other = p;
    other.seed = 78;
    CHECK(simulate(init, other, 0.01, at).snapshots.back() != a.snapshots.back());
}

TEST_CASE("ensembles do not depend on the thread count")
{
    const KCMParams p{32, 2, 0.5, 5};
    const auto make = [](std::uint64_t r) {
        std::mt19937_64 rng(r + 100);
        return random_config(rng, 32, 0.6);
    };
    const std::vector<double> at{0.01};
    const auto one = simulate_ensemble(make, p, 0.01, at, 7, 1);
    const auto three = simulate_ensemble(make, p, 0.01, at, 7, 3);
    REQUIRE(one.size() == 7);
    for (std::size_t r = 0; r < 7; ++r)
    {
        CHECK(one[r].seed == replica_seed(5, r));
        CHECK(one[r].snapshots == three[r].snapshots);
    }
}
