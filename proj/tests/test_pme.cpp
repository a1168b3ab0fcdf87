#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "kcm/pme.hpp"
#include "oracles.hpp"

using namespace kcm;

namespace
{
double l1_distance(const GridProfile& a, const GridProfile& b)
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.cells(); ++j) s += std::abs(a.values[j] - b.values[j]);
    return s * a.spacing();
}

double sup_distance(const GridProfile& a, const GridProfile& b)
{
    double s = 0.0;
    for (std::size_t j = 0; j < a.cells(); ++j) s = std::max(s, std::abs(a.values[j] - b.values[j]));
    return s;
}
}  // namespace

TEST_CASE("grid profiles and pressure")
{
    const auto g = GridProfile::sample(4, [](double u) { return u; });
    CHECK(g.values == std::vector<double>{0.125, 0.375, 0.625, 0.875});
    CHECK(g[-1] == 0.875);
    CHECK(g.integral() == doctest::Approx(0.5));
    CHECK(g.interpolate(0.25) == doctest::Approx(0.25));
    CHECK(g.interpolate(1.0) == doctest::Approx(0.5));

    const GridProfile half(std::vector<double>{0.5, 0.0});
    CHECK(pressure_from_density(half, 2).values[0] == doctest::Approx(1.0));
    CHECK(pressure_from_density(half, 3).values[0] == doctest::Approx(0.375));
    CHECK(pressure_from_density(half, 2).values[1] == 0.0);

    const auto r = GridProfile::sample(64, [](double u) { return 0.2 + 0.6 * u; });
    for (int m : {2, 3, 4})
    {
        const auto back = density_from_pressure(pressure_from_density(r, m), m);
        CHECK(sup_distance(back, r) < 1e-14);
    }
    CHECK(pressure_lipschitz(GridProfile::sample(32, [](double) { return 0.4; }), 2) == 0.0);
}

TEST_CASE("mollifier")
{
    for (double eps : {0.1, 0.05, 0.01})
    {
        const auto h = build_mollifier(eps, 1024);
        double total = 0.0;
        for (double w : h.weights) total += w;
        CHECK(std::abs(total / 1024.0 - 1.0) < 1e-14);
        for (long k = 0; k <= h.radius; ++k) CHECK(h.at(k) == h.at(-k));
        for (long k = 0; k < h.radius; ++k) CHECK(h.at(k) >= h.at(k + 1));
        CHECK(h.at(h.radius + 1) == 0.0);
        CHECK(static_cast<double>(h.radius) / 1024.0 < eps);
        CHECK(std::abs(h.sup() * eps / h.c_h - 1.0) < 0.01);
    }
    const auto h = build_mollifier(0.1, 1024);
    CHECK(h.c_h == doctest::Approx(std::exp(-1.0) / oracle::bump_mass(1000000)).epsilon(1e-9));
    CHECK_THROWS_AS(build_mollifier(2.0 / 1024.0, 1024), std::invalid_argument);
    CHECK_THROWS_AS(build_mollifier(0.5, 1024), std::invalid_argument);
}

TEST_CASE("regularised initial data")
{
    const auto zero = regularize_initial(GridProfile::sample(256, [](double) { return 0.0; }), 0.1, 2);
    for (double v : zero.values) CHECK(v == doctest::Approx(0.1).epsilon(1e-14));
    const auto half = regularize_initial(GridProfile::sample(1024, [](double) { return 0.5; }), 0.01, 2);
    for (double v : half.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-14));

    const BarenblattSpec b{2, 1.0 / 80.0, 1.0, 0.5};
    for (int m : {2, 3})
        for (double eps : {0.1, 0.01})
        {
            const BarenblattSpec bm{m, 1.0 / 80.0, 1.0, 0.5};
            const auto ini = bm.profile(4096);
            const auto reg = regularize_initial(ini, eps, m);
            CHECK(reg.min() >= eps);
            CHECK(reg.max() <= 1.0 - eps);
            const double lip = pressure_lipschitz(ini, m);
            CHECK(pressure_lipschitz(reg, m) <= lip * (1.0 + 1e-12));
            CHECK(sup_distance(reg, ini) <= regularization_sup_bound(m, lip, eps));
        }
    // m = 2: C_ini = (m + C_Lip)/2.
    CHECK(regularization_sup_bound(2, 0.4, 0.01) == doctest::Approx(1.2 * 0.01));
    CHECK(regularization_sup_bound(3, 1.0, 0.04) == doctest::Approx(std::sqrt(2.0 / 3.0 * 4.0) * 0.2));
    CHECK_THROWS_AS(regularize_initial(GridProfile(std::vector<double>(64, 1.5)), 0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS(regularize_initial(b.profile(64), 0.01, 2), std::invalid_argument);
}

TEST_CASE("solver preserves constants and mass")
{
    SolverConfig cfg{2, 0.5, 0.1, uniform_times(0.1, 4)};
    const auto flat = solve_pme(GridProfile::sample(128, [](double) { return 0.3; }), cfg);
    REQUIRE(flat.snapshots.size() == 5);
    for (const auto& s : flat.snapshots)
        for (double v : s.values) CHECK(v == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(flat.times.back() == 0.1);

    const auto bump = GridProfile::sample(256, [](double u) { return 0.5 + 0.4 * std::sin(2 * M_PI * u); });
    for (int m : {2, 3})
    {
        cfg.m = m;
        const auto f = solve_pme(bump, cfg);
        for (const auto& s : f.snapshots)
        {
            CHECK(std::abs(s.integral() - bump.integral()) <= 1e-12 * (1.0 + cfg.horizon));
            CHECK(s.min() >= bump.min() - 1e-15);
            CHECK(s.max() <= bump.max() + 1e-15);
        }
        CHECK(f.snapshots.back().max() < f.snapshots.front().max());
    }
}

TEST_CASE("solver comparison principle")
{
    const BarenblattSpec b{2, 1.0 / 80.0, 1.0, 0.5};
    const auto lo = b.profile(512);
    auto hi = lo;
    for (std::size_t j = 0; j < hi.cells(); ++j) hi.values[j] = std::min(1.0, lo.values[j] + 0.02 * (1 + std::sin(9.0 * j)));
    const SolverConfig cfg{2, 0.5, 0.2, uniform_times(0.2, 4)};
    const auto a = solve_pme(lo, cfg);
    const auto c = solve_pme(hi, cfg);
    for (std::size_t k = 0; k < a.snapshots.size(); ++k)
        for (std::size_t j = 0; j < lo.cells(); ++j) REQUIRE(a.snapshots[k].values[j] <= c.snapshots[k].values[j] + 1e-12);
}

TEST_CASE("solver against barenblatt")
{
    const BarenblattSpec b{2, 1.0 / 80.0, 1.0, 0.5};
    const SolverConfig cfg{2, 0.5, 0.5, {0.5}};
    const auto coarse = solve_pme(b.profile(256), cfg).snapshots.back();
    const auto fine = solve_pme(b.profile(512), cfg).snapshots.back();
    const double e1 = l1_distance(coarse, b.profile(256, 0.5));
    const double e2 = l1_distance(fine, b.profile(512, 0.5));
    CHECK(e2 <= 2e-3);
    CHECK(e1 / e2 >= 1.8);
}

TEST_CASE("solver configuration errors")
{
    const auto g = GridProfile::sample(32, [](double) { return 0.2; });
    CHECK_THROWS_AS(solve_pme(g, SolverConfig{1, 0.5, 0.1, {}}), std::invalid_argument);
    CHECK_THROWS_AS(solve_pme(g, SolverConfig{2, 1.5, 0.1, {}}), std::invalid_argument);
    CHECK_THROWS_AS(solve_pme(g, SolverConfig{2, 0.5, 0.1, {0.2}}), std::invalid_argument);
    CHECK_THROWS_AS(solve_pme(g, SolverConfig{2, 0.5, 0.1, {0.05, 0.01}}), std::invalid_argument);
    CHECK(uniform_times(1.0, 4) == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
}

TEST_CASE("barenblatt profile")
{
    CHECK(barenblatt(1.0, 0.0, 2, 1.0 / 12.0) == doctest::Approx(1.0 / 12.0));
    CHECK(barenblatt(1.0, 1.0, 2, 1.0 / 12.0) == 0.0);
    CHECK(barenblatt(1.0, -1.0, 2, 1.0 / 12.0) == 0.0);
    for (double u : {0.0, 0.1, 0.25, 0.37})
        for (int m : {2, 3}) CHECK(barenblatt(1.3, u, m, 1.0 / 80.0) == doctest::Approx(oracle::barenblatt(1.3, u, m, 1.0 / 80.0)));
    CHECK(barenblatt_radius(1.0, 2, 1.0 / 12.0) == doctest::Approx(1.0));

    const BarenblattSpec b{2, 1.0 / 80.0, 1.0, 0.5};
    CHECK(b.at(1.0, 0.5) == doctest::Approx(1.0 / 80.0));
    CHECK(b.at(1.0, 0.0) == 0.0);
    CHECK(b.profile(4096).integral() == doctest::Approx(b.profile(4096, 0.5).integral()).epsilon(1e-6));
    CHECK_THROWS_AS(BarenblattSpec({2, 1.0 / 12.0, 1.0, 0.5}).profile(64), std::invalid_argument);
    CHECK(periodic_offset(0.9, 0.1) == doctest::Approx(-0.2));
    CHECK(periodic_offset(0.1, 0.9) == doctest::Approx(0.2));
}

TEST_CASE("interface components")
{
    const auto flat = interface_components(GridProfile::sample(64, [](double) { return 0.5; }), 0.1);
    CHECK(flat.count == 1);
    CHECK(flat.components[0].length == 64);
    CHECK(flat.gamma_measure == 0.0);

    const auto two = GridProfile::sample(1024, [](double u) {
        return oracle::barenblatt(1.0, u - 0.25, 2, 1.0 / 800.0) + oracle::barenblatt(1.0, u - 0.75, 2, 1.0 / 800.0);
    });
    CHECK(interface_components(two, 1e-4).count == 2);

    // A bump centred on the seam is one component.
    const auto seam = GridProfile::sample(256, [](double u) { return std::abs(periodic_offset(u, 0.0)) < 0.1 ? 0.3 : 0.0; });
    const auto s = interface_components(seam, 0.1);
    CHECK(s.count == 1);
    CHECK(s.components[0].length == 52);

    const BarenblattSpec b{2, 1.0 / 80.0, 1.0, 0.5};
    const auto bar = b.profile(4096);
    double prev = 1.0;
    for (double delta : {0.01, 0.003, 0.001, 1e-4})
    {
        const double g = interface_components(bar, delta).gamma_measure;
        CHECK(g < prev);
        prev = g;
    }
    CHECK(prev < 0.02);
}
