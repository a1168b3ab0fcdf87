#include "kcm/product_measures.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <random>
#include <stdexcept>

namespace kcm
{

LatticeProfile::LatticeProfile(std::vector<double> v) : values(std::move(v))
{
    for (double x : values)
        if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("lattice profile: entries must lie in [0,1]");
}

LatticeProfile LatticeProfile::from_function(std::size_t n, const std::function<double(double)>& rho)
{
    std::vector<double> v(n);
    for (std::size_t x = 0; x < n; ++x) v[x] = rho(static_cast<double>(x) / static_cast<double>(n));
    return LatticeProfile(std::move(v));
}

LatticeProfile LatticeProfile::from_grid(const GridProfile& grid, std::size_t n)
{
    return from_function(n, [&grid](double u) { return grid.interpolate(u); });
}

LatticeProfile LatticeProfile::constant(std::size_t n, double value)
{
    return LatticeProfile(std::vector<double>(n, value));
}

double Entropy::value() const
{
    if (infinite_) throw std::logic_error("entropy is infinite");
    return value_;
}

std::string Entropy::to_string() const
{
    if (infinite_) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value_);
    return buf;
}

Entropy& Entropy::operator+=(const Entropy& other) noexcept
{
    if (other.infinite_) infinite_ = true;
    if (!infinite_) value_ += other.value_;
    return *this;
}

Configuration sample_product(const LatticeProfile& profile, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::uint8_t> occ(profile.size());
    for (std::size_t x = 0; x < occ.size(); ++x) occ[x] = static_cast<std::uint8_t>(u(rng) < profile.values[x]);
    return Configuration(std::move(occ));
}

namespace
{
    /// phi evaluated on every window code; bit i of the code is eta(lo + i).
    std::vector<double> window_table(const LocalFunction& phi)
    {
        const int w = phi.width();
        if (w < 1 || w > kMaxEnumerationWidth)
            throw std::invalid_argument("bernoulli_average: window width must lie in [1, 24]");
        const std::uint32_t count = 1U << w;
        std::vector<double> table(count);
        for (std::uint32_t code = 0; code < count; ++code)
        {
            const auto eta = [code, lo = phi.lo](int offset) { return static_cast<int>((code >> (offset - lo)) & 1U); };
            table[code] = phi.eval(eta);
        }
        return table;
    }
}  // namespace

double bernoulli_average(const LocalFunction& phi, double alpha)
{
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("bernoulli_average: alpha must lie in [0,1]");
    const auto table = window_table(phi);
    double total = 0.0;
    for (std::uint32_t code = 0; code < table.size(); ++code)
    {
        if (table[code] == 0.0) continue;
        const int ones = std::popcount(code);
        total += table[code] * std::pow(alpha, ones) * std::pow(1.0 - alpha, phi.width() - ones);
    }
    return total;
}

std::vector<double> bernoulli_average_polynomial(const LocalFunction& phi)
{
    // Sum of phi over windows with k particles, then expand alpha^k (1-alpha)^{w-k}.
    const auto table = window_table(phi);
    const int w = phi.width();
    std::vector<double> by_count(static_cast<std::size_t>(w + 1), 0.0);
    for (std::uint32_t code = 0; code < table.size(); ++code) by_count[std::popcount(code)] += table[code];

    std::vector<double> coeff(static_cast<std::size_t>(w + 1), 0.0);
    for (int k = 0; k <= w; ++k)
    {
        if (by_count[k] == 0.0) continue;
        // alpha^k (1-alpha)^{w-k} = sum_j C(w-k, j) (-1)^j alpha^{k+j}
        double binom = 1.0;
        for (int j = 0; j <= w - k; ++j)
        {
            coeff[k + j] += by_count[k] * binom * ((j % 2) ? -1.0 : 1.0);
            binom = binom * (w - k - j) / (j + 1);
        }
    }
    return coeff;
}

Entropy bernoulli_relative_entropy(double p, double q)
{
    if (!(p >= 0.0 && p <= 1.0 && q >= 0.0 && q <= 1.0))
        throw std::invalid_argument("relative entropy: probabilities must lie in [0,1]");
    double h = 0.0;
    if (p > 0.0)
    {
        if (q == 0.0) return Entropy::infinite();
        h += p * (std::log(p) - std::log(q));
    }
    if (p < 1.0)
    {
        if (q == 1.0) return Entropy::infinite();
        h += (1.0 - p) * (std::log1p(-p) - std::log1p(-q));
    }
    // Each site term is a KL divergence, hence >= 0; rounding can push it a hair below.
    return Entropy(std::max(0.0, h));
}

Entropy relative_entropy_product(const LatticeProfile& p, const LatticeProfile& q)
{
    if (p.size() != q.size()) throw std::invalid_argument("relative entropy: profiles differ in length");
    Entropy total(0.0);
    for (std::size_t x = 0; x < p.size(); ++x)
    {
        total += bernoulli_relative_entropy(p.values[x], q.values[x]);
        if (total.is_infinite()) break;
    }
    return total;
}

double RegularizationSchedule::eps(long n) const
{
    if (n < 1) throw std::invalid_argument("schedule: N must be positive");
    const double e = std::pow(static_cast<double>(n), -rate());
    if (!(e > 0.0 && e < 0.5))
        throw std::invalid_argument("schedule: eps_N = " + std::to_string(e) + " at N=" + std::to_string(n) +
                                    " is outside (0, 1/2)");
    return e;
}

double RegularizationSchedule::growth_functional(long n) const
{
    return static_cast<double>(n) * std::pow(eps(n), 6.0 * m - 6.0);
}

void check_initial_profile(const std::function<double(double)>& rho_ini, int m, std::size_t cells)
{
    const auto coarse = GridProfile::sample(cells, rho_ini);
    const auto fine = GridProfile::sample(2 * cells, rho_ini);
    for (double v : fine.values)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("initial profile: density must lie in [0,1]");
    const double lip_coarse = pressure_lipschitz(coarse, m);
    const double lip_fine = pressure_lipschitz(fine, m);
    // A jump in the pressure makes the discrete slope double under refinement.
    if (lip_fine > 1.5 * lip_coarse + 1e-9)
        throw std::invalid_argument("initial profile: pressure is not Lipschitz (discrete slope " +
                                    std::to_string(lip_coarse) + " -> " + std::to_string(lip_fine) + ")");
    const auto comps = interface_components(fine, 1e-300, 0.0);
    if (comps.count > fine.cells() / 8)
        throw std::invalid_argument("initial profile: too many positivity components for the grid");
}

std::vector<EntropyScanRow> initial_entropy_scan(const std::function<double(double)>& rho_ini,
                                                 const RegularizationSchedule& schedule, std::span<const long> n_list)
{
    if (n_list.empty()) throw std::invalid_argument("entropy scan: empty N list");
    check_initial_profile(rho_ini, schedule.m, static_cast<std::size_t>(n_list.front()));

    std::vector<EntropyScanRow> rows;
    rows.reserve(n_list.size());
    for (long n : n_list)
    {
        const double eps = schedule.eps(n);
        const auto grid = GridProfile::sample(static_cast<std::size_t>(n), rho_ini);
        const auto regularized = regularize_initial(grid, eps, schedule.m);
        // Lattice site x sits at cell centre x; both measures are sampled at the same points.
        const LatticeProfile p(grid.values);
        const LatticeProfile q(regularized.values);
        EntropyScanRow row;
        row.n = n;
        row.eps = eps;
        row.entropy = relative_entropy_product(p, q);
        const double scale =
            static_cast<double>(n) * std::pow(eps, 1.0 / (schedule.m - 1)) * std::abs(std::log(eps));
        row.ratio = row.entropy.value_or_inf() / scale;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace kcm
