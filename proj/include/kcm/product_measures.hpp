#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kcm/lattice.hpp"
#include "kcm/pme.hpp"

namespace kcm
{

/// Site marginals of a non-homogeneous Bernoulli product measure; entry x is rho(x/N).
struct LatticeProfile
{
    std::vector<double> values;

    LatticeProfile() = default;
    explicit LatticeProfile(std::vector<double> v);

    static LatticeProfile from_function(std::size_t n, const std::function<double(double)>& rho);
    /// Linear interpolation of a grid profile at the lattice points x/N.
    static LatticeProfile from_grid(const GridProfile& grid, std::size_t n);
    static LatticeProfile constant(std::size_t n, double value);

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
};

/// Relative entropy value; +infinity is a tagged state rather than a saturated float.
class Entropy
{
public:
    constexpr Entropy() = default;
    constexpr explicit Entropy(double v) : value_(v) {}
    static constexpr Entropy infinite()
    {
        Entropy e;
        e.infinite_ = true;
        return e;
    }

    [[nodiscard]] constexpr bool is_infinite() const noexcept { return infinite_; }
    [[nodiscard]] constexpr bool is_finite() const noexcept { return !infinite_; }
    /// Throws std::logic_error when infinite.
    [[nodiscard]] double value() const;
    [[nodiscard]] double value_or_inf() const noexcept
    {
        return infinite_ ? std::numeric_limits<double>::infinity() : value_;
    }
    [[nodiscard]] std::string to_string() const;

    Entropy& operator+=(const Entropy& other) noexcept;

private:
    double value_ = 0.0;
    bool infinite_ = false;
};

Configuration sample_product(const LatticeProfile& profile, std::uint64_t seed);

inline constexpr int kMaxEnumerationWidth = 24;

/// E_alpha[phi], by enumeration of all 2^w windows. Throws for w > 24.
double bernoulli_average(const LocalFunction& phi, double alpha);

/// phi-bar as polynomial coefficients in alpha (degree <= w), lowest order first.
std::vector<double> bernoulli_average_polynomial(const LocalFunction& phi);

/// Bernoulli relative entropy of one site, H(Ber(p) | Ber(q)).
Entropy bernoulli_relative_entropy(double p, double q);
/// H(nu_p | nu_q) for product measures; sum of site terms.
Entropy relative_entropy_product(const LatticeProfile& p, const LatticeProfile& q);

/// eps_N = N^{-exponent}; default exponent 1/(7(m-1)).
struct RegularizationSchedule
{
    int m = 2;
    double exponent = 0.0;  ///< 0 selects the default 1/(7(m-1))

    [[nodiscard]] double rate() const noexcept
    {
        return exponent > 0.0 ? exponent : 1.0 / (7.0 * static_cast<double>(m - 1));
    }
    /// Throws std::invalid_argument unless eps_N lies in (0, 1/2).
    [[nodiscard]] double eps(long n) const;
    /// N * eps_N^{6m-6}; must grow along the schedule.
    [[nodiscard]] double growth_functional(long n) const;
};

struct EntropyScanRow
{
    long n = 0;
    double eps = 0.0;
    Entropy entropy;
    double ratio = 0.0;  ///< H / (N eps^{1/(m-1)} |log eps|)
};

/// Checks the hypotheses on an initial profile: Lipschitz pressure and a finite
/// number of positivity components, judged on grids of M and 2M cells.
void check_initial_profile(const std::function<double(double)>& rho_ini, int m, std::size_t cells);

/// H(nu_{rho_ini} | nu_{rho_N^ini}) for each N, with rho_N^ini from regularize_initial on an N-cell grid.
std::vector<EntropyScanRow> initial_entropy_scan(const std::function<double(double)>& rho_ini,
                                                 const RegularizationSchedule& schedule, std::span<const long> n_list);

}  // namespace kcm
