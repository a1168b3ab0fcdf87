#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kcm/lattice.hpp"
#include "kcm/pme.hpp"
#include "kcm/product_measures.hpp"

namespace kcm
{

// ---------------------------------------------------------------------------
// Centred finite differences on the periodic grid (second order).

GridProfile diff1(const GridProfile& f);
GridProfile diff2(const GridProfile& f);
GridProfile diff3(const GridProfile& f);

// ---------------------------------------------------------------------------

/// lambda(t,u) = log(rho (1-alpha) / (alpha (1-rho))) on every snapshot.
struct LambdaField
{
    double alpha = 0.5;
    std::vector<double> times;
    std::vector<GridProfile> values;
};

/// Throws std::invalid_argument if some rho is 0 or 1.
GridProfile lambda_profile(const GridProfile& rho, double alpha);
LambdaField lambda_from_density(const SpaceTimeField& rho, double alpha);

/// Max residuals of the lambda derivative identities on one grid.
struct IdentityResiduals
{
    std::size_t cells = 0;
    double first = 0.0;   ///< d_u lambda vs d_u rho / (rho(1-rho))
    double second = 0.0;  ///< d_uu lambda vs its expansion in rho derivatives
    double third = 0.0;   ///< d_uuu lambda vs its expansion
    double time = 0.0;    ///< d_t lambda vs m rho^{m-1} d_uu lambda + m rho^{m-1}(m-(m+1)rho)(d_u lambda)^2
};

/// `later` is the solution a time `tau` after `rho`.
IdentityResiduals lambda_identity_residuals(const GridProfile& rho, const GridProfile& later, double tau, int m,
                                            double alpha);

/// A regularised PME run evaluated on M and 2M cells.
struct IdentityCase
{
    std::function<double(double)> rho_ini;
    int m = 2;
    double eps = 0.1;
    std::size_t cells = 512;
    double t_eval = 0.01;
    double alpha = 0.5;
};

struct IdentityReport
{
    IdentityResiduals coarse;
    IdentityResiduals fine;
    /// log2(coarse / fine) per identity, in the order first, second, third, time.
    [[nodiscard]] std::vector<double> orders() const;
};

IdentityReport check_lambda_identities(const IdentityCase& c);

// ---------------------------------------------------------------------------

struct BoundEntry
{
    std::string name;
    double measured = 0.0;
    double bound = 0.0;      ///< NaN when only existence of a constant is asserted
    double exponent = 0.0;   ///< bound = constant * eps^exponent
    double empirical_constant = 0.0;  ///< measured / eps^exponent
    bool explicit_constant = true;

    [[nodiscard]] double slack() const noexcept { return measured / bound; }
    [[nodiscard]] bool holds() const noexcept { return !(measured > bound); }
};

struct NormBoundReport
{
    double eps = 0.0;
    int m = 2;
    double c_lip = 0.0;
    double c_h = 0.0;
    std::vector<BoundEntry> entries;

    [[nodiscard]] const BoundEntry& at(const std::string& name) const;
};

/// Constants of the derivative bounds, as functions of (m, C_h, C_Lip).
struct BoundConstants
{
    double c0, c1, c2, c3;
    double lambda2;  ///< admissible C for sup_t int |d_uu lambda|^2
    double lambda3;  ///< admissible C for int int |d_uuu lambda|^2
};
BoundConstants bound_constants(int m, double c_h, double c_lip);

/// Discrete norms of the regularised field compared with their bounds. Time
/// integrals use the trapezoid rule over the stored snapshots.
NormBoundReport norm_bounds_report(const SpaceTimeField& rho, double eps, double c_lip, double c_h);

/// Bound names by group.
const std::vector<std::string>& lipschitz_bound_names();  // p_Lip, rho_Lip, L2H2_p, L2H2_rho
const std::vector<std::string>& higher_bound_names();     // the rest

// ---------------------------------------------------------------------------

/// F_N = d_uu lambda hbar(rho) + (d_u lambda)^2 gbar(rho); returns |int F_N du| per snapshot.
std::vector<double> f_n_mean_zero(const SpaceTimeField& rho, double alpha);
GridProfile f_n_profile(const GridProfile& rho, int m, double alpha);

// ---------------------------------------------------------------------------

struct Ensemble
{
    double time = 0.0;
    std::vector<Configuration> configs;
};

/// Ensemble and space average of V_{ell,psi}(tau_x eta).
double one_block_statistic(const Ensemble& ensemble, const LocalFunction& psi, long ell);

enum class SiteLabel : unsigned char
{
    good,
    zero,
    bad,
};

struct SiteClassification
{
    std::vector<SiteLabel> labels;
    double delta = 0.0;
    double alpha_n = 0.0;
    long ell = 0;
    long ell0 = 0;

    [[nodiscard]] double fraction(SiteLabel label) const;
};

/// Good if rho >= delta on [(x-ell-ell0)/N, (x+ell+ell0)/N], zero if rho <= alpha_n
/// there, bad otherwise. Good wins when both hold (possible only if alpha_n == delta).
SiteClassification classify_sites(const GridProfile& rho, double delta, double alpha_n, long ell, long ell0, long n);

// ---------------------------------------------------------------------------

/// Signed N^{-1} sum_x G(x/N) tau_x phi(eta) - int G phibar(rho) du, one value per configuration.
std::vector<double> local_equilibrium_discrepancies(const Ensemble& ensemble, const std::function<double(double)>& g,
                                                    const LocalFunction& phi, const GridProfile& rho_ref);

struct MonteCarloEstimate
{
    double mean = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of E|discrepancy|.
MonteCarloEstimate local_equilibrium_error(const Ensemble& ensemble, const std::function<double(double)>& g,
                                           const LocalFunction& phi, const GridProfile& rho_ref);

/// N^{-1} sum_x |mean_r eta_r^(ell)(x) - rho_ref(x/N)|.
double block_density_l1(const Ensemble& ensemble, long ell, const GridProfile& rho_ref);

}  // namespace kcm
