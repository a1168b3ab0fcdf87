#pragma once

#include <functional>
#include <span>
#include <vector>

namespace kcm
{

enum class ProfileKind
{
    density,
    pressure,
};

/// Values on the periodic grid u_j = (j + 1/2)/M, j = 0..M-1.
struct GridProfile
{
    std::vector<double> values;
    ProfileKind kind = ProfileKind::density;

    GridProfile() = default;
    GridProfile(std::vector<double> v, ProfileKind k = ProfileKind::density) : values(std::move(v)), kind(k) {}

    static GridProfile sample(std::size_t cells, const std::function<double(double)>& f,
                              ProfileKind kind = ProfileKind::density);

    [[nodiscard]] std::size_t cells() const noexcept { return values.size(); }
    [[nodiscard]] double spacing() const noexcept { return 1.0 / static_cast<double>(values.size()); }
    [[nodiscard]] double center(std::size_t j) const noexcept { return (static_cast<double>(j) + 0.5) * spacing(); }
    [[nodiscard]] double operator[](long j) const noexcept
    {
        const long n = static_cast<long>(values.size());
        const long r = j % n;
        return values[static_cast<std::size_t>(r < 0 ? r + n : r)];
    }
    /// Midpoint-rule integral over the torus.
    [[nodiscard]] double integral() const noexcept;
    /// Periodic linear interpolation at u in R (taken mod 1).
    [[nodiscard]] double interpolate(double u) const noexcept;
    [[nodiscard]] double max() const noexcept;
    [[nodiscard]] double min() const noexcept;
};

GridProfile pressure_from_density(const GridProfile& rho, int m);
GridProfile density_from_pressure(const GridProfile& pressure, int m);

/// max_j |p_{j+1} - p_j| / du, the discrete Lipschitz constant of the pressure of `rho`.
double pressure_lipschitz(const GridProfile& rho, int m);

// ---------------------------------------------------------------------------

/// Discretised h_N(y) = h(y/eps)/eps with h the unit-mass bump exp(-1/(1-y^2)).
struct Mollifier
{
    double eps = 0.0;
    std::size_t cells = 0;
    long radius = 0;              ///< weights live on offsets -radius..radius
    std::vector<double> weights;  ///< h_N(k du), index k + radius; sum(weights) * du == 1
    double c_h = 0.0;             ///< sup of the unscaled unit-mass bump

    [[nodiscard]] double at(long k) const noexcept
    {
        return (k < -radius || k > radius) ? 0.0 : weights[static_cast<std::size_t>(k + radius)];
    }
    [[nodiscard]] double sup() const noexcept;
};

/// Throws std::invalid_argument if eps <= 2/M or eps >= 1/2.
Mollifier build_mollifier(double eps, std::size_t cells);

/// Clamp the pressure to [p(eps), p(1-eps)], mollify, map back to density.
GridProfile regularize_initial(const GridProfile& rho_ini, double eps, int m);

/// C_ini * eps^{1/(m-1)} with C_ini = ((m-1)/m (m + c_lip))^{1/(m-1)}.
double regularization_sup_bound(int m, double c_lip, double eps);
/// (m + c_lip) * eps, the pressure counterpart.
double regularization_pressure_bound(int m, double c_lip, double eps);

// ---------------------------------------------------------------------------

struct SolverConfig
{
    int m = 2;
    double cfl_safety = 0.5;
    double horizon = 0.0;
    std::vector<double> snapshot_times;  ///< strictly increasing, within [0, horizon]

    void validate() const;
};

struct SpaceTimeField
{
    int m = 2;
    std::vector<double> times;
    std::vector<GridProfile> snapshots;
    std::size_t steps = 0;
};

/// Explicit conservative scheme for d_t rho = d_uu(rho^m) on the torus.
/// Throws std::runtime_error if any value leaves [-1e-12, 1 + 1e-12].
SpaceTimeField solve_pme(const GridProfile& rho0, const SolverConfig& config);

/// Evenly spaced times 0, T/k, ..., T.
std::vector<double> uniform_times(double horizon, std::size_t intervals);

// ---------------------------------------------------------------------------

/// Barenblatt profile rho^B(t, u) on the real line, u the signed distance to the centre.
double barenblatt(double t, double u, int m, double c);
/// Radius of the positivity set of rho^B(t, .).
double barenblatt_radius(double t, int m, double c);

struct BarenblattSpec
{
    int m = 2;
    double c = 1.0 / 80.0;
    double t0 = 1.0;
    double center = 0.5;

    /// Density at absolute Barenblatt time t, u on the torus. Throws if the support wraps.
    [[nodiscard]] double at(double t, double u) const;
    /// Grid sample at Barenblatt time t0 + elapsed.
    [[nodiscard]] GridProfile profile(std::size_t cells, double elapsed = 0.0) const;
    void check_fits(double t) const;
};

/// Signed periodic distance u - c mapped into [-1/2, 1/2).
double periodic_offset(double u, double c) noexcept;

// ---------------------------------------------------------------------------

struct CellRun
{
    std::size_t first = 0;   ///< first cell of the run
    std::size_t length = 0;  ///< number of cells (may wrap past M-1)
};

struct InterfaceSnapshot
{
    std::vector<CellRun> components;  ///< maximal runs with rho > delta, merged across the seam
    std::size_t count = 0;
    double gamma_measure = 0.0;       ///< measure of {zero_floor < rho < delta}
};

inline constexpr double kDefaultZeroFloor = 1e-12;

InterfaceSnapshot interface_components(const GridProfile& rho, double delta, double zero_floor = kDefaultZeroFloor);

}  // namespace kcm
