#include "kcm/pme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace kcm
{

GridProfile GridProfile::sample(std::size_t cells, const std::function<double(double)>& f, ProfileKind kind)
{
    if (cells == 0) throw std::invalid_argument("grid profile: M must be positive");
    std::vector<double> v(cells);
    const double du = 1.0 / static_cast<double>(cells);
    for (std::size_t j = 0; j < cells; ++j) v[j] = f((static_cast<double>(j) + 0.5) * du);
    return {std::move(v), kind};
}

double GridProfile::integral() const noexcept
{
    double s = 0.0;
    for (double v : values) s += v;
    return s * spacing();
}

double GridProfile::interpolate(double u) const noexcept
{
    const double m = static_cast<double>(values.size());
    double s = u * m - 0.5;
    s -= m * std::floor(s / m);
    const auto j = static_cast<long>(std::floor(s));
    const double w = s - static_cast<double>(j);
    return (1.0 - w) * (*this)[j] + w * (*this)[j + 1];
}

double GridProfile::max() const noexcept { return *std::max_element(values.begin(), values.end()); }
double GridProfile::min() const noexcept { return *std::min_element(values.begin(), values.end()); }

GridProfile pressure_from_density(const GridProfile& rho, int m)
{
    if (rho.kind != ProfileKind::density) throw std::invalid_argument("pressure_from_density: expects a density");
    const double k = static_cast<double>(m) / static_cast<double>(m - 1);
    std::vector<double> p(rho.cells());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = k * std::pow(rho.values[j], m - 1);
    return {std::move(p), ProfileKind::pressure};
}

GridProfile density_from_pressure(const GridProfile& pressure, int m)
{
    if (pressure.kind != ProfileKind::pressure) throw std::invalid_argument("density_from_pressure: expects a pressure");
    const double k = static_cast<double>(m - 1) / static_cast<double>(m);
    const double e = 1.0 / static_cast<double>(m - 1);
    std::vector<double> r(pressure.cells());
    for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::pow(std::max(0.0, k * pressure.values[j]), e);
    return {std::move(r), ProfileKind::density};
}

double pressure_lipschitz(const GridProfile& rho, int m)
{
    const auto p = pressure_from_density(rho, m);
    double lip = 0.0;
    const long n = static_cast<long>(p.cells());
    for (long j = 0; j < n; ++j) lip = std::max(lip, std::abs(p[j + 1] - p[j]));
    return lip / p.spacing();
}

// ---------------------------------------------------------------------------

namespace
{
    double bump(double y) { return std::abs(y) < 1.0 ? std::exp(-1.0 / (1.0 - y * y)) : 0.0; }

    /// Integral of the unscaled bump over (-1,1), by composite Simpson on a fine grid.
    double bump_mass()
    {
        constexpr int n = 1 << 16;
        const double h = 2.0 / n;
        double s = bump(-1.0) + bump(1.0);
        for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * bump(-1.0 + i * h);
        return s * h / 3.0;
    }
}  // namespace

double Mollifier::sup() const noexcept { return *std::max_element(weights.begin(), weights.end()); }

Mollifier build_mollifier(double eps, std::size_t cells)
{
    if (cells == 0) throw std::invalid_argument("build_mollifier: M must be positive");
    const double du = 1.0 / static_cast<double>(cells);
    if (!(eps > 2.0 * du))
        throw std::invalid_argument("build_mollifier: eps must exceed 2/M (under-resolved, eps=" + std::to_string(eps) +
                                    ", M=" + std::to_string(cells) + ")");
    if (!(eps < 0.5)) throw std::invalid_argument("build_mollifier: eps must be < 1/2");

    static const double mass = bump_mass();
    Mollifier h;
    h.eps = eps;
    h.cells = cells;
    h.c_h = std::exp(-1.0) / mass;
    h.radius = static_cast<long>(std::ceil(eps / du)) - 1;
    while (static_cast<double>(h.radius + 1) * du < eps) ++h.radius;
    h.weights.resize(static_cast<std::size_t>(2 * h.radius + 1));
    for (long k = 0; k <= h.radius; ++k)
    {
        const double v = bump(static_cast<double>(k) * du / eps);
        h.weights[static_cast<std::size_t>(h.radius + k)] = v;
        h.weights[static_cast<std::size_t>(h.radius - k)] = v;
    }
    // The trapezoidal rule on the symmetric grid reduces to a plain sum since the endpoints vanish.
    double total = 0.0;
    for (long k = 1; k <= h.radius; ++k) total += 2.0 * h.weights[static_cast<std::size_t>(h.radius + k)];
    total += h.weights[static_cast<std::size_t>(h.radius)];
    const double scale = 1.0 / (total * du);
    for (auto& w : h.weights) w *= scale;
    return h;
}

GridProfile regularize_initial(const GridProfile& rho_ini, double eps, int m)
{
    if (rho_ini.kind != ProfileKind::density) throw std::invalid_argument("regularize_initial: expects a density");
    if (m < 2) throw std::invalid_argument("regularize_initial: m must be >= 2");
    for (double v : rho_ini.values)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("regularize_initial: density must lie in [0,1]");

    const auto h = build_mollifier(eps, rho_ini.cells());
    const double k = static_cast<double>(m) / static_cast<double>(m - 1);
    const double p_lo = k * std::pow(eps, m - 1);
    const double p_hi = k * std::pow(1.0 - eps, m - 1);

    auto truncated = pressure_from_density(rho_ini, m);
    for (auto& p : truncated.values) p = std::clamp(p, p_lo, p_hi);

    const long n = static_cast<long>(truncated.cells());
    const double du = truncated.spacing();
    std::vector<double> smoothed(truncated.cells());
    for (long j = 0; j < n; ++j)
    {
        double s = 0.0;
        for (long q = -h.radius; q <= h.radius; ++q) s += h.at(q) * truncated[j - q];
        // A convex combination of clamped values; the clamp only absorbs rounding.
        smoothed[static_cast<std::size_t>(j)] = std::clamp(s * du, p_lo, p_hi);
    }
    auto rho = density_from_pressure(GridProfile(std::move(smoothed), ProfileKind::pressure), m);
    for (auto& r : rho.values) r = std::clamp(r, eps, 1.0 - eps);
    return rho;
}

double regularization_sup_bound(int m, double c_lip, double eps)
{
    const double e = 1.0 / static_cast<double>(m - 1);
    const double c_ini = std::pow(static_cast<double>(m - 1) / m * (m + c_lip), e);
    return c_ini * std::pow(eps, e);
}

double regularization_pressure_bound(int m, double c_lip, double eps) { return (m + c_lip) * eps; }

// ---------------------------------------------------------------------------

void SolverConfig::validate() const
{
    if (m < 2) throw std::invalid_argument("solver: m must be >= 2");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw std::invalid_argument("solver: cfl_safety must lie in (0,1]");
    if (!(horizon >= 0.0)) throw std::invalid_argument("solver: horizon must be >= 0");
    for (std::size_t i = 0; i < snapshot_times.size(); ++i)
    {
        if (snapshot_times[i] < 0.0 || snapshot_times[i] > horizon)
            throw std::invalid_argument("solver: snapshot times must lie in [0, T]");
        if (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1]))
            throw std::invalid_argument("solver: snapshot times must be strictly increasing");
    }
}

SpaceTimeField solve_pme(const GridProfile& rho0, const SolverConfig& config)
{
    config.validate();
    if (rho0.kind != ProfileKind::density) throw std::invalid_argument("solve_pme: expects a density");
    for (double v : rho0.values)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("solve_pme: initial density must lie in [0,1]");

    SpaceTimeField field;
    field.m = config.m;
    const int m = config.m;
    const std::size_t n = rho0.cells();
    const double du = rho0.spacing();
    const double inv_du2 = 1.0 / (du * du);

    std::vector<double> rho = rho0.values;
    std::vector<double> v(n);
    std::vector<double> flux(n);  // flux[j] = v_{j+1} - v_j

    double t = 0.0;
    std::size_t next = 0;
    const auto record = [&] {
        while (next < config.snapshot_times.size() && config.snapshot_times[next] <= t)
        {
            field.times.push_back(config.snapshot_times[next]);
            field.snapshots.emplace_back(rho, ProfileKind::density);
            ++next;
        }
    };
    record();

    while (t < config.horizon)
    {
        double peak = 0.0;
        for (std::size_t j = 0; j < n; ++j)
        {
            double power = rho[j];
            for (int k = 1; k < m; ++k) power *= rho[j];
            v[j] = power;
            peak = std::max(peak, rho[j]);
        }
        double target = config.horizon;
        if (next < config.snapshot_times.size()) target = std::min(target, config.snapshot_times[next]);
        const double diffusivity = 2.0 * m * std::pow(peak, m - 1);
        double dt = target - t;
        if (diffusivity > 0.0) dt = std::min(dt, config.cfl_safety * du * du / diffusivity);
        // Land on the target exactly when within a hair of it.
        if (target - (t + dt) < 1e-14 * std::max(1.0, target)) dt = target - t;

        if (diffusivity > 0.0)
        {
            for (std::size_t j = 0; j + 1 < n; ++j) flux[j] = v[j + 1] - v[j];
            flux[n - 1] = v[0] - v[n - 1];
            const double lambda = dt * inv_du2;
            for (std::size_t j = 0; j < n; ++j)
            {
                const double left = flux[j == 0 ? n - 1 : j - 1];
                rho[j] += lambda * (flux[j] - left);
                if (!(rho[j] >= -1e-12 && rho[j] <= 1.0 + 1e-12))
                    throw std::runtime_error("solve_pme: value " + std::to_string(rho[j]) + " left [0,1] at t=" +
                                             std::to_string(t) + " (CFL violation)");
            }
        }
        t = (dt == target - t) ? target : t + dt;
        ++field.steps;
        record();
    }
    return field;
}

std::vector<double> uniform_times(double horizon, std::size_t intervals)
{
    std::vector<double> out(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        out[i] = horizon * static_cast<double>(i) / static_cast<double>(intervals);
    out.back() = horizon;
    return out;
}

// ---------------------------------------------------------------------------

double barenblatt(double t, double u, int m, double c)
{
    if (!(t > 0.0)) throw std::invalid_argument("barenblatt: t must be positive");
    if (m < 2) throw std::invalid_argument("barenblatt: m must be >= 2");
    const double md = m;
    const double inner = c - (md - 1.0) * u * u / (2.0 * md * (md + 1.0) * std::pow(t, 2.0 / (md + 1.0)));
    if (inner <= 0.0) return 0.0;
    return std::pow(t, -1.0 / (md + 1.0)) * std::pow(inner, 1.0 / (md - 1.0));
}

double barenblatt_radius(double t, int m, double c)
{
    const double md = m;
    return std::sqrt(2.0 * md * (md + 1.0) * c / (md - 1.0)) * std::pow(t, 1.0 / (md + 1.0));
}

double periodic_offset(double u, double c) noexcept
{
    double d = u - c;
    d -= std::floor(d + 0.5);
    return d;
}

void BarenblattSpec::check_fits(double t) const
{
    const double r = barenblatt_radius(t, m, c);
    if (!(r < 0.5))
        throw std::invalid_argument("barenblatt: support radius " + std::to_string(r) + " at t=" + std::to_string(t) +
                                    " wraps the torus (need < 1/2)");
}

double BarenblattSpec::at(double t, double u) const
{
    check_fits(t);
    return barenblatt(t, periodic_offset(u, center), m, c);
}

GridProfile BarenblattSpec::profile(std::size_t cells, double elapsed) const
{
    const double t = t0 + elapsed;
    check_fits(t);
    auto p = GridProfile::sample(cells, [&](double u) { return barenblatt(t, periodic_offset(u, center), m, c); });
    for (double v : p.values)
        if (v > 1.0) throw std::invalid_argument("barenblatt: density exceeds 1; choose a smaller C or later t0");
    return p;
}

// ---------------------------------------------------------------------------

InterfaceSnapshot interface_components(const GridProfile& rho, double delta, double zero_floor)
{
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("interface_components: delta must lie in (0,1)");
    InterfaceSnapshot out;
    const std::size_t n = rho.cells();
    std::size_t thin = 0;
    for (double v : rho.values)
        if (v > zero_floor && v < delta) ++thin;
    out.gamma_measure = static_cast<double>(thin) * rho.spacing();

    std::vector<CellRun> runs;
    std::size_t j = 0;
    while (j < n)
    {
        if (rho.values[j] > delta)
        {
            CellRun run{j, 0};
            while (j < n && rho.values[j] > delta)
            {
                ++run.length;
                ++j;
            }
            runs.push_back(run);
        }
        else
            ++j;
    }
    if (runs.size() > 1 && runs.front().first == 0 && runs.back().first + runs.back().length == n)
    {
        runs.back().length += runs.front().length;
        runs.erase(runs.begin());
    }
    out.components = std::move(runs);
    out.count = out.components.size();
    return out;
}

}  // namespace kcm
