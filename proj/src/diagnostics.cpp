#include "kcm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kcm
{

namespace
{
    using Values = std::vector<double>;

    double sq(double x) { return x * x; }

    GridProfile stencil(const GridProfile& f, int order)
    {
        const long n = static_cast<long>(f.cells());
        if (n < 5) throw std::invalid_argument("finite differences need at least 5 cells");
        const double h = f.spacing();
        Values out(static_cast<std::size_t>(n));
        for (long j = 0; j < n; ++j)
        {
            double d = 0.0;
            switch (order)
            {
                case 1: d = (f[j + 1] - f[j - 1]) / (2.0 * h); break;
                case 2: d = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (h * h); break;
                default: d = (f[j + 2] - 2.0 * f[j + 1] + 2.0 * f[j - 1] - f[j - 2]) / (2.0 * h * h * h); break;
            }
            out[static_cast<std::size_t>(j)] = d;
        }
        return GridProfile(std::move(out), f.kind);
    }

    double sup_abs(const GridProfile& f)
    {
        double s = 0.0;
        for (double v : f.values) s = std::max(s, std::abs(v));
        return s;
    }

    double l2_sq(const GridProfile& f)
    {
        double s = 0.0;
        for (double v : f.values) s += v * v;
        return s * f.spacing();
    }

    /// Trapezoid rule over the snapshot times.
    double time_integral(const std::vector<double>& times, const Values& y)
    {
        double s = 0.0;
        for (std::size_t k = 1; k < times.size(); ++k) s += 0.5 * (y[k] + y[k - 1]) * (times[k] - times[k - 1]);
        return s;
    }

    double polynomial(const Values& coeff, double x)
    {
        double s = 0.0;
        for (auto it = coeff.rbegin(); it != coeff.rend(); ++it) s = s * x + *it;
        return s;
    }

    std::size_t wrap(long x, long n)
    {
        const long r = x % n;
        return static_cast<std::size_t>(r < 0 ? r + n : r);
    }

    void check_alpha(double alpha)
    {
        if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("lambda: alpha must lie in (0,1)");
    }
}  // namespace

GridProfile diff1(const GridProfile& f) { return stencil(f, 1); }
GridProfile diff2(const GridProfile& f) { return stencil(f, 2); }
GridProfile diff3(const GridProfile& f) { return stencil(f, 3); }

// ---------------------------------------------------------------------------

GridProfile lambda_profile(const GridProfile& rho, double alpha)
{
    check_alpha(alpha);
    const auto logit = [](double r) { return std::log(r) - std::log1p(-r); };
    const double offset = logit(alpha);
    Values out(rho.cells());
    for (std::size_t j = 0; j < out.size(); ++j)
    {
        const double r = rho.values[j];
        if (!(r > 0.0 && r < 1.0))
            throw std::invalid_argument("lambda: density " + std::to_string(r) + " at cell " + std::to_string(j) +
                                        " is not in (0,1); regularize first");
        out[j] = logit(r) - offset;
    }
    return GridProfile(std::move(out));
}

LambdaField lambda_from_density(const SpaceTimeField& rho, double alpha)
{
    LambdaField field;
    field.alpha = alpha;
    field.times = rho.times;
    field.values.reserve(rho.snapshots.size());
    for (const auto& s : rho.snapshots) field.values.push_back(lambda_profile(s, alpha));
    return field;
}

IdentityResiduals lambda_identity_residuals(const GridProfile& rho, const GridProfile& later, double tau, int m,
                                            double alpha)
{
    if (rho.cells() != later.cells()) throw std::invalid_argument("identity residuals: grids differ");
    if (!(tau > 0.0)) throw std::invalid_argument("identity residuals: tau must be positive");
    const auto lam = lambda_profile(rho, alpha);
    const auto lam_next = lambda_profile(later, alpha);
    const auto l1 = diff1(lam), l2 = diff2(lam), l3 = diff3(lam);
    const auto r1 = diff1(rho), r2 = diff2(rho), r3 = diff3(rho);

    IdentityResiduals res;
    res.cells = rho.cells();
    for (std::size_t j = 0; j < rho.cells(); ++j)
    {
        const double p = rho.values[j];
        const double q = 1.0 - p;
        const double a = r1.values[j], b = r2.values[j], c = r3.values[j];
        const double e1 = a / (p * q);
        const double e2 = b * (1.0 / p + 1.0 / q) + a * a * (1.0 / (q * q) - 1.0 / (p * p));
        const double e3 = c * (1.0 / p + 1.0 / q) + 3.0 * b * a * (1.0 / (q * q) - 1.0 / (p * p)) +
                          2.0 * a * a * a * (1.0 / (p * p * p) + 1.0 / (q * q * q));
        const double diff = m * std::pow(p, m - 1);
        const double et = diff * l2.values[j] + diff * (m - (m + 1) * p) * sq(l1.values[j]);
        const double dt_lam = (lam_next.values[j] - lam.values[j]) / tau;

        res.first = std::max(res.first, std::abs(l1.values[j] - e1));
        res.second = std::max(res.second, std::abs(l2.values[j] - e2));
        res.third = std::max(res.third, std::abs(l3.values[j] - e3));
        res.time = std::max(res.time, std::abs(dt_lam - et));
    }
    return res;
}

std::vector<double> IdentityReport::orders() const
{
    const auto order = [](double c, double f) { return std::log2(c / f); };
    return {order(coarse.first, fine.first), order(coarse.second, fine.second), order(coarse.third, fine.third),
            order(coarse.time, fine.time)};
}

IdentityReport check_lambda_identities(const IdentityCase& c)
{
    if (!c.rho_ini) throw std::invalid_argument("identity check: missing initial profile");
    const auto evaluate = [&c](std::size_t cells) {
        const auto reg = regularize_initial(GridProfile::sample(cells, c.rho_ini), c.eps, c.m);
        SolverConfig cfg;
        cfg.m = c.m;
        cfg.horizon = c.t_eval;
        cfg.snapshot_times = {c.t_eval};
        const auto at_t = solve_pme(reg, cfg).snapshots.back();
        // A step no larger than the solver's own, so the pair is one explicit step apart.
        const double du = at_t.spacing();
        const double tau = cfg.cfl_safety * du * du / (2.0 * c.m);
        SolverConfig step = cfg;
        step.horizon = tau;
        step.snapshot_times = {tau};
        const auto later = solve_pme(at_t, step).snapshots.back();
        return lambda_identity_residuals(at_t, later, tau, c.m, c.alpha);
    };
    IdentityReport report;
    report.coarse = evaluate(c.cells);
    report.fine = evaluate(2 * c.cells);
    return report;
}

// ---------------------------------------------------------------------------

const BoundEntry& NormBoundReport::at(const std::string& name) const
{
    for (const auto& e : entries)
        if (e.name == name) return e;
    throw std::out_of_range("norm bound report: no entry " + name);
}

BoundConstants bound_constants(int m, double c_h, double c_lip)
{
    const double md = m;
    const double l2 = c_lip * c_lip;
    BoundConstants k{};
    k.c0 = l2 / (md * md * md) * (1.0 + 2.0 * sq(md - 2.0) / ((3.0 * md - 4.0) * (3.0 * md - 5.0)));
    k.c1 = l2 * (c_h * c_h * std::pow(2.0, 2.0 * md - 3.0) + sq(md + 1.0) / (2.0 * md * (2.0 * md - 1.0)) * l2);
    k.c2 = 2.0 * k.c1 / (md * md) + 2.0 * sq((md - 2.0) / (md * md)) * l2;
    k.c3 = 4.0 / (md * md) *
           (k.c1 + 2.0 * sq(2.0 - md) * l2 / (md * md * md) + sq(2.0 - md) * k.c0 * l2 +
            sq(2.0 - md) * sq(1.0 - md) * l2 * l2 / (md * (2.0 - 3.0 * md) * (3.0 - 3.0 * md)));
    k.lambda2 = 8.0 * (k.c2 + l2 * l2 / std::pow(md, 4));
    k.lambda3 = std::pow(2.0, 1.0 - md) * (9.0 * k.c3 + 36.0 * l2 * k.c0 / (md * md)) + 16.0 * l2 * l2 * l2 / std::pow(md, 6);
    return k;
}

const std::vector<std::string>& lipschitz_bound_names()
{
    static const std::vector<std::string> names{"p_Lip", "rho_Lip", "L2H2_p", "L2H2_rho"};
    return names;
}

const std::vector<std::string>& higher_bound_names()
{
    static const std::vector<std::string> names{"LinfH2_p", "L2H3_p",  "LinfH2_rho", "L2H3_rho",
                                                "lambda_Lip", "LinfH2_lambda", "L2H3_lambda", "L2_dtdu_lambda"};
    return names;
}

NormBoundReport norm_bounds_report(const SpaceTimeField& rho, double eps, double c_lip, double c_h)
{
    if (rho.snapshots.size() < 2) throw std::invalid_argument("norm bounds: need at least two snapshots");
    const int m = rho.m;
    const std::size_t k_count = rho.snapshots.size();

    double p_lip = 0.0, rho_lip = 0.0, lam_lip = 0.0;
    Values h2p(k_count), h3p(k_count), h2r(k_count), h3r(k_count), h2l(k_count), h3l(k_count);
    std::vector<GridProfile> dl(k_count);
    for (std::size_t k = 0; k < k_count; ++k)
    {
        const auto& r = rho.snapshots[k];
        const auto p = pressure_from_density(r, m);
        const auto lam = lambda_profile(r, 0.5);
        p_lip = std::max(p_lip, sup_abs(diff1(p)));
        rho_lip = std::max(rho_lip, sup_abs(diff1(r)));
        dl[k] = diff1(lam);
        lam_lip = std::max(lam_lip, sup_abs(dl[k]));
        h2p[k] = l2_sq(diff2(p));
        h3p[k] = l2_sq(diff3(p));
        h2r[k] = l2_sq(diff2(r));
        h3r[k] = l2_sq(diff3(r));
        h2l[k] = l2_sq(diff2(lam));
        h3l[k] = l2_sq(diff3(lam));
    }
    // Forward difference in time of d_u lambda between consecutive snapshots.
    double dtdu = 0.0;
    for (std::size_t k = 1; k < k_count; ++k)
    {
        const double dt = rho.times[k] - rho.times[k - 1];
        double s = 0.0;
        for (std::size_t j = 0; j < dl[k].cells(); ++j) s += sq((dl[k].values[j] - dl[k - 1].values[j]) / dt);
        dtdu += s * dl[k].spacing() * dt;
    }

    const auto sup = [](const Values& v) { return *std::max_element(v.begin(), v.end()); };
    const auto k = bound_constants(m, c_h, c_lip);
    const double md = m;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    NormBoundReport report;
    report.eps = eps;
    report.m = m;
    report.c_lip = c_lip;
    report.c_h = c_h;
    const auto add = [&](const std::string& name, double measured, double constant, double exponent, bool expl) {
        BoundEntry e;
        e.name = name;
        e.measured = measured;
        e.exponent = exponent;
        e.bound = std::isnan(constant) ? nan : constant * std::pow(eps, exponent);
        e.empirical_constant = measured / std::pow(eps, exponent);
        e.explicit_constant = expl;
        report.entries.push_back(e);
    };
    add("p_Lip", p_lip, c_lip, 0.0, true);
    add("rho_Lip", rho_lip, c_lip / md, 2.0 - md, true);
    add("L2H2_p", time_integral(rho.times, h2p), c_lip * c_lip / (2.0 * md), 1.0 - md, true);
    add("L2H2_rho", time_integral(rho.times, h2r), k.c0, 5.0 - 3.0 * md, true);
    add("LinfH2_p", sup(h2p), k.c1, 2.0 - 2.0 * md, true);
    add("L2H3_p", time_integral(rho.times, h3p), k.c1, 3.0 - 3.0 * md, true);
    add("LinfH2_rho", sup(h2r), k.c2, 6.0 - 4.0 * md, true);
    add("L2H3_rho", time_integral(rho.times, h3r), k.c3, 7.0 - 5.0 * md, true);
    add("lambda_Lip", lam_lip, 2.0 * c_lip / md, 1.0 - md, true);
    add("LinfH2_lambda", sup(h2l), k.lambda2, 4.0 - 4.0 * md, false);
    add("L2H3_lambda", time_integral(rho.times, h3l), k.lambda3, 6.0 - 6.0 * md, false);
    add("L2_dtdu_lambda", dtdu, nan, 6.0 - 6.0 * md, false);
    return report;
}

// ---------------------------------------------------------------------------

GridProfile f_n_profile(const GridProfile& rho, int m, double alpha)
{
    const auto lam = lambda_profile(rho, alpha);
    const auto l1 = diff1(lam);
    const auto l2 = diff2(lam);
    Values out(rho.cells());
    for (std::size_t j = 0; j < out.size(); ++j)
    {
        const double r = rho.values[j];
        const double hbar = std::pow(r, m);
        out[j] = l2.values[j] * hbar + sq(l1.values[j]) * m * hbar * (1.0 - r);
    }
    return GridProfile(std::move(out));
}

std::vector<double> f_n_mean_zero(const SpaceTimeField& rho, double alpha)
{
    std::vector<double> out;
    out.reserve(rho.snapshots.size());
    for (const auto& s : rho.snapshots) out.push_back(std::abs(f_n_profile(s, rho.m, alpha).integral()));
    return out;
}

// ---------------------------------------------------------------------------

double one_block_statistic(const Ensemble& ensemble, const LocalFunction& psi, long ell)
{
    if (ensemble.configs.empty()) throw std::invalid_argument("one-block: empty ensemble");
    if (ell < 0) throw std::invalid_argument("one-block: ell must be non-negative");
    const long n = ensemble.configs.front().n();
    if (2 * ell + 1 > n) throw std::invalid_argument("one-block: 2 ell + 1 exceeds N");
    const auto coeff = bernoulli_average_polynomial(psi);
    const long block = 2 * ell + 1;
    // psi-bar at every possible block density k / (2 ell + 1).
    Values table(static_cast<std::size_t>(block + 1));
    for (long k = 0; k <= block; ++k) table[k] = polynomial(coeff, static_cast<double>(k) / block);

    double total = 0.0;
    for (const auto& config : ensemble.configs)
    {
        if (config.n() != n) throw std::invalid_argument("one-block: configurations differ in size");
        Values psi_at(static_cast<std::size_t>(n));
        std::vector<long> occ(static_cast<std::size_t>(n));
        for (long x = 0; x < n; ++x)
        {
            psi_at[x] = psi.at(config, x);
            occ[x] = config[x];
        }
        // Sliding window sums over {x - ell, ..., x + ell}.
        double psi_sum = 0.0;
        long count = 0;
        for (long y = -ell; y <= ell; ++y)
        {
            psi_sum += psi_at[wrap(y, n)];
            count += occ[wrap(y, n)];
        }
        for (long x = 0; x < n; ++x)
        {
            total += std::abs(psi_sum / block - table[count]);
            const auto out = wrap(x - ell, n);
            const auto in = wrap(x + ell + 1, n);
            psi_sum += psi_at[in] - psi_at[out];
            count += occ[in] - occ[out];
        }
    }
    return total / (static_cast<double>(n) * static_cast<double>(ensemble.configs.size()));
}

double SiteClassification::fraction(SiteLabel label) const
{
    if (labels.empty()) return 0.0;
    return static_cast<double>(std::count(labels.begin(), labels.end(), label)) / static_cast<double>(labels.size());
}

SiteClassification classify_sites(const GridProfile& rho, double delta, double alpha_n, long ell, long ell0, long n)
{
    if (n < 1) throw std::invalid_argument("classify_sites: N must be positive");
    if (ell < 0 || ell0 < 0) throw std::invalid_argument("classify_sites: ell and ell0 must be non-negative");
    if (alpha_n > delta) throw std::invalid_argument("classify_sites: alpha_N must not exceed delta");
    SiteClassification out;
    out.delta = delta;
    out.alpha_n = alpha_n;
    out.ell = ell;
    out.ell0 = ell0;
    out.labels.resize(static_cast<std::size_t>(n));

    const double cells = static_cast<double>(rho.cells());
    for (long x = 0; x < n; ++x)
    {
        const double lo = static_cast<double>(x - ell - ell0) / n;
        const double hi = static_cast<double>(x + ell + ell0) / n;
        // The interpolant is piecewise linear between cell centres, so its extrema
        // on [lo, hi] sit at the endpoints or at centres inside.
        double lo_val = std::min(rho.interpolate(lo), rho.interpolate(hi));
        double hi_val = std::max(rho.interpolate(lo), rho.interpolate(hi));
        const long first = static_cast<long>(std::ceil(lo * cells - 0.5));
        const long last = static_cast<long>(std::floor(hi * cells - 0.5));
        for (long j = first; j <= last; ++j)
        {
            lo_val = std::min(lo_val, rho[j]);
            hi_val = std::max(hi_val, rho[j]);
        }
        SiteLabel label = SiteLabel::bad;
        if (lo_val >= delta)
            label = SiteLabel::good;
        else if (hi_val <= alpha_n)
            label = SiteLabel::zero;
        out.labels[static_cast<std::size_t>(x)] = label;
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<double> local_equilibrium_discrepancies(const Ensemble& ensemble, const std::function<double(double)>& g,
                                                    const LocalFunction& phi, const GridProfile& rho_ref)
{
    if (ensemble.configs.empty()) throw std::invalid_argument("local equilibrium: empty ensemble");
    const auto coeff = bernoulli_average_polynomial(phi);
    double reference = 0.0;
    for (std::size_t j = 0; j < rho_ref.cells(); ++j)
        reference += g(rho_ref.center(j)) * polynomial(coeff, rho_ref.values[j]);
    reference *= rho_ref.spacing();

    const long n = ensemble.configs.front().n();
    Values weight(static_cast<std::size_t>(n));
    for (long x = 0; x < n; ++x) weight[x] = g(static_cast<double>(x) / n);

    std::vector<double> out;
    out.reserve(ensemble.configs.size());
    for (const auto& config : ensemble.configs)
    {
        if (config.n() != n) throw std::invalid_argument("local equilibrium: configurations differ in size");
        double s = 0.0;
        for (long x = 0; x < n; ++x)
            if (weight[x] != 0.0) s += weight[x] * phi.at(config, x);
        out.push_back(s / n - reference);
    }
    return out;
}

MonteCarloEstimate local_equilibrium_error(const Ensemble& ensemble, const std::function<double(double)>& g,
                                           const LocalFunction& phi, const GridProfile& rho_ref)
{
    const auto d = local_equilibrium_discrepancies(ensemble, g, phi, rho_ref);
    const double r = static_cast<double>(d.size());
    double mean = 0.0;
    for (double v : d) mean += std::abs(v);
    mean /= r;
    double var = 0.0;
    for (double v : d) var += sq(std::abs(v) - mean);
    MonteCarloEstimate est;
    est.mean = mean;
    est.std_error = d.size() > 1 ? std::sqrt(var / (r - 1.0) / r) : 0.0;
    return est;
}

double block_density_l1(const Ensemble& ensemble, long ell, const GridProfile& rho_ref)
{
    if (ensemble.configs.empty()) throw std::invalid_argument("block density: empty ensemble");
    const long n = ensemble.configs.front().n();
    Values mean(static_cast<std::size_t>(n), 0.0);
    for (const auto& config : ensemble.configs)
    {
        if (config.n() != n) throw std::invalid_argument("block density: configurations differ in size");
        for (long x = 0; x < n; ++x) mean[x] += block_average(config, x, ell);
    }
    double l1 = 0.0;
    for (long x = 0; x < n; ++x)
        l1 += std::abs(mean[x] / static_cast<double>(ensemble.configs.size()) -
                       rho_ref.interpolate(static_cast<double>(x) / n));
    return l1 / n;
}

}  // namespace kcm
