#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle
{

int at(const Bits& eta, long z)
{
    const long n = static_cast<long>(eta.size());
    return eta[static_cast<std::size_t>(((z % n) + n) % n)];
}

int rate(const Bits& eta, long x, int m)
{
    int total = 0;
    for (long y = x - m + 1; y <= x; ++y)
    {
        int prod = 1;
        for (long z = y; z <= y + m; ++z)
            if (z != x && z != x + 1) prod *= at(eta, z);
        total += prod;
    }
    return total;
}

int rate_reversed(const Bits& eta, long x, int m)
{
    int total = 0;
    for (long y = x + m; y >= x + 1; --y)
    {
        int prod = 1;
        for (long z = y; z >= y - m; --z)
            if (z != x && z != x + 1) prod *= at(eta, z);
        total += prod;
    }
    return total;
}

double h(const Bits& eta, long x, int m)
{
    double first = 0.0;
    for (long y = -m + 1; y <= 0; ++y)
    {
        int prod = 1;
        for (long z = y; z <= y + m - 1; ++z) prod *= at(eta, x + z);
        first += prod;
    }
    double second = 0.0;
    for (long y = -m + 1; y <= -1; ++y)
    {
        int prod = 1;
        for (long z = y; z <= y + m; ++z)
            if (z != 0) prod *= at(eta, x + z);
        second += prod;
    }
    return first - second;
}

double g(const Bits& eta, long x, int m)
{
    const int d = at(eta, x) - at(eta, x + 1);
    return 0.5 * rate(eta, x, m) * d * d;
}

double bernoulli_mean(const std::function<double(const Bits&)>& f, int width, double alpha)
{
    double total = 0.0;
    for (long code = 0; code < (1L << width); ++code)
    {
        Bits w(static_cast<std::size_t>(width));
        double weight = 1.0;
        for (int i = 0; i < width; ++i)
        {
            w[i] = static_cast<int>((code >> i) & 1);
            weight *= w[i] ? alpha : 1.0 - alpha;
        }
        total += weight * f(w);
    }
    return total;
}

Matrix dense_generator(int n, int m, double speed)
{
    const long states = 1L << n;
    Matrix q(static_cast<std::size_t>(states), std::vector<double>(static_cast<std::size_t>(states), 0.0));
    for (long s = 0; s < states; ++s)
    {
        Bits eta(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) eta[i] = static_cast<int>((s >> i) & 1);
        for (long x = 0; x < n; ++x)
        {
            const long y = (x + 1) % n;
            if (eta[x] == eta[y]) continue;
            const int r = rate(eta, x, m);
            if (r == 0) continue;
            const long t = s ^ (1L << x) ^ (1L << y);
            q[s][t] += speed * r;
            q[s][s] -= speed * r;
        }
    }
    return q;
}

std::vector<double> uniformized_law(const Matrix& q, const std::vector<double>& p0, double t, double tol)
{
    const std::size_t d = q.size();
    double lam = 0.0;
    for (std::size_t i = 0; i < d; ++i) lam = std::max(lam, -q[i][i]);
    if (lam == 0.0) return p0;
    const double mu = lam * t;
    if (mu > 600.0) throw std::invalid_argument("uniformized_law: lambda t too large for direct Poisson weights");

    std::vector<double> v = p0, out(d, 0.0), next(d);
    double weight = std::exp(-mu);
    double mass = 0.0;
    for (long k = 0;; ++k)
    {
        for (std::size_t i = 0; i < d; ++i) out[i] += weight * v[i];
        mass += weight;
        if (1.0 - mass < tol && k > mu) break;
        // v <- v P with P = I + Q / lam.
        for (std::size_t j = 0; j < d; ++j) next[j] = v[j];
        for (std::size_t i = 0; i < d; ++i)
        {
            if (v[i] == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j)
                if (q[i][j] != 0.0) next[j] += v[i] * q[i][j] / lam;
        }
        v.swap(next);
        weight *= mu / static_cast<double>(k + 1);
        if (k > 100000) throw std::runtime_error("uniformized_law: no convergence");
    }
    return out;
}

double kl_bernoulli(const std::vector<double>& p, const std::vector<double>& q)
{
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
    {
        if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
        if (p[i] < 1.0) s += (1.0 - p[i]) * std::log((1.0 - p[i]) / (1.0 - q[i]));
    }
    return s;
}

double barenblatt(double t, double u, int m, double c)
{
    const double base = c - (m - 1.0) / (2.0 * m * (m + 1.0)) * u * u / std::pow(t, 2.0 / (m + 1.0));
    return base > 0.0 ? std::pow(t, -1.0 / (m + 1.0)) * std::pow(base, 1.0 / (m - 1.0)) : 0.0;
}

double bump_mass(long panels)
{
    const double h = 2.0 / static_cast<double>(panels);
    double s = 0.0;
    for (long i = 1; i < panels; ++i)
    {
        const double y = -1.0 + i * h;
        s += std::exp(-1.0 / (1.0 - y * y));
    }
    return s * h;
}

}  // namespace oracle
