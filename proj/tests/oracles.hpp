#pragma once

// Reference computations written straight from the model definitions. They share
// no code with the library so that agreement is evidence, not tautology.

#include <cstdint>
#include <functional>
#include <vector>

namespace oracle
{

using Bits = std::vector<int>;

/// eta(z) with periodic wrap.
int at(const Bits& eta, long z);

/// r_{x,x+1} = sum_{y=x-m+1}^{x} prod_{z=y, z not in {x,x+1}}^{y+m} eta(z).
int rate(const Bits& eta, long x, int m);
/// Same sum, read from the right: the rate of the reversed bond (x+1, x) on the mirrored torus.
int rate_reversed(const Bits& eta, long x, int m);

/// tau_x h and tau_x g from their displayed definitions.
double h(const Bits& eta, long x, int m);
double g(const Bits& eta, long x, int m);

/// E_alpha[f] over all 2^w windows, f seeing a window of width w centred so that offset `lo` is bit 0.
double bernoulli_mean(const std::function<double(const Bits&)>& f, int width, double alpha);

/// Dense generator of N^2 L_N on {0,1}^N, state index = sum eta(x) 2^x.
using Matrix = std::vector<std::vector<double>>;
Matrix dense_generator(int n, int m, double speed);

/// p0 exp(t Q) by uniformisation, truncated when the Poisson tail drops below tol.
std::vector<double> uniformized_law(const Matrix& q, const std::vector<double>& p0, double t, double tol = 1e-15);

/// Direct Bernoulli KL divergence sum_x [p log(p/q) + (1-p) log((1-p)/(1-q))].
double kl_bernoulli(const std::vector<double>& p, const std::vector<double>& q);

/// Closed-form Barenblatt profile on the line.
double barenblatt(double t, double u, int m, double c);

/// int_{-1}^{1} exp(-1/(1-y^2)) dy by the composite trapezoid rule on n panels.
double bump_mass(long panels);

}  // namespace oracle
