#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kcm
{

/// Occupancy vector on the discrete torus Z/NZ. All site arithmetic wraps.
class Configuration
{
public:
    Configuration() = default;
    explicit Configuration(std::size_t n, std::uint8_t fill = 0);
    explicit Configuration(std::vector<std::uint8_t> occupancy);

    /// Parses a string of '0'/'1' characters. Throws std::invalid_argument otherwise.
    static Configuration from_string(std::string_view bits);
    /// Bit x of `code` is the occupancy of site x.
    static Configuration from_code(std::uint64_t code, std::size_t n);

    [[nodiscard]] std::size_t size() const noexcept { return occupancy_.size(); }
    [[nodiscard]] long n() const noexcept { return static_cast<long>(occupancy_.size()); }

    [[nodiscard]] int operator[](long x) const noexcept { return occupancy_[wrap(x)]; }
    void set(long x, int value) { occupancy_[wrap(x)] = static_cast<std::uint8_t>(value != 0); }
    /// Exchanges the occupancies of x and x+1.
    void swap_bond(long x) noexcept;

    [[nodiscard]] std::size_t wrap(long x) const noexcept
    {
        const long n = static_cast<long>(occupancy_.size());
        long r = x % n;
        return static_cast<std::size_t>(r < 0 ? r + n : r);
    }

    [[nodiscard]] long particle_count() const noexcept;
    [[nodiscard]] std::uint64_t code() const;
    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::span<const std::uint8_t> occupancy() const noexcept { return occupancy_; }

    friend bool operator==(const Configuration&, const Configuration&) = default;

private:
    std::vector<std::uint8_t> occupancy_;
};

struct KCMParams
{
    long n = 0;
    int m = 2;
    double alpha = 0.5;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument naming the violated constraint.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Local observables. Each is written against an accessor `eta(offset)` so the
// same code serves torus configurations and enumerated windows.

namespace detail
{
    template <class Eta>
    int bond_rate(const Eta& eta, int m)
    {
        // r_{0,1} = sum_{y=-m+1}^{0} prod_{z=y, z not in {0,1}}^{y+m} eta(z)
        int rate = 0;
        for (int y = -m + 1; y <= 0; ++y)
        {
            int prod = 1;
            for (int z = y; z <= y + m && prod != 0; ++z)
            {
                if (z == 0 || z == 1) continue;
                prod *= eta(z);
            }
            rate += prod;
        }
        return rate;
    }

    template <class Eta>
    double local_h(const Eta& eta, int m)
    {
        int plus = 0;
        for (int y = -m + 1; y <= 0; ++y)
        {
            int prod = 1;
            for (int z = y; z <= y + m - 1 && prod != 0; ++z) prod *= eta(z);
            plus += prod;
        }
        int minus = 0;
        for (int y = -m + 1; y <= -1; ++y)
        {
            int prod = 1;
            for (int z = y; z <= y + m && prod != 0; ++z)
            {
                if (z == 0) continue;
                prod *= eta(z);
            }
            minus += prod;
        }
        return static_cast<double>(plus - minus);
    }

    template <class Eta>
    double local_g(const Eta& eta, int m)
    {
        const int d = eta(0) - eta(1);
        return 0.5 * bond_rate(eta, m) * d * d;
    }
}  // namespace detail

/// Kinetic constraint r_{x,x+1}(eta); integer in [0, m].
int jump_rate(const Configuration& config, long x, int m);
/// Rate of the exchange across bond (x, x+1): r_{x,x+1} when the bond carries one particle, else 0.
int bond_exchange_rate(const Configuration& config, long x, int m);
bool is_blocked(const Configuration& config, int m);

double local_h(const Configuration& config, long x, int m);
double local_g(const Configuration& config, long x, int m);

/// eta^(ell)(x), the average over the 2*ell+1 sites centred at x.
double block_average(const Configuration& config, long x, long ell);
/// True iff two neighbouring particles sit in {x-ell, ..., x+ell}.
bool has_mobile_cluster(const Configuration& config, long x, long ell);

/// A local function with support {lo, ..., hi} relative to the site it is shifted to.
struct LocalFunction
{
    int lo = 0;
    int hi = 0;
    std::function<double(const std::function<int(int)>&)> eval;
    std::string name;

    [[nodiscard]] int width() const noexcept { return hi - lo + 1; }
    /// tau_x phi(eta).
    [[nodiscard]] double at(const Configuration& config, long x) const;
};

LocalFunction occupation_function();
/// h with the support radius m+1 used throughout.
LocalFunction h_function(int m);
LocalFunction g_function(int m);
/// eta(0) * eta(1); handy non-linear test observable.
LocalFunction pair_function();

// ---------------------------------------------------------------------------
// Exact generator on the full state space (small N only).

/// Sparse rate matrix of L_N over {0,1}^N; state index = Configuration::code().
struct GeneratorMatrix
{
    long n = 0;
    std::vector<std::vector<std::pair<std::uint32_t, int>>> transitions;  // (target, rate), off-diagonal
    std::vector<long> diagonal;                                           // minus the row's total rate

    [[nodiscard]] std::size_t dimension() const noexcept { return diagonal.size(); }
    /// Q(from, to), including the diagonal.
    [[nodiscard]] long entry(std::uint32_t from, std::uint32_t to) const;
    [[nodiscard]] long row_sum(std::uint32_t from) const;
};

inline constexpr long kMaxGeneratorSites = 12;

/// Throws std::invalid_argument for n > kMaxGeneratorSites.
GeneratorMatrix build_generator_matrix(const KCMParams& params);

// ---------------------------------------------------------------------------
// Event-driven simulation of the chain accelerated by N^2.

struct TrajectoryRecord
{
    std::vector<double> macro_times;
    std::vector<Configuration> snapshots;
    std::uint64_t jump_count = 0;
    std::uint64_t seed = 0;
    bool frozen = false;  ///< total rate hit zero before t_end
    double frozen_at = -1.0;
};

/// Exact-in-law simulation up to macroscopic time t_end. Snapshots are the
/// state at each requested time (the chain is piecewise constant).
TrajectoryRecord simulate(const Configuration& initial, const KCMParams& params, double t_end,
                          std::span<const double> record_at);

/// Seed used by replica r.
inline std::uint64_t replica_seed(std::uint64_t seed, std::uint64_t replica) noexcept { return seed ^ replica; }

/// Runs `replicas` independent trajectories; replica r draws its initial state
/// from make_initial(r) and simulates with replica_seed(params.seed, r). Output
/// order is replica order regardless of `threads`.
std::vector<TrajectoryRecord> simulate_ensemble(const std::function<Configuration(std::uint64_t)>& make_initial,
                                                const KCMParams& params, double t_end,
                                                std::span<const double> record_at, std::size_t replicas,
                                                std::size_t threads);

}  // namespace kcm
