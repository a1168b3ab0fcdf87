#include "kcm/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <thread>

namespace kcm
{

Configuration::Configuration(std::size_t n, std::uint8_t fill) : occupancy_(n, static_cast<std::uint8_t>(fill != 0))
{
    if (n == 0) throw std::invalid_argument("configuration: N must be positive");
}

Configuration::Configuration(std::vector<std::uint8_t> occupancy) : occupancy_(std::move(occupancy))
{
    if (occupancy_.empty()) throw std::invalid_argument("configuration: N must be positive");
    for (auto v : occupancy_)
        if (v > 1) throw std::invalid_argument("configuration: entries must be 0 or 1");
}

Configuration Configuration::from_string(std::string_view bits)
{
    std::vector<std::uint8_t> occ;
    occ.reserve(bits.size());
    for (char c : bits)
    {
        if (c == '0' || c == '1')
            occ.push_back(static_cast<std::uint8_t>(c - '0'));
        else
            throw std::invalid_argument("configuration: unexpected character '" + std::string(1, c) + "'");
    }
    return Configuration(std::move(occ));
}

Configuration Configuration::from_code(std::uint64_t code, std::size_t n)
{
    if (n > 64) throw std::invalid_argument("configuration: codes hold at most 64 sites");
    Configuration c(n);
    for (std::size_t x = 0; x < n; ++x) c.occupancy_[x] = static_cast<std::uint8_t>((code >> x) & 1U);
    return c;
}

void Configuration::swap_bond(long x) noexcept
{
    std::swap(occupancy_[wrap(x)], occupancy_[wrap(x + 1)]);
}

long Configuration::particle_count() const noexcept
{
    return static_cast<long>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

std::uint64_t Configuration::code() const
{
    if (size() > 64) throw std::logic_error("configuration: codes hold at most 64 sites");
    std::uint64_t c = 0;
    for (std::size_t x = 0; x < size(); ++x) c |= static_cast<std::uint64_t>(occupancy_[x]) << x;
    return c;
}

std::string Configuration::to_string() const
{
    std::string s(size(), '0');
    for (std::size_t x = 0; x < size(); ++x) s[x] = occupancy_[x] ? '1' : '0';
    return s;
}

void KCMParams::validate() const
{
    if (m < 2) throw std::invalid_argument("m must satisfy m >= 2 (got " + std::to_string(m) + ")");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1) (got " + std::to_string(alpha) + ")");
    if (n < 2L * m + 2)
        throw std::invalid_argument("N must satisfy N >= 2m+2 = " + std::to_string(2 * m + 2) + " (got " +
                                    std::to_string(n) + ")");
}

namespace
{
    auto torus_accessor(const Configuration& config, long x)
    {
        return [&config, x](int offset) { return config[x + offset]; };
    }
}  // namespace

int jump_rate(const Configuration& config, long x, int m)
{
    return detail::bond_rate(torus_accessor(config, x), m);
}

int bond_exchange_rate(const Configuration& config, long x, int m)
{
    if (config[x] == config[x + 1]) return 0;
    return jump_rate(config, x, m);
}

bool is_blocked(const Configuration& config, int m)
{
    for (long x = 0; x < config.n(); ++x)
        if (bond_exchange_rate(config, x, m) != 0) return false;
    return true;
}

double local_h(const Configuration& config, long x, int m)
{
    return detail::local_h(torus_accessor(config, x), m);
}

double local_g(const Configuration& config, long x, int m)
{
    return detail::local_g(torus_accessor(config, x), m);
}

double block_average(const Configuration& config, long x, long ell)
{
    if (ell < 0 || 2 * ell + 1 > config.n())
        throw std::invalid_argument("block_average: need 0 <= ell and 2*ell+1 <= N");
    long sum = 0;
    for (long y = x - ell; y <= x + ell; ++y) sum += config[y];
    return static_cast<double>(sum) / static_cast<double>(2 * ell + 1);
}

bool has_mobile_cluster(const Configuration& config, long x, long ell)
{
    for (long y = x - ell; y <= x + ell - 1; ++y)
        if (config[y] && config[y + 1]) return true;
    return false;
}

double LocalFunction::at(const Configuration& config, long x) const
{
    return eval([&config, x](int offset) { return config[x + offset]; });
}

LocalFunction occupation_function()
{
    return {0, 0, [](const std::function<int(int)>& eta) { return static_cast<double>(eta(0)); }, "eta0"};
}

LocalFunction h_function(int m)
{
    return {-m - 1, m + 1, [m](const std::function<int(int)>& eta) { return detail::local_h(eta, m); }, "h"};
}

LocalFunction g_function(int m)
{
    return {-m - 1, m + 1, [m](const std::function<int(int)>& eta) { return detail::local_g(eta, m); }, "g"};
}

LocalFunction pair_function()
{
    return {0, 1, [](const std::function<int(int)>& eta) { return static_cast<double>(eta(0) * eta(1)); }, "pair"};
}

// ---------------------------------------------------------------------------

long GeneratorMatrix::entry(std::uint32_t from, std::uint32_t to) const
{
    if (from == to) return diagonal.at(from);
    for (const auto& [target, rate] : transitions.at(from))
        if (target == to) return rate;
    return 0;
}

long GeneratorMatrix::row_sum(std::uint32_t from) const
{
    long s = diagonal.at(from);
    for (const auto& tr : transitions.at(from)) s += tr.second;
    return s;
}

GeneratorMatrix build_generator_matrix(const KCMParams& params)
{
    params.validate();
    if (params.n > kMaxGeneratorSites)
        throw std::invalid_argument("build_generator_matrix: N must be <= " + std::to_string(kMaxGeneratorSites));

    GeneratorMatrix q;
    q.n = params.n;
    const std::uint32_t dim = 1U << params.n;
    q.transitions.resize(dim);
    q.diagonal.assign(dim, 0);
    for (std::uint32_t s = 0; s < dim; ++s)
    {
        const auto eta = Configuration::from_code(s, static_cast<std::size_t>(params.n));
        long out = 0;
        for (long x = 0; x < params.n; ++x)
        {
            const int r = bond_exchange_rate(eta, x, params.m);
            if (r == 0) continue;
            auto next = eta;
            next.swap_bond(x);
            q.transitions[s].emplace_back(static_cast<std::uint32_t>(next.code()), r);
            out += r;
        }
        q.diagonal[s] = -out;
    }
    return q;
}

// ---------------------------------------------------------------------------

namespace
{
    /// Fenwick tree over the integer bond rates; supports proportional selection.
    class RateTree
    {
    public:
        explicit RateTree(std::size_t n) : tree_(n + 1, 0), values_(n, 0)
        {
            top_ = 1;
            while (top_ * 2 <= n) top_ *= 2;
        }

        void set(std::size_t i, long value)
        {
            const long delta = value - values_[i];
            if (delta == 0) return;
            values_[i] = value;
            total_ += delta;
            for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += delta;
        }

        [[nodiscard]] long total() const noexcept { return total_; }

        /// Smallest index i with prefix(i+1) > target, for 0 <= target < total.
        [[nodiscard]] std::size_t find(long target) const
        {
            std::size_t pos = 0;
            for (std::size_t step = top_; step > 0; step >>= 1)
            {
                const std::size_t next = pos + step;
                if (next < tree_.size() && tree_[next] <= target)
                {
                    pos = next;
                    target -= tree_[next];
                }
            }
            return pos;
        }

    private:
        std::vector<long> tree_;
        std::vector<long> values_;
        std::size_t top_ = 1;
        long total_ = 0;
    };
}  // namespace

TrajectoryRecord simulate(const Configuration& initial, const KCMParams& params, double t_end,
                          std::span<const double> record_at)
{
    params.validate();
    if (initial.n() != params.n) throw std::invalid_argument("simulate: configuration size differs from N");
    if (!(t_end >= 0.0)) throw std::invalid_argument("simulate: t_end must be >= 0");
    for (std::size_t i = 0; i < record_at.size(); ++i)
    {
        if (record_at[i] < 0.0 || record_at[i] > t_end)
            throw std::invalid_argument("simulate: record times must lie in [0, t_end]");
        if (i > 0 && !(record_at[i] > record_at[i - 1]))
            throw std::invalid_argument("simulate: record times must be strictly increasing");
    }

    TrajectoryRecord rec;
    rec.seed = params.seed;
    rec.macro_times.assign(record_at.begin(), record_at.end());
    rec.snapshots.reserve(record_at.size());

    Configuration eta = initial;
    const long n = params.n;
    const int m = params.m;
    const double scale = static_cast<double>(n) * static_cast<double>(n);

    RateTree rates(static_cast<std::size_t>(n));
    for (long x = 0; x < n; ++x) rates.set(static_cast<std::size_t>(x), bond_exchange_rate(eta, x, m));

    std::mt19937_64 rng(params.seed);
    std::exponential_distribution<double> waiting(1.0);

    double t = 0.0;
    std::size_t next_record = 0;
    while (true)
    {
        const long total = rates.total();
        double t_next = std::numeric_limits<double>::infinity();
        if (total > 0) t_next = t + waiting(rng) / (static_cast<double>(total) * scale);
        else if (!rec.frozen && t < t_end)
        {
            rec.frozen = true;
            rec.frozen_at = t;
        }

        while (next_record < record_at.size() && record_at[next_record] < t_next)
        {
            rec.snapshots.push_back(eta);
            ++next_record;
        }
        if (t_next > t_end) break;

        std::uniform_int_distribution<long> pick(0, total - 1);
        const auto bond = static_cast<long>(rates.find(pick(rng)));
        eta.swap_bond(bond);
        ++rec.jump_count;
        t = t_next;
        // Bond x depends on sites x-m+1 .. x+m; only those touching bond..bond+1 change.
        for (long x = bond - m; x <= bond + m; ++x)
            rates.set(eta.wrap(x), bond_exchange_rate(eta, x, m));
    }
    if (rates.total() == 0 && !rec.frozen)
    {
        rec.frozen = true;
        rec.frozen_at = t;
    }
    return rec;
}

std::vector<TrajectoryRecord> simulate_ensemble(const std::function<Configuration(std::uint64_t)>& make_initial,
                                                const KCMParams& params, double t_end,
                                                std::span<const double> record_at, std::size_t replicas,
                                                std::size_t threads)
{
    if (replicas == 0) throw std::invalid_argument("simulate_ensemble: replicas must be positive");
    std::vector<TrajectoryRecord> out(replicas);
    const auto run = [&](std::size_t r) {
        KCMParams p = params;
        p.seed = replica_seed(params.seed, r);
        out[r] = simulate(make_initial(r), p, t_end, record_at);
    };

    threads = std::max<std::size_t>(1, std::min(threads, replicas));
    if (threads == 1)
    {
        for (std::size_t r = 0; r < replicas; ++r) run(r);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w)
    {
        pool.emplace_back([&, w] {
            try
            {
                for (std::size_t r = w; r < replicas; r += threads) run(r);
            }
            catch (...)
            {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

}  // namespace kcm
