#include "kcm/experiment.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <thread>

#include "kcm/diagnostics.hpp"
#include "kcm/lattice.hpp"
#include "kcm/product_measures.hpp"

namespace kcm
{

namespace
{
    std::atomic<bool> g_stop{false};

    std::string format_double(double v)
    {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::string trim(const std::string& s)
    {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    template <typename T>
    T parse_number(const std::string& key, const std::string& text, const char* what)
    {
        const std::string s = trim(text);
        T value{};
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
            throw ValidationError(key + ": expected " + what + ", got '" + text + "'");
        return value;
    }

    double parse_double(const std::string& key, const std::string& s) { return parse_number<double>(key, s, "a number"); }
    long parse_long(const std::string& key, const std::string& s) { return parse_number<long>(key, s, "an integer"); }

    bool parse_bool(const std::string& key, const std::string& text)
    {
        const std::string s = trim(text);
        if (s == "true" || s == "1" || s == "yes") return true;
        if (s == "false" || s == "0" || s == "no") return false;
        throw ValidationError(key + ": expected true or false, got '" + text + "'");
    }

    std::vector<long> parse_list(const std::string& key, const std::string& text)
    {
        std::vector<long> out;
        std::stringstream ss(text);
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(parse_long(key, item));
        if (out.empty()) throw ValidationError(key + ": expected a comma separated list of integers");
        return out;
    }

    std::string join(const std::vector<long>& v)
    {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
        return s;
    }

    SpecKey text_key(std::string key, std::string help, std::string ExperimentSpec::*field)
    {
        return {std::move(key), std::move(help), [field](const ExperimentSpec& s) { return s.*field; },
                [field](ExperimentSpec& s, const std::string& v) { s.*field = trim(v); }};
    }

    SpecKey real_key(std::string key, std::string help, double ExperimentSpec::*field)
    {
        return {key, std::move(help), [field](const ExperimentSpec& s) { return format_double(s.*field); },
                [field, key](ExperimentSpec& s, const std::string& v) { s.*field = parse_double(key, v); }};
    }

    SpecKey long_key(std::string key, std::string help, long ExperimentSpec::*field)
    {
        return {key, std::move(help), [field](const ExperimentSpec& s) { return std::to_string(s.*field); },
                [field, key](ExperimentSpec& s, const std::string& v) { s.*field = parse_long(key, v); }};
    }

    const std::map<std::string, std::string>& short_flags()
    {
        static const std::map<std::string, std::string> flags{
            {"model.m", "--m"},          {"lattice.n", "--n"},        {"grid.cells", "--grid"},
            {"time.t", "--t"},           {"reg.eps", "--eps"},        {"reg.eps_rule", "--eps-rule"},
            {"run.seed", "--seed"},      {"run.replicas", "--replicas"}, {"run.threads", "--threads"},
            {"output.dir", "--out"},     {"output.format", "--format"},
        };
        return flags;
    }

    const std::vector<std::string>& commands()
    {
        static const std::vector<std::string> c{"simulate",     "solve",       "regularize",
                                                "hydro-compare", "entropy-scan", "diagnostics"};
        return c;
    }

    void require(bool ok, const std::string& key, const std::string& constraint, const std::string& got)
    {
        if (!ok) throw ValidationError(key + ": " + constraint + " (got " + got + ")");
    }

    struct HelpRequested
    {
        std::string text;
    };

    std::size_t thread_count(const ExperimentSpec& spec)
    {
        if (spec.threads > 0) return static_cast<std::size_t>(spec.threads);
        return std::max(1U, std::thread::hardware_concurrency());
    }

    std::uint64_t initial_seed(std::uint64_t seed, std::uint64_t replica)
    {
        return replica_seed(seed, replica) + 0x9e3779b97f4a7c15ULL;
    }

    Ensemble run_ensemble(const ExperimentSpec& spec, long n, const std::function<double(double)>& rho_ini,
                          std::vector<TrajectoryRecord>* records = nullptr)
    {
        KCMParams params;
        params.n = n;
        params.m = spec.m;
        params.alpha = spec.alpha;
        params.seed = spec.seed;
        const auto profile = LatticeProfile::from_function(static_cast<std::size_t>(n), rho_ini);
        const std::vector<double> at{spec.t};
        auto runs = simulate_ensemble(
            [&](std::uint64_t r) { return sample_product(profile, initial_seed(spec.seed, r)); }, params, spec.t, at,
            static_cast<std::size_t>(spec.replicas), thread_count(spec));
        Ensemble e;
        e.time = spec.t;
        for (auto& r : runs) e.configs.push_back(r.snapshots.back());
        if (records) *records = std::move(runs);
        return e;
    }

    GridProfile unregularized_reference(const ExperimentSpec& spec, const std::function<double(double)>& rho_ini)
    {
        const auto grid = GridProfile::sample(static_cast<std::size_t>(spec.cells), rho_ini);
        if (spec.t == 0.0) return grid;
        SolverConfig cfg;
        cfg.m = spec.m;
        cfg.horizon = spec.t;
        cfg.snapshot_times = {spec.t};
        return solve_pme(grid, cfg).snapshots.back();
    }

    void write_file(const std::filesystem::path& path, const std::string& bytes)
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw std::runtime_error("write failed for " + path.string());
    }

    std::string read_file(const std::filesystem::path& path)
    {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw std::runtime_error("cannot read " + path.string());
        std::ostringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    nlohmann::ordered_json cell_json(const Cell& c)
    {
        if (const auto* i = std::get_if<long long>(&c)) return *i;
        if (const auto* d = std::get_if<double>(&c))
        {
            if (std::isfinite(*d)) return *d;
            return std::isnan(*d) ? nlohmann::ordered_json("nan") : nlohmann::ordered_json(*d > 0 ? "inf" : "-inf");
        }
        return std::get<std::string>(c);
    }

    std::string cell_text(const Cell& c)
    {
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        if (const auto* d = std::get_if<double>(&c)) return format_double(*d);
        return std::get<std::string>(c);
    }

    Cell entropy_cell(const Entropy& h)
    {
        if (h.is_infinite()) return std::string("inf");
        return h.value();
    }
}  // namespace

// ---------------------------------------------------------------------------

const std::vector<SpecKey>& spec_keys()
{
    static const std::vector<SpecKey> keys = [] {
        std::vector<SpecKey> k;
        k.push_back(text_key("command", "subcommand", &ExperimentSpec::command));
        k.push_back({"model.m", "constraint order m >= 2", [](const ExperimentSpec& s) { return std::to_string(s.m); },
                     [](ExperimentSpec& s, const std::string& v) {
                         const long m = parse_long("model.m", v);
                         require(m > -1000 && m < 1000, "model.m", "out of range", std::to_string(m));
                         s.m = static_cast<int>(m);
                     }});
        k.push_back(real_key("model.alpha", "reference density of lambda, in (0,1)", &ExperimentSpec::alpha));
        k.push_back(long_key("lattice.n", "number of sites N", &ExperimentSpec::n));
        k.push_back({"lattice.n_list", "comma separated N scan",
                     [](const ExperimentSpec& s) { return join(s.n_list); },
                     [](ExperimentSpec& s, const std::string& v) { s.n_list = parse_list("lattice.n_list", v); }});
        k.push_back(long_key("grid.cells", "PDE grid cells M", &ExperimentSpec::cells));
        k.push_back(real_key("time.t", "macroscopic end time", &ExperimentSpec::t));
        k.push_back(long_key("time.snapshots", "number of snapshot intervals", &ExperimentSpec::snapshots));
        k.push_back(text_key("reg.eps_rule", "schedule | fixed | none", &ExperimentSpec::eps_rule));
        k.push_back(real_key("reg.eps", "eps for the fixed rule", &ExperimentSpec::eps));
        k.push_back(real_key("reg.exponent", "schedule exponent, 0 = 1/(7(m-1))", &ExperimentSpec::eps_exponent));
        k.push_back(text_key("init.kind", "barenblatt | constant | file", &ExperimentSpec::init));
        k.push_back(real_key("init.c", "Barenblatt constant C", &ExperimentSpec::bar_c));
        k.push_back(real_key("init.t0", "Barenblatt start time", &ExperimentSpec::bar_t0));
        k.push_back(real_key("init.center", "Barenblatt centre", &ExperimentSpec::bar_center));
        k.push_back(real_key("init.value", "constant density", &ExperimentSpec::init_value));
        k.push_back(text_key("init.file", "file of cell-centred density values", &ExperimentSpec::init_file));
        k.push_back({"run.seed", "master seed", [](const ExperimentSpec& s) { return std::to_string(s.seed); },
                     [](ExperimentSpec& s, const std::string& v) {
                         s.seed = parse_number<std::uint64_t>("run.seed", v, "an unsigned integer");
                     }});
        k.push_back(long_key("run.replicas", "number of replicas", &ExperimentSpec::replicas));
        k.push_back(long_key("run.threads", "worker threads, 0 = all cores", &ExperimentSpec::threads));
        k.push_back(long_key("diag.ell", "block half-width", &ExperimentSpec::ell));
        k.push_back(real_key("diag.delta", "interface threshold", &ExperimentSpec::delta));
        k.push_back(text_key("output.dir", "output directory", &ExperimentSpec::out));
        k.push_back(text_key("output.format", "csv | json", &ExperimentSpec::format));
        k.push_back({"output.overwrite", "replace a conflicting manifest",
                     [](const ExperimentSpec& s) { return std::string(s.overwrite ? "true" : "false"); },
                     [](ExperimentSpec& s, const std::string& v) { s.overwrite = parse_bool("output.overwrite", v); }});
        return k;
    }();
    return keys;
}

void validate(const ExperimentSpec& s)
{
    const auto& c = commands();
    require(std::find(c.begin(), c.end(), s.command) != c.end(), "command",
            "must be one of simulate, solve, regularize, hydro-compare, entropy-scan, diagnostics", s.command);
    require(s.m >= 2, "model.m", "must be >= 2", std::to_string(s.m));
    require(s.m <= 10, "model.m", "must be <= 10 (local averages enumerate 2^(2m+3) windows)", std::to_string(s.m));
    require(s.alpha > 0.0 && s.alpha < 1.0, "model.alpha", "must lie in (0,1)", format_double(s.alpha));
    const long n_min = 2L * s.m + 2;
    require(s.n >= n_min, "lattice.n", "must be >= 2m+2 = " + std::to_string(n_min), std::to_string(s.n));
    require(!s.n_list.empty(), "lattice.n_list", "must not be empty", "");
    for (std::size_t i = 0; i < s.n_list.size(); ++i)
    {
        require(s.n_list[i] >= n_min, "lattice.n_list", "entries must be >= 2m+2 = " + std::to_string(n_min),
                std::to_string(s.n_list[i]));
        if (i > 0)
            require(s.n_list[i] > s.n_list[i - 1], "lattice.n_list", "must be strictly increasing", join(s.n_list));
    }
    require(s.cells >= 16, "grid.cells", "must be >= 16", std::to_string(s.cells));
    require(std::isfinite(s.t) && s.t >= 0.0, "time.t", "must be >= 0", format_double(s.t));
    require(s.snapshots >= 1, "time.snapshots", "must be >= 1", std::to_string(s.snapshots));
    require(s.eps_rule == "schedule" || s.eps_rule == "fixed" || s.eps_rule == "none", "reg.eps_rule",
            "must be schedule, fixed or none", s.eps_rule);
    if (s.eps_rule == "fixed")
        require(s.eps > 0.0 && s.eps < 0.5, "reg.eps", "must lie in (0, 1/2)", format_double(s.eps));
    require(s.eps_exponent >= 0.0, "reg.exponent", "must be >= 0", format_double(s.eps_exponent));
    if (s.init == "barenblatt")
    {
        require(s.bar_c > 0.0, "init.c", "must be > 0", format_double(s.bar_c));
        require(s.bar_t0 > 0.0, "init.t0", "must be > 0", format_double(s.bar_t0));
        const double r = barenblatt_radius(s.bar_t0, s.m, s.bar_c);
        require(r < 0.5, "init.c", "Barenblatt support at init.t0 must fit the torus (radius < 1/2)",
                "radius " + format_double(r));
        require(barenblatt(s.bar_t0, 0.0, s.m, s.bar_c) <= 1.0, "init.c", "Barenblatt peak must be <= 1",
                format_double(barenblatt(s.bar_t0, 0.0, s.m, s.bar_c)));
    }
    else if (s.init == "constant")
        require(s.init_value >= 0.0 && s.init_value <= 1.0, "init.value", "must lie in [0,1]",
                format_double(s.init_value));
    else if (s.init == "file")
        require(!s.init_file.empty() && std::filesystem::is_regular_file(s.init_file), "init.file",
                "must name an existing file", s.init_file);
    else
        require(false, "init.kind", "must be barenblatt, constant or file", s.init);
    require(s.replicas >= 1, "run.replicas", "must be >= 1", std::to_string(s.replicas));
    require(s.threads >= 0, "run.threads", "must be >= 0", std::to_string(s.threads));
    require(s.ell >= 0, "diag.ell", "must be >= 0", std::to_string(s.ell));
    const long smallest = s.command == "hydro-compare" ? s.n_list.front() : s.n;
    require(2 * s.ell + 1 <= smallest, "diag.ell", "block 2 ell + 1 must fit in N = " + std::to_string(smallest),
            std::to_string(s.ell));
    require(s.delta > 0.0 && s.delta < 1.0, "diag.delta", "must lie in (0,1)", format_double(s.delta));
    require(!s.out.empty(), "output.dir", "must not be empty", "''");
    require(s.format == "csv" || s.format == "json", "output.format", "must be csv or json", s.format);
    if (s.command == "regularize" || s.command == "diagnostics")
        require(s.eps_rule != "none", "reg.eps_rule", s.command + " needs a regularisation (schedule or fixed)",
                s.eps_rule);
    if (s.command == "entropy-scan")
        require(s.eps_rule == "schedule", "reg.eps_rule", "entropy-scan follows the schedule", s.eps_rule);
}

void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& origin)
{
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line))
    {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto& keys = spec_keys();
        const auto it = std::find_if(keys.begin(), keys.end(), [&](const SpecKey& k) { return k.key == key; });
        if (it == keys.end())
            throw ValidationError(origin + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        it->set(spec, value);
    }
}

std::string serialize_spec(const ExperimentSpec& spec)
{
    std::string out;
    for (const auto& k : spec_keys()) out += k.key + " = " + k.get(spec) + "\n";
    return out;
}

ExperimentSpec parse_config_text(const std::string& text)
{
    ExperimentSpec spec;
    apply_config_text(spec, text);
    validate(spec);
    return spec;
}

ExperimentSpec parse_spec(int argc, const char* const* argv)
{
    CLI::App app{"Kinetically constrained exclusion process and porous medium equation experiments", "kcm_cli"};
    app.require_subcommand(1);
    const std::map<std::string, std::string> about{
        {"simulate", "replica trajectories from a product initial law"},
        {"solve", "porous medium equation on the grid"},
        {"regularize", "truncated and mollified initial profile"},
        {"hydro-compare", "particle ensembles against the PDE over an N scan"},
        {"entropy-scan", "initial relative entropy over an N scan"},
        {"diagnostics", "norm bounds, lambda identities, interfaces, site labels"}};
    for (const auto& c : commands()) app.add_subcommand(c, about.at(c))->fallthrough();

    std::string config_path;
    app.add_option("--config", config_path, "key = value file read before the flags");

    std::map<std::string, std::string> given;
    std::map<std::string, CLI::Option*> options;
    for (const auto& k : spec_keys())
    {
        if (k.key == "command") continue;
        std::string names = "--" + k.key;
        if (const auto it = short_flags().find(k.key); it != short_flags().end()) names = it->second + "," + names;
        options[k.key] = app.add_option(names, given[k.key], k.help);
    }
    bool overwrite_flag = false;
    auto* overwrite = app.add_flag("--overwrite", overwrite_flag, "replace a conflicting manifest");
    options["reg.eps"]->excludes(options["reg.eps_rule"]);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp&)
    {
        throw HelpRequested{app.help()};
    }
    catch (const CLI::ParseError& e)
    {
        throw ValidationError(e.what());
    }

    ExperimentSpec spec;
    if (!config_path.empty())
    {
        std::string text;
        try
        {
            text = read_file(config_path);
        }
        catch (const std::runtime_error& e)
        {
            throw ValidationError(std::string("--config: ") + e.what());
        }
        apply_config_text(spec, text, config_path);
    }
    spec.command = app.get_subcommands().front()->get_name();
    for (const auto& k : spec_keys())
    {
        if (k.key == "command" || options[k.key]->count() == 0) continue;
        k.set(spec, given[k.key]);
    }
    if (options["reg.eps"]->count() > 0) spec.eps_rule = "fixed";
    if (overwrite->count() > 0) spec.overwrite = true;
    validate(spec);
    return spec;
}

// ---------------------------------------------------------------------------

void Table::add(std::vector<Cell> row)
{
    if (row.size() != columns.size()) throw std::logic_error("table " + name + ": row width mismatch");
    rows.push_back(std::move(row));
}

const Table& RunResult::table(const std::string& name) const
{
    for (const auto& t : tables)
        if (t.name == name) return t;
    throw std::out_of_range("no table " + name);
}

void request_stop() noexcept { g_stop = true; }
void clear_stop() noexcept { g_stop = false; }

std::function<double(double)> initial_profile(const ExperimentSpec& spec)
{
    if (spec.init == "barenblatt")
    {
        BarenblattSpec b;
        b.m = spec.m;
        b.c = spec.bar_c;
        b.t0 = spec.bar_t0;
        b.center = spec.bar_center;
        b.check_fits(b.t0);
        return [b](double u) { return b.at(b.t0, u); };
    }
    if (spec.init == "constant")
    {
        const double v = spec.init_value;
        return [v](double) { return v; };
    }
    std::istringstream in(read_file(spec.init_file));
    std::vector<double> values;
    std::string token;
    while (in >> token) values.push_back(parse_double("init.file", token));
    if (values.size() < 2) throw ValidationError("init.file: needs at least two density values");
    GridProfile grid(std::move(values));
    for (double v : grid.values)
        if (!(v >= 0.0 && v <= 1.0)) throw ValidationError("init.file: densities must lie in [0,1]");
    return [grid](double u) { return grid.interpolate(u); };
}

double resolve_eps(const ExperimentSpec& spec, long n)
{
    if (spec.eps_rule == "none") return 0.0;
    if (spec.eps_rule == "fixed") return spec.eps;
    RegularizationSchedule schedule{spec.m, spec.eps_exponent};
    try
    {
        return schedule.eps(n);
    }
    catch (const std::invalid_argument& e)
    {
        throw ValidationError(std::string("reg.eps_rule: ") + e.what());
    }
}

RunResult run_simulate(const ExperimentSpec& spec)
{
    const auto rho_ini = initial_profile(spec);
    KCMParams params;
    params.n = spec.n;
    params.m = spec.m;
    params.alpha = spec.alpha;
    params.seed = spec.seed;
    params.validate();
    const auto profile = LatticeProfile::from_function(static_cast<std::size_t>(spec.n), rho_ini);
    const auto times = uniform_times(spec.t, static_cast<std::size_t>(spec.snapshots));
    const auto runs = simulate_ensemble(
        [&](std::uint64_t r) { return sample_product(profile, initial_seed(spec.seed, r)); }, params, spec.t, times,
        static_cast<std::size_t>(spec.replicas), thread_count(spec));

    RunResult result;
    Table density{"density", {"time", "x", "u", "mean_occupation", "mean_block_density"}, {}};
    const double r = static_cast<double>(runs.size());
    for (std::size_t k = 0; k < times.size(); ++k)
    {
        for (long x = 0; x < spec.n; ++x)
        {
            double occ = 0.0, block = 0.0;
            for (const auto& run : runs)
            {
                occ += run.snapshots[k][x];
                block += block_average(run.snapshots[k], x, spec.ell);
            }
            density.add({times[k], static_cast<long long>(x), static_cast<double>(x) / spec.n, occ / r, block / r});
        }
    }
    Table trajectories{"trajectories", {"replica", "time", "configuration"}, {}};
    for (std::size_t i = 0; i < runs.size(); ++i)
        for (std::size_t k = 0; k < times.size(); ++k)
            trajectories.add({static_cast<long long>(i), times[k], runs[i].snapshots[k].to_string()});
    Table replicas{"replicas", {"replica", "seed", "jumps", "frozen", "frozen_at"}, {}};
    for (std::size_t i = 0; i < runs.size(); ++i)
        replicas.add({static_cast<long long>(i), std::to_string(runs[i].seed),
                      static_cast<long long>(runs[i].jump_count), static_cast<long long>(runs[i].frozen),
                      runs[i].frozen_at});
    result.tables.push_back(std::move(density));
    result.tables.push_back(std::move(trajectories));
    result.tables.push_back(std::move(replicas));
    return result;
}

RunResult run_solve(const ExperimentSpec& spec)
{
    const auto rho_ini = initial_profile(spec);
    auto grid = GridProfile::sample(static_cast<std::size_t>(spec.cells), rho_ini);
    const double eps = resolve_eps(spec, spec.n);
    if (eps > 0.0) grid = regularize_initial(grid, eps, spec.m);
    SolverConfig cfg;
    cfg.m = spec.m;
    cfg.horizon = spec.t;
    cfg.snapshot_times = uniform_times(spec.t, static_cast<std::size_t>(spec.snapshots));
    const auto field = solve_pme(grid, cfg);

    RunResult result;
    Table pme{"pme", {"time", "u", "rho"}, {}};
    for (std::size_t k = 0; k < field.times.size(); ++k)
        for (std::size_t j = 0; j < field.snapshots[k].cells(); ++j)
            pme.add({field.times[k], field.snapshots[k].center(j), field.snapshots[k].values[j]});
    Table summary{"summary", {"eps", "steps", "mass_initial", "mass_final", "max_final"}, {}};
    summary.add({eps, static_cast<long long>(field.steps), field.snapshots.front().integral(),
                 field.snapshots.back().integral(), field.snapshots.back().max()});
    result.tables.push_back(std::move(pme));
    result.tables.push_back(std::move(summary));
    return result;
}

RunResult run_regularize(const ExperimentSpec& spec)
{
    const auto rho_ini = initial_profile(spec);
    const auto grid = GridProfile::sample(static_cast<std::size_t>(spec.cells), rho_ini);
    const double eps = resolve_eps(spec, spec.n);
    const auto reg = regularize_initial(grid, eps, spec.m);
    const auto p_ini = pressure_from_density(grid, spec.m);
    const auto p_reg = pressure_from_density(reg, spec.m);
    const auto mol = build_mollifier(eps, grid.cells());

    RunResult result;
    Table profile{"profile", {"u", "rho_ini", "rho_reg", "pressure_ini", "pressure_reg"}, {}};
    double sup = 0.0;
    for (std::size_t j = 0; j < grid.cells(); ++j)
    {
        profile.add({grid.center(j), grid.values[j], reg.values[j], p_ini.values[j], p_reg.values[j]});
        sup = std::max(sup, std::abs(grid.values[j] - reg.values[j]));
    }
    const double c_lip = pressure_lipschitz(grid, spec.m);
    Table summary{"summary", {"eps", "c_lip", "c_h", "lip_after", "sup_distance", "sup_bound", "min", "max"}, {}};
    summary.add({eps, c_lip, mol.c_h, pressure_lipschitz(reg, spec.m), sup,
                 regularization_sup_bound(spec.m, c_lip, eps), reg.min(), reg.max()});
    result.tables.push_back(std::move(profile));
    result.tables.push_back(std::move(summary));
    return result;
}

RunResult run_hydro_compare(const ExperimentSpec& spec)
{
    if (spec.replicas < 1) throw ValidationError("run.replicas: hydro-compare needs at least one replica");
    const auto rho_ini = initial_profile(spec);
    const auto reference = unregularized_reference(spec, rho_ini);

    const auto one = [](double) { return 1.0; };
    const auto cosine = [](double u) { return std::cos(2.0 * std::numbers::pi * u); };
    struct Pair
    {
        std::string name;
        LocalFunction phi;
        std::function<double(double)> g;
    };
    const std::vector<Pair> pairs{{"eta_G1", occupation_function(), one},
                                  {"eta_Gcos", occupation_function(), cosine},
                                  {"h_G1", h_function(spec.m), one},
                                  {"h_Gcos", h_function(spec.m), cosine}};

    RunResult result;
    Table errors{"hydro", {"n", "replicas", "l1_block"}, {}};
    for (const auto& p : pairs)
    {
        errors.columns.push_back("le_" + p.name);
        errors.columns.push_back("le_" + p.name + "_se");
    }
    Table blocks{"one_block", {"n", "ell", "v_h"}, {}};
    std::vector<long> ells;
    for (long e : {spec.ell / 4, spec.ell / 2, spec.ell})
        if (e > 0 && (ells.empty() || ells.back() != e)) ells.push_back(e);

    for (long n : spec.n_list)
    {
        if (g_stop)
        {
            result.complete = false;
            break;
        }
        KCMParams params{n, spec.m, spec.alpha, spec.seed};
        params.validate();
        const auto ensemble = run_ensemble(spec, n, rho_ini);
        std::vector<Cell> row{static_cast<long long>(n), static_cast<long long>(spec.replicas),
                              block_density_l1(ensemble, spec.ell, reference)};
        for (const auto& p : pairs)
        {
            const auto est = local_equilibrium_error(ensemble, p.g, p.phi, reference);
            row.push_back(est.mean);
            row.push_back(est.std_error);
        }
        errors.add(std::move(row));
        for (long e : ells)
            blocks.add({static_cast<long long>(n), static_cast<long long>(e),
                        one_block_statistic(ensemble, h_function(spec.m), e)});
        std::cerr << "hydro-compare: N=" << n << " done\n";
    }
    result.tables.push_back(std::move(errors));
    result.tables.push_back(std::move(blocks));
    return result;
}

RunResult run_entropy_scan(const ExperimentSpec& spec)
{
    const auto rho_ini = initial_profile(spec);
    const RegularizationSchedule schedule{spec.m, spec.eps_exponent};
    std::vector<EntropyScanRow> rows;
    try
    {
        rows = initial_entropy_scan(rho_ini, schedule, spec.n_list);
    }
    catch (const std::invalid_argument& e)
    {
        throw ValidationError(std::string("entropy-scan: ") + e.what());
    }
    RunResult result;
    Table t{"entropy", {"n", "eps", "entropy", "entropy_per_site", "ratio", "growth"}, {}};
    for (const auto& r : rows)
        t.add({static_cast<long long>(r.n), r.eps, entropy_cell(r.entropy),
               r.entropy.value_or_inf() / static_cast<double>(r.n), r.ratio, schedule.growth_functional(r.n)});
    result.tables.push_back(std::move(t));
    return result;
}

RunResult run_diagnostics(const ExperimentSpec& spec)
{
    const auto rho_ini = initial_profile(spec);
    const auto grid = GridProfile::sample(static_cast<std::size_t>(spec.cells), rho_ini);
    const double eps = resolve_eps(spec, spec.n);
    const auto reg = regularize_initial(grid, eps, spec.m);
    const auto mol = build_mollifier(eps, grid.cells());
    const double c_lip = pressure_lipschitz(grid, spec.m);
    SolverConfig cfg;
    cfg.m = spec.m;
    cfg.horizon = spec.t;
    cfg.snapshot_times = uniform_times(spec.t, static_cast<std::size_t>(spec.snapshots));
    const auto field = solve_pme(reg, cfg);

    RunResult result;
    Table bounds{"norm_bounds",
                 {"name", "eps", "measured", "bound", "slack", "exponent", "empirical_constant", "explicit", "pass"},
                 {}};
    const auto report = norm_bounds_report(field, eps, c_lip, mol.c_h);
    for (const auto& e : report.entries)
        bounds.add({e.name, eps, e.measured, e.bound, e.slack(), e.exponent, e.empirical_constant,
                    static_cast<long long>(e.explicit_constant), static_cast<long long>(e.holds())});

    Table fn{"f_n", {"time", "abs_integral"}, {}};
    const auto fvals = f_n_mean_zero(field, spec.alpha);
    for (std::size_t k = 0; k < fvals.size(); ++k) fn.add({field.times[k], fvals[k]});

    Table ident{"identities", {"identity", "coarse_cells", "coarse", "fine", "order"}, {}};
    if (spec.t > 0.0)
    {
        IdentityCase c;
        c.rho_ini = rho_ini;
        c.m = spec.m;
        c.eps = eps;
        c.cells = static_cast<std::size_t>(spec.cells);
        c.t_eval = spec.t;
        c.alpha = spec.alpha;
        const auto rep = check_lambda_identities(c);
        const auto orders = rep.orders();
        const std::vector<std::pair<std::string, std::pair<double, double>>> rows{
            {"d_u", {rep.coarse.first, rep.fine.first}},
            {"d_uu", {rep.coarse.second, rep.fine.second}},
            {"d_uuu", {rep.coarse.third, rep.fine.third}},
            {"d_t", {rep.coarse.time, rep.fine.time}}};
        for (std::size_t i = 0; i < rows.size(); ++i)
            ident.add({rows[i].first, static_cast<long long>(spec.cells), rows[i].second.first, rows[i].second.second,
                       orders[i]});
    }

    Table iface{"interface", {"time", "components", "gamma_measure"}, {}};
    for (std::size_t k = 0; k < field.snapshots.size(); ++k)
    {
        const auto s = interface_components(field.snapshots[k], spec.delta, eps);
        iface.add({field.times[k], static_cast<long long>(s.count), s.gamma_measure});
    }

    Table sites{"sites", {"n", "delta", "alpha_n", "ell", "ell0", "good", "zero", "bad"}, {}};
    const double delta = std::max(spec.delta, eps);
    const auto cls = classify_sites(field.snapshots.back(), delta, eps, spec.ell, spec.m + 1, spec.n);
    sites.add({static_cast<long long>(spec.n), delta, eps, static_cast<long long>(spec.ell),
               static_cast<long long>(spec.m + 1), cls.fraction(SiteLabel::good), cls.fraction(SiteLabel::zero),
               cls.fraction(SiteLabel::bad)});

    for (auto* t : {&bounds, &fn, &ident, &iface, &sites}) result.tables.push_back(std::move(*t));
    return result;
}

RunResult run(const ExperimentSpec& spec)
{
    validate(spec);
    if (spec.command == "simulate") return run_simulate(spec);
    if (spec.command == "solve") return run_solve(spec);
    if (spec.command == "regularize") return run_regularize(spec);
    if (spec.command == "hydro-compare") return run_hydro_compare(spec);
    if (spec.command == "entropy-scan") return run_entropy_scan(spec);
    return run_diagnostics(spec);
}

// ---------------------------------------------------------------------------

std::string sha256_hex(const std::string& bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i)
    {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string format_csv(const Table& table)
{
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto& row : table.rows)
    {
        for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + cell_text(row[i]);
        out += "\n";
    }
    return out;
}

std::string format_json(const RunResult& result)
{
    nlohmann::ordered_json doc;
    doc["complete"] = result.complete;
    for (const auto& t : result.tables)
    {
        auto rows = nlohmann::ordered_json::array();
        for (const auto& row : t.rows)
        {
            nlohmann::ordered_json obj;
            for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = cell_json(row[i]);
            rows.push_back(std::move(obj));
        }
        doc["tables"][t.name] = std::move(rows);
    }
    return doc.dump(2) + "\n";
}

std::vector<Artifact> emit_outputs(const RunResult& result, const ExperimentSpec& spec)
{
    const std::filesystem::path dir(spec.out);
    std::vector<std::pair<std::string, std::string>> files;
    if (spec.format == "json")
        files.emplace_back("results.json", format_json(result));
    else
        for (const auto& t : result.tables) files.emplace_back(t.name + ".csv", format_csv(t));
    files.emplace_back("spec.cfg", serialize_spec(spec));

    std::vector<Artifact> artifacts;
    nlohmann::ordered_json manifest;
    manifest["artifacts"] = nlohmann::ordered_json::array();
    for (const auto& [name, bytes] : files)
    {
        artifacts.push_back({name, sha256_hex(bytes)});
        manifest["artifacts"].push_back({{"path", name}, {"sha256", artifacts.back().sha256}});
    }
    manifest["complete"] = result.complete;
    const std::string manifest_text = manifest.dump(2) + "\n";

    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto manifest_path = dir / "manifest.json";
    if (std::filesystem::exists(manifest_path) && !spec.overwrite && read_file(manifest_path) != manifest_text)
        throw ValidationError("output.dir: " + manifest_path.string() +
                              " exists with different content; pass --overwrite to replace it");

    for (const auto& [name, bytes] : files) write_file(dir / name, bytes);
    write_file(manifest_path, manifest_text);
    return artifacts;
}

int cli_main(int argc, const char* const* argv)
{
    try
    {
        const auto spec = parse_spec(argc, argv);
        const auto result = run(spec);
        const auto artifacts = emit_outputs(result, spec);
        for (const auto& a : artifacts) std::cout << (std::filesystem::path(spec.out) / a.path).string() << "\n";
        if (!result.complete)
        {
            std::cerr << "interrupted: partial results written\n";
            return 2;
        }
        return 0;
    }
    catch (const HelpRequested& h)
    {
        std::cout << h.text;
        return 0;
    }
    catch (const ValidationError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::invalid_argument& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception& e)
    {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace kcm
