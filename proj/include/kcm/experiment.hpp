#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "kcm/pme.hpp"

namespace kcm
{

/// Raised for any parameter outside its module's preconditions.
class ValidationError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

/// Fully resolved experiment. Every field has a dotted config key (see spec_keys()).
struct ExperimentSpec
{
    std::string command = "simulate";

    int m = 2;             // model.m
    double alpha = 0.5;    // model.alpha

    long n = 512;                          // lattice.n
    std::vector<long> n_list{128, 256, 512};  // lattice.n_list

    long cells = 1024;     // grid.cells

    double t = 0.05;       // time.t
    long snapshots = 10;   // time.snapshots

    std::string eps_rule = "schedule";  // reg.eps_rule: schedule | fixed | none
    double eps = 0.1;                   // reg.eps, used by the fixed rule
    double eps_exponent = 0.0;          // reg.exponent, 0 selects 1/(7(m-1))

    std::string init = "barenblatt";  // init.kind: barenblatt | constant | file
    double bar_c = 0.1;               // init.c
    double bar_t0 = 0.02;             // init.t0
    double bar_center = 0.5;          // init.center
    double init_value = 0.5;          // init.value
    std::string init_file;            // init.file

    std::uint64_t seed = 42;  // run.seed
    long replicas = 100;      // run.replicas
    long threads = 0;         // run.threads, 0 = all cores

    long ell = 16;         // diag.ell
    double delta = 0.05;   // diag.delta

    std::string out = "out";       // output.dir
    std::string format = "csv";    // output.format: csv | json
    bool overwrite = false;        // output.overwrite

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

struct SpecKey
{
    std::string key;
    std::string help;
    std::function<std::string(const ExperimentSpec&)> get;
    std::function<void(ExperimentSpec&, const std::string&)> set;
};

/// All config keys, in echo order.
const std::vector<SpecKey>& spec_keys();

/// Throws ValidationError naming the offending key and its constraint.
void validate(const ExperimentSpec& spec);

/// `key = value` lines; '#' starts a comment. Unknown keys are an error.
void apply_config_text(ExperimentSpec& spec, const std::string& text, const std::string& origin = "config");
std::string serialize_spec(const ExperimentSpec& spec);
ExperimentSpec parse_config_text(const std::string& text);

/// argv[1] is the subcommand. `--config FILE` is read first, then every flag
/// given on the command line overrides the file. The result is validated.
ExperimentSpec parse_spec(int argc, const char* const* argv);

// ---------------------------------------------------------------------------

using Cell = std::variant<long long, double, std::string>;

struct Table
{
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row);
};

struct RunResult
{
    std::vector<Table> tables;
    bool complete = true;  ///< false when interrupted part way

    [[nodiscard]] const Table& table(const std::string& name) const;
};

/// Initial density on the torus described by the spec.
std::function<double(double)> initial_profile(const ExperimentSpec& spec);
/// eps for the regularised field on a lattice of n sites; 0 for the none rule.
double resolve_eps(const ExperimentSpec& spec, long n);

RunResult run_simulate(const ExperimentSpec& spec);
RunResult run_solve(const ExperimentSpec& spec);
RunResult run_regularize(const ExperimentSpec& spec);
RunResult run_hydro_compare(const ExperimentSpec& spec);
RunResult run_entropy_scan(const ExperimentSpec& spec);
RunResult run_diagnostics(const ExperimentSpec& spec);
RunResult run(const ExperimentSpec& spec);

/// Asks long-running subcommands to stop after the current unit of work.
void request_stop() noexcept;
void clear_stop() noexcept;

// ---------------------------------------------------------------------------

struct Artifact
{
    std::string path;  ///< relative to the output directory
    std::string sha256;
};

std::string sha256_hex(const std::string& bytes);
std::string format_csv(const Table& table);
std::string format_json(const RunResult& result);

/// Writes data files, the spec echo (spec.cfg) and manifest.json. Refuses to
/// replace a manifest with different content unless spec.overwrite.
std::vector<Artifact> emit_outputs(const RunResult& result, const ExperimentSpec& spec);

/// Full CLI entry point; returns the process exit code (0 ok, 1 validation, 2 runtime).
int cli_main(int argc, const char* const* argv);

}  // namespace kcm
