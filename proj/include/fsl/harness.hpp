#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsl/dpd_solver.hpp"

namespace fsl {

// b min{-3, -(sqrt(1 + 8/b) - 1)} with b = gamma^2 / 4 pi; needs gamma != 0.
double alpha_gamma(double gamma);

// Bad file, bad syntax, unknown key, wrong type or an inadmissible parameter.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::string experiment = "solve";
    std::uint64_t master_seed = 1;
    long n_samples = 10;
    std::string out_dir = "out";

    // [grid]
    int n_x = 256;
    double dt = 1.0 / 256;
    double T = 1.0 / 8;

    // [physics]
    double gamma = 0.4431134627263791;  // sqrt(pi / 16)
    double alpha = -0.4;
    double kappa = 0.05;
    double T0 = 1.0;
    double eps = 1.0 / 16;
    std::vector<double> eps_list{1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64};
    std::vector<double> delta_list{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
    std::string mollifier = "rho";  // rho or theta
    double u0_amp = 0.3;            // u0 = u0_amp cos(2 pi u0_mode x)
    int u0_mode = 1;

    // [gmc] moment scaling needs delta >= 8 eps and 8 cells across the smallest bump
    int moment_p = 2;
    int gmc_n_x = 1024;
    double gmc_dt = 1.0 / 1024;
    double gmc_eps = 1.0 / 256;

    // [solver]
    std::string mode = "sinh";  // sinh or exp
    int max_iter = 60;
    double tol = 1e-8;

    // [schauder]
    std::vector<double> alpha_list{-0.3, -0.5, -0.7};
    bool direct = true;

    bool operator==(const ExperimentConfig&) const = default;
};

// Flat TOML: top-level keys, [section] tables, strings, booleans, integers, floats and
// one-line arrays of numbers. Unknown keys and type mismatches throw ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
// Inverse of parse_config; floats printed with 17 significant digits.
std::string to_toml(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);
// FNV-1a 64 of to_toml(cfg).
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hex64(std::uint64_t h);

// Throws ConfigError naming the violated constraint.
void validate_config(const ExperimentConfig& cfg);
SolverConfig solver_config(const ExperimentConfig& cfg);
// Seed of sample i under a master seed.
std::uint64_t experiment_seed(std::uint64_t master, long i);

const std::vector<std::string>& subcommands();

struct RunReport {
    int exit_code = 0;  // 0 ok, 2 config error, 3 built-in check failed
    bool check_passed = true;
    std::string message;
    std::vector<std::string> files;  // written artifacts, manifest last
};

// Runs one subcommand into out_dir (created if missing). Every CSV starts with a comment line
// carrying the config hash and seed; manifest.json echoes the config and the summary.
RunReport run_subcommand(const std::string& name, const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace fsl
