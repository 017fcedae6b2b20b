#pragma once

#include "edp/model.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace edp::cli {

/// Invalid or inconsistent configuration (exit status 1).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully written-out problem data, for cases the zoo does not cover.
struct InlineProblem {
    std::vector<std::vector<double>> A;
    std::vector<std::vector<double>> P;  // empty: P = A
    double beta = 0.0;
    std::vector<double> u0;
    std::vector<std::vector<double>> sigma;  // n×m
    std::string modulation = "additive";     // additive | tanh | affine_tanh
    double offset = 1.0;
    double slope = 0.0;
    double drift_gain = 0.0;
    std::vector<double> forcing;  // constant affine part; empty means zero

    bool operator==(const InlineProblem&) const = default;
};

struct ProblemConfig {
    std::string name;  // zoo name, or "inline"
    std::optional<double> sigma;
    std::optional<int> n;
    std::optional<double> nu;
    std::optional<double> beta;
    std::optional<std::vector<double>> u0;
    std::optional<InlineProblem> inline_spec;

    bool operator==(const ProblemConfig&) const = default;
};

struct SolverConfig {
    std::string scheme = "explicit";
    double tol = 1e-8;
    int max_iters = 2000;
    std::string init = "zero";

    bool operator==(const SolverConfig&) const = default;
};

struct EvaluateConfig {
    std::string functional = "residual";  // residual | definitional | fenchel | ben
    std::string trajectory = "forward";   // forward | constant | file
    std::string trajectory_file;

    bool operator==(const EvaluateConfig&) const = default;
};

struct StabilityConfig {
    std::string family = "initial";
    std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3};
    std::string mode = "exact-solve";

    bool operator==(const StabilityConfig&) const = default;
};

struct ControlConfig {
    std::vector<double> delta_schedule{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    double gamma = 0.1;
    std::vector<double> target{1.0};  // constant tracking target, broadcast when of size 1
    double fmax = 10.0;
    bool baseline = true;
    int max_iters = 20000;

    bool operator==(const ControlConfig&) const = default;
};

struct ExperimentConfig {
    std::string command;  // simulate | evaluate | minimize | ito-check | stability | control
    ProblemConfig problem;
    double horizon = 1.0;
    int steps = 64;
    int paths = 16;
    std::uint64_t seed = 0;
    int workers = 1;
    std::string output_dir;
    SolverConfig solver;
    EvaluateConfig evaluate;
    StabilityConfig stability;
    ControlConfig control;

    bool operator==(const ExperimentConfig&) const = default;
};

std::vector<std::string> command_names();

ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::string& path);
/// YAML text that parses back to an equal configuration.
std::string emit_config(const ExperimentConfig& config);

/// Checks ranges and names and builds the certified problem; throws ConfigError.
ProblemSpec build_problem(const ExperimentConfig& config);
void validate(const ExperimentConfig& config);

}  // namespace edp::cli
