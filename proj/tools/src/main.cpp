#include "config.hpp"
#include "runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

using edp::cli::ExperimentConfig;

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto next = text.find(',', pos);
        const std::string item = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
        std::size_t used = 0;
        out.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument("trailing characters in '" + item + "'");
        if (next == std::string::npos) break;
        pos = next + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-dissipation functional experiments for stochastic gradient flows"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;
    std::optional<std::string> out_dir;

    std::optional<std::string> scheme, init, functional, family, mode, eps_schedule, delta_schedule, target, baseline;
    std::optional<double> tol, gamma, fmax;
    std::optional<int> max_iters;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "YAML experiment configuration")->required();
        sub->add_option("--seed", seed, "override ensemble.seed");
        sub->add_option("--workers", workers, "worker threads for path-parallel loops");
        sub->add_option("--out", out_dir, "output directory (default: config, then $EDP_OUT_DIR)");
    };

    auto* simulate = app.add_subcommand("simulate", "forward solve; writes the trajectory container and mean path");
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a functional on a trajectory");
    auto* minimize = app.add_subcommand("minimize", "variational null-minimization");
    auto* ito = app.add_subcommand("ito-check", "Monte Carlo check of the Ito formula");
    auto* stability = app.add_subcommand("stability", "perturbation-family convergence experiment");
    auto* control = app.add_subcommand("control", "penalized optimal control with continuation");
    for (auto* sub : {simulate, evaluate, minimize, ito, stability, control}) add_common(sub);

    for (auto* sub : {simulate, ito, stability, evaluate})
        sub->add_option("--scheme", scheme, "explicit | semi-implicit");
    minimize->add_option("--tol", tol, "objective tolerance");
    for (auto* sub : {minimize, stability}) {
        sub->add_option("--max-iters", max_iters, "iteration cap");
        sub->add_option("--init", init, "zero | constant | forward");
    }
    evaluate->add_option("--functional", functional, "residual | definitional | fenchel | ben");
    stability->add_option("--family", family, "initial | matrix | moreau-yosida | drift | diffusion");
    stability->add_option("--eps-schedule", eps_schedule, "comma-separated, strictly decreasing");
    stability->add_option("--mode", mode, "exact-solve | approximate-minimizer");
    control->add_option("--delta-schedule", delta_schedule, "comma-separated, strictly decreasing");
    control->add_option("--gamma", gamma, "control weight");
    control->add_option("--target", target, "constant tracking target (one value or n comma-separated)");
    control->add_option("--fmax", fmax, "box bound on the control");
    control->add_option("--baseline", baseline, "on | off")->check(CLI::IsMember({"on", "off"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? edp::cli::exit_ok : edp::cli::exit_config;
    }

    ExperimentConfig config;
    try {
        config = edp::cli::load_config(config_path);
        config.command = app.get_subcommands().front()->get_name();
        if (seed) config.seed = *seed;
        if (workers) config.workers = *workers;
        if (out_dir) config.output_dir = *out_dir;
        if (scheme) config.solver.scheme = *scheme;
        if (tol) config.solver.tol = *tol;
        if (max_iters) config.solver.max_iters = *max_iters;
        if (init) config.solver.init = *init;
        if (functional) config.evaluate.functional = *functional;
        if (family) config.stability.family = *family;
        if (eps_schedule) config.stability.eps_schedule = parse_list(*eps_schedule);
        if (mode) config.stability.mode = *mode;
        if (delta_schedule) config.control.delta_schedule = parse_list(*delta_schedule);
        if (gamma) config.control.gamma = *gamma;
        if (target) config.control.target = parse_list(*target);
        if (fmax) config.control.fmax = *fmax;
        if (baseline) config.control.baseline = *baseline == "on";
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return edp::cli::exit_config;
    }
    return edp::cli::run(config, std::cerr);
}
