#include "runner.hpp"

#include "report.hpp"

#include "edp/control.hpp"
#include "edp/edp.hpp"
#include "edp/ito.hpp"
#include "edp/parallel.hpp"
#include "edp/solvers.hpp"
#include "edp/stability.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <ostream>

#ifndef EDP_VERSION
#define EDP_VERSION "unknown"
#endif

namespace edp::cli {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

// Numerical failure that the command reports through its exit status.
struct NotConverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Context {
    const ExperimentConfig& config;
    ProblemSpec problem;
    fs::path dir;
    json results = json::object();
    std::vector<std::string> artifacts{};

    NoisePtr noise() const {
        return sample_noise(problem.noise_dim(), TimeGrid(config.horizon, config.steps), config.paths, config.seed);
    }
    void csv(const std::string& name, const Table& table) {
        emit_report(table, dir / name);
        artifacts.push_back(name);
    }
    void binary(const std::string& name, const TrajectoryEnsemble& traj) {
        try {
            write_trajectory(dir / name, traj);
        } catch (const fs::filesystem_error& e) {
            throw IoError(e.what());
        }
        artifacts.push_back(name);
    }
};

Table mean_path_table(const TrajectoryEnsemble& traj) {
    const int n = traj.dim(), paths = traj.paths();
    Table t;
    t.columns = {"t"};
    for (int i = 0; i < n; ++i) t.columns.push_back("mean_" + std::to_string(i + 1));
    for (int i = 0; i < n; ++i) t.columns.push_back("std_err_" + std::to_string(i + 1));
    std::vector<double> column(paths);
    for (int k = 0; k <= traj.steps(); ++k) {
        std::vector<Cell> row{traj.grid().time(k)};
        std::vector<Cell> errs;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < paths; ++j) column[j] = traj.state(j, k)[i];
            const MeanEstimate est = mean_estimate(column);
            row.emplace_back(est.mean);
            errs.emplace_back(est.std_err);
        }
        row.insert(row.end(), errs.begin(), errs.end());
        t.rows.push_back(std::move(row));
    }
    return t;
}

void run_simulate(Context& ctx) {
    const SolverResult res = solve_forward(ctx.problem, ctx.noise(), parse_scheme(ctx.config.solver.scheme));
    ctx.binary("trajectory.bin", res.trajectory);
    ctx.csv("mean_path.csv", mean_path_table(res.trajectory));
    ctx.results["edp_residual"] = res.objective;
    ctx.results["adaptedness_defect"] = res.adaptedness_defect;
}

TrajectoryEnsemble evaluation_trajectory(Context& ctx) {
    const auto& ev = ctx.config.evaluate;
    if (ev.trajectory == "file") {
        TrajectoryEnsemble traj = [&] {
            try {
                return read_trajectory(ev.trajectory_file);
            } catch (const std::runtime_error& e) {
                throw IoError(std::string("cannot read trajectory: ") + e.what());
            }
        }();
        return traj;
    }
    const NoisePtr noise = ctx.noise();
    if (ev.trajectory == "constant") {
        TrajectoryEnsemble traj(noise, ctx.problem.dim());
        for (int j = 0; j < traj.paths(); ++j) traj.initial(j) = ctx.problem.u0;
        traj.reconstruct();
        return traj;
    }
    return solve_forward(ctx.problem, noise, parse_scheme(ctx.config.solver.scheme)).trajectory;
}

void run_evaluate(Context& ctx) {
    const TrajectoryEnsemble traj = evaluation_trajectory(ctx);
    const std::string& name = ctx.config.evaluate.functional;
    const FunctionalReport report = [&] {
        if (name == "definitional") return edp_definitional(traj, ctx.problem);
        if (name == "fenchel") return edp2_fenchel(traj, ctx.problem, ConjugatePair::quadratic_logcosh());
        if (name == "ben") return ben_functional(traj, ctx.problem);
        return edp_residual(traj, ctx.problem);
    }();
    ctx.csv("functional.csv", to_table(report));
    ctx.results["functional"] = report.functional;
    ctx.results["value"] = report.value;
    ctx.results["mc_std_err"] = report.mc_std_err;
}

void run_minimize(Context& ctx) {
    VariationalOptions opts;
    opts.init = parse_init(ctx.config.solver.init);
    opts.tol = ctx.config.solver.tol;
    opts.max_iters = ctx.config.solver.max_iters;
    const SolverResult res = solve_variational(ctx.problem, ctx.noise(), opts);
    ctx.binary("trajectory.bin", res.trajectory);
    ctx.csv("convergence.csv", convergence_table(res));
    ctx.results["objective"] = res.objective;
    ctx.results["iterations"] = res.iterations;
    ctx.results["converged"] = res.converged;
    ctx.results["adaptedness_defect"] = res.adaptedness_defect;
    if (!res.converged) throw NotConverged("variational solver did not reach the tolerance");
}

void run_ito_check(Context& ctx) {
    const SolverResult res = solve_forward(ctx.problem, ctx.noise(), parse_scheme(ctx.config.solver.scheme));
    const ItoReport report = ito_check(res.trajectory, ctx.problem.potential);
    ctx.csv("ito.csv", to_table(report));
    ctx.results["max_discrepancy"] = report.max_discrepancy;
    ctx.results["max_discrepancy_std_err"] = report.max_discrepancy_std_err;
}

void run_stability(Context& ctx) {
    const auto& sc = ctx.config.stability;
    const PerturbationFamily family =
        PerturbationFamily::standard(parse_family(sc.family), ctx.problem, sc.eps_schedule);
    StabilityOptions opts;
    opts.mode = parse_stability_mode(sc.mode);
    opts.scheme = parse_scheme(ctx.config.solver.scheme);
    opts.variational.init = parse_init(ctx.config.solver.init);
    opts.variational.max_iters = ctx.config.solver.max_iters;
    const StabilityReport report = stability_experiment(ctx.problem, family, ctx.noise(), opts);
    ctx.csv("stability.csv", to_table(report));
    ctx.results["err_nonincreasing"] = report.err_nonincreasing();
    ctx.results["constants_within_envelope"] = report.constants_within_envelope;
    if (report.rows.size() >= 2) ctx.results["slope_prediction"] = report.slope_prediction();
    ctx.results["note"] = "err is a pathwise error on common noise, a stronger quantity than weak-* convergence";
}

void run_control(Context& ctx) {
    const auto& cc = ctx.config.control;
    ControlProblem cp;
    cp.base = ctx.problem;
    cp.gamma = cc.gamma;
    cp.f_max = cc.fmax;
    cp.target.kind = Forcing::Kind::constant;
    const int n = ctx.problem.dim();
    cp.target.amplitude = cc.target.size() == 1 ? Vector(Vector::Constant(n, cc.target[0]))
                                                : Vector(ConstVectorMap(cc.target.data(), n));
    ControlOptions opts;
    opts.deltas = cc.delta_schedule;
    opts.max_iters = cc.max_iters;
    opts.baseline = cc.baseline;
    const ControlResult res = solve_penalized(cp, ctx.noise(), opts);
    ctx.csv("control.csv", control_table(res));
    ctx.csv("continuation.csv", continuation_table(res));
    ctx.results["J"] = res.J;
    ctx.results["I"] = res.I;
    ctx.results["reference_cost"] = res.reference_cost;
    if (cc.baseline) ctx.results["baseline_J"] = res.baseline_J;
    ctx.results["stalled"] = res.stalled;
    if (!res.history.back().within_bound)
        throw NotConverged("penalized solve left I above delta*(1 + J(f0, S(f0))) at the final delta");
}

void write_manifest(const Context& ctx, const std::string& status, double wall_time) {
    json m;
    m["command"] = ctx.config.command;
    m["status"] = status;
    m["config"] = emit_config(ctx.config);
    m["seed"] = ctx.config.seed;
    m["workers"] = ctx.config.workers;
    m["versions"] = {{"edp", EDP_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    m["wall_time_s"] = wall_time;
    m["artifacts"] = ctx.artifacts;
    m["results"] = ctx.results;
    write_text(ctx.dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

fs::path resolve_output_dir(const ExperimentConfig& config) {
    if (!config.output_dir.empty()) return config.output_dir;
    if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
    return "edp_out";
}

int run(const ExperimentConfig& config, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    ProblemSpec problem;
    try {
        validate(config);
        problem = build_problem(config);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    }

    Context ctx{config, std::move(problem), resolve_output_dir(config)};
    std::error_code ec;
    fs::create_directories(ctx.dir, ec);
    if (ec) {
        log << "io error: cannot create output directory '" << ctx.dir.string() << "': " << ec.message() << '\n';
        return exit_io;
    }
    set_worker_count(static_cast<std::size_t>(config.workers));

    int code = exit_ok;
    std::string status = "ok";
    try {
        const std::string& cmd = config.command;
        if (cmd == "simulate") run_simulate(ctx);
        else if (cmd == "evaluate") run_evaluate(ctx);
        else if (cmd == "minimize") run_minimize(ctx);
        else if (cmd == "ito-check") run_ito_check(ctx);
        else if (cmd == "stability") run_stability(ctx);
        else run_control(ctx);
    } catch (const IoError& e) {
        log << "io error: " << e.what() << '\n';
        return exit_io;
    } catch (const NotConverged& e) {
        log << "numerical failure: " << e.what() << '\n';
        code = exit_numerical;
        status = "not_converged";
    } catch (const NumericalError& e) {
        log << "numerical failure: " << e.what() << '\n';
        code = exit_numerical;
        status = "numerical_error";
    } catch (const std::invalid_argument& e) {
        log << "config error: " << e.what() << '\n';
        return exit_config;
    } catch (const std::exception& e) {
        log << "numerical failure: " << e.what() << '\n';
        code = exit_numerical;
        status = "failed";
    }

    try {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(ctx, status, wall);
    } catch (const IoError& e) {
        log << "io error: " << e.what() << '\n';
        return exit_io;
    }
    return code;
}

}  // namespace edp::cli
