#include "config.hpp"

#include "edp/control.hpp"
#include "edp/solvers.hpp"
#include "edp/stability.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace edp::cli {
namespace {

[[noreturn]] void fail(const std::string& what) { throw ConfigError(what); }

void check_keys(const YAML::Node& node, const std::string& where, const std::set<std::string>& allowed) {
    if (!node.IsMap()) fail("'" + where + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T read(const YAML::Node& node, const std::string& where) {
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        fail("malformed value for '" + where + "'");
    }
}

template <class T>
void read_into(const YAML::Node& parent, const char* key, T& out, const std::string& where) {
    if (const auto node = parent[key]) out = read<T>(node, where + "." + key);
}

void read_inline(const YAML::Node& node, InlineProblem& p) {
    check_keys(node, "problem.inline",
               {"A", "P", "beta", "u0", "sigma", "modulation", "offset", "slope", "drift_gain", "forcing"});
    read_into(node, "A", p.A, "problem.inline");
    read_into(node, "P", p.P, "problem.inline");
    read_into(node, "beta", p.beta, "problem.inline");
    read_into(node, "u0", p.u0, "problem.inline");
    read_into(node, "sigma", p.sigma, "problem.inline");
    read_into(node, "modulation", p.modulation, "problem.inline");
    read_into(node, "offset", p.offset, "problem.inline");
    read_into(node, "slope", p.slope, "problem.inline");
    read_into(node, "drift_gain", p.drift_gain, "problem.inline");
    read_into(node, "forcing", p.forcing, "problem.inline");
}

void read_problem(const YAML::Node& node, ProblemConfig& p) {
    if (node.IsScalar()) {
        p.name = read<std::string>(node, "problem");
        return;
    }
    check_keys(node, "problem", {"name", "sigma", "n", "nu", "beta", "u0", "inline"});
    read_into(node, "name", p.name, "problem");
    if (node["sigma"]) p.sigma = read<double>(node["sigma"], "problem.sigma");
    if (node["n"]) p.n = read<int>(node["n"], "problem.n");
    if (node["nu"]) p.nu = read<double>(node["nu"], "problem.nu");
    if (node["beta"]) p.beta = read<double>(node["beta"], "problem.beta");
    if (node["u0"]) p.u0 = read<std::vector<double>>(node["u0"], "problem.u0");
    if (node["inline"]) {
        p.inline_spec.emplace();
        read_inline(node["inline"], *p.inline_spec);
    }
}

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const std::string& what) {
    if (rows.empty()) fail(what + " must be a nonempty list of rows");
    const auto cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols || cols == 0) fail(what + " has ragged or empty rows");
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Vector to_vector(const std::vector<double>& v) {
    return ConstVectorMap(v.data(), static_cast<Eigen::Index>(v.size()));
}

ProblemSpec inline_problem(const InlineProblem& p, double horizon) {
    ProblemSpec spec;
    spec.potential.A = to_matrix(p.A, "problem.inline.A");
    const int n = spec.potential.dim();
    spec.geometry.P = p.P.empty() ? spec.potential.A : to_matrix(p.P, "problem.inline.P");
    if (p.beta != 0.0) {
        spec.potential.nonlinearity = Nonlinearity::logcosh;
        spec.potential.beta = p.beta;
    }
    if (static_cast<int>(p.u0.size()) != n) fail("problem.inline.u0 must have one entry per row of A");
    spec.u0 = to_vector(p.u0);
    spec.diffusion.sigma = p.sigma.empty() ? RowMatrix(RowMatrix::Zero(n, 1)) : RowMatrix(to_matrix(p.sigma, "problem.inline.sigma"));
    if (p.modulation == "additive") spec.diffusion.modulation = Modulation::additive;
    else if (p.modulation == "tanh") spec.diffusion.modulation = Modulation::tanh;
    else if (p.modulation == "affine_tanh") spec.diffusion.modulation = Modulation::affine_tanh;
    else fail("unknown diffusion modulation '" + p.modulation + "'");
    spec.diffusion.offset = p.offset;
    spec.diffusion.slope = p.slope;
    spec.drift.gain = p.drift_gain;
    if (!p.forcing.empty()) {
        if (static_cast<int>(p.forcing.size()) != n) fail("problem.inline.forcing must have n entries");
        spec.drift.forcing.kind = Forcing::Kind::constant;
        spec.drift.forcing.amplitude = to_vector(p.forcing);
    }
    spec.horizon = horizon;
    return spec;
}

void check_schedule(const std::vector<double>& s, const std::string& what, bool allow_zero) {
    if (s.empty()) fail(what + " must not be empty");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(allow_zero ? s[i] >= 0.0 : s[i] > 0.0)) fail(what + " entries must be positive");
        if (i > 0 && !(s[i] < s[i - 1])) fail(what + " must be strictly decreasing");
    }
}

}  // namespace

std::vector<std::string> command_names() {
    return {"simulate", "evaluate", "minimize", "ito-check", "stability", "control"};
}

ExperimentConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception& e) {
        fail(std::string("YAML parse error: ") + e.what());
    }
    ExperimentConfig c;
    if (root.IsNull()) return c;
    check_keys(root, "config",
               {"command", "problem", "grid", "ensemble", "workers", "output_dir", "solver", "evaluate", "stability",
                "control"});
    read_into(root, "command", c.command, "config");
    if (root["problem"]) read_problem(root["problem"], c.problem);
    if (const auto g = root["grid"]) {
        check_keys(g, "grid", {"horizon", "steps"});
        read_into(g, "horizon", c.horizon, "grid");
        read_into(g, "steps", c.steps, "grid");
    }
    if (const auto e = root["ensemble"]) {
        check_keys(e, "ensemble", {"paths", "seed"});
        read_into(e, "paths", c.paths, "ensemble");
        read_into(e, "seed", c.seed, "ensemble");
    }
    read_into(root, "workers", c.workers, "config");
    read_into(root, "output_dir", c.output_dir, "config");
    if (const auto s = root["solver"]) {
        check_keys(s, "solver", {"scheme", "tol", "max_iters", "init"});
        read_into(s, "scheme", c.solver.scheme, "solver");
        read_into(s, "tol", c.solver.tol, "solver");
        read_into(s, "max_iters", c.solver.max_iters, "solver");
        read_into(s, "init", c.solver.init, "solver");
    }
    if (const auto e = root["evaluate"]) {
        check_keys(e, "evaluate", {"functional", "trajectory", "trajectory_file"});
        read_into(e, "functional", c.evaluate.functional, "evaluate");
        read_into(e, "trajectory", c.evaluate.trajectory, "evaluate");
        read_into(e, "trajectory_file", c.evaluate.trajectory_file, "evaluate");
    }
    if (const auto s = root["stability"]) {
        check_keys(s, "stability", {"family", "eps_schedule", "mode"});
        read_into(s, "family", c.stability.family, "stability");
        read_into(s, "eps_schedule", c.stability.eps_schedule, "stability");
        read_into(s, "mode", c.stability.mode, "stability");
    }
    if (const auto k = root["control"]) {
        check_keys(k, "control", {"delta_schedule", "gamma", "target", "fmax", "baseline", "max_iters"});
        read_into(k, "delta_schedule", c.control.delta_schedule, "control");
        read_into(k, "gamma", c.control.gamma, "control");
        read_into(k, "target", c.control.target, "control");
        read_into(k, "fmax", c.control.fmax, "control");
        read_into(k, "baseline", c.control.baseline, "control");
        read_into(k, "max_iters", c.control.max_iters, "control");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot read config file '" + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string emit_config(const ExperimentConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "command" << YAML::Value << c.command;

    out << YAML::Key << "problem" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << c.problem.name;
    if (c.problem.sigma) out << YAML::Key << "sigma" << YAML::Value << *c.problem.sigma;
    if (c.problem.n) out << YAML::Key << "n" << YAML::Value << *c.problem.n;
    if (c.problem.nu) out << YAML::Key << "nu" << YAML::Value << *c.problem.nu;
    if (c.problem.beta) out << YAML::Key << "beta" << YAML::Value << *c.problem.beta;
    if (c.problem.u0) out << YAML::Key << "u0" << YAML::Value << YAML::Flow << *c.problem.u0;
    if (const auto& p = c.problem.inline_spec) {
        out << YAML::Key << "inline" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "A" << YAML::Value << YAML::Flow << p->A;
        if (!p->P.empty()) out << YAML::Key << "P" << YAML::Value << YAML::Flow << p->P;
        out << YAML::Key << "beta" << YAML::Value << p->beta;
        out << YAML::Key << "u0" << YAML::Value << YAML::Flow << p->u0;
        if (!p->sigma.empty()) out << YAML::Key << "sigma" << YAML::Value << YAML::Flow << p->sigma;
        out << YAML::Key << "modulation" << YAML::Value << p->modulation;
        out << YAML::Key << "offset" << YAML::Value << p->offset;
        out << YAML::Key << "slope" << YAML::Value << p->slope;
        out << YAML::Key << "drift_gain" << YAML::Value << p->drift_gain;
        if (!p->forcing.empty()) out << YAML::Key << "forcing" << YAML::Value << YAML::Flow << p->forcing;
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << c.horizon;
    out << YAML::Key << "steps" << YAML::Value << c.steps;
    out << YAML::EndMap;
    out << YAML::Key << "ensemble" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "paths" << YAML::Value << c.paths;
    out << YAML::Key << "seed" << YAML::Value << c.seed;
    out << YAML::EndMap;
    out << YAML::Key << "workers" << YAML::Value << c.workers;
    if (!c.output_dir.empty()) out << YAML::Key << "output_dir" << YAML::Value << c.output_dir;

    out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "scheme" << YAML::Value << c.solver.scheme;
    out << YAML::Key << "tol" << YAML::Value << c.solver.tol;
    out << YAML::Key << "max_iters" << YAML::Value << c.solver.max_iters;
    out << YAML::Key << "init" << YAML::Value << c.solver.init;
    out << YAML::EndMap;

    out << YAML::Key << "evaluate" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "functional" << YAML::Value << c.evaluate.functional;
    out << YAML::Key << "trajectory" << YAML::Value << c.evaluate.trajectory;
    if (!c.evaluate.trajectory_file.empty())
        out << YAML::Key << "trajectory_file" << YAML::Value << c.evaluate.trajectory_file;
    out << YAML::EndMap;

    out << YAML::Key << "stability" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "family" << YAML::Value << c.stability.family;
    out << YAML::Key << "eps_schedule" << YAML::Value << YAML::Flow << c.stability.eps_schedule;
    out << YAML::Key << "mode" << YAML::Value << c.stability.mode;
    out << YAML::EndMap;

    out << YAML::Key << "control" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "delta_schedule" << YAML::Value << YAML::Flow << c.control.delta_schedule;
    out << YAML::Key << "gamma" << YAML::Value << c.control.gamma;
    out << YAML::Key << "target" << YAML::Value << YAML::Flow << c.control.target;
    out << YAML::Key << "fmax" << YAML::Value << c.control.fmax;
    out << YAML::Key << "baseline" << YAML::Value << c.control.baseline;
    out << YAML::Key << "max_iters" << YAML::Value << c.control.max_iters;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

ProblemSpec build_problem(const ExperimentConfig& c) {
    if (!(c.horizon > 0.0)) fail("grid.horizon must be positive");
    if (c.problem.name.empty()) fail("missing problem name");
    ProblemSpec spec;
    try {
        if (c.problem.name == "inline") {
            if (!c.problem.inline_spec) fail("problem 'inline' needs an 'inline' block");
            spec = inline_problem(*c.problem.inline_spec, c.horizon);
        } else {
            if (c.problem.inline_spec) fail("'inline' block given for zoo problem '" + c.problem.name + "'");
            ZooOptions opts;
            opts.sigma = c.problem.sigma;
            opts.n = c.problem.n;
            opts.nu = c.problem.nu;
            opts.beta = c.problem.beta;
            opts.horizon = c.horizon;
            if (c.problem.u0) opts.u0 = to_vector(*c.problem.u0);
            spec = builtin_problem(c.problem.name, opts);
        }
        certify(spec);
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        fail(std::string("invalid problem: ") + e.what());
    }
    return spec;
}

void validate(const ExperimentConfig& c) {
    const auto names = command_names();
    if (std::find(names.begin(), names.end(), c.command) == names.end())
        fail("unknown or missing command '" + c.command + "'");
    if (c.steps < 1) fail("grid.steps must be >= 1");
    if (c.paths < 1) fail("ensemble.paths must be >= 1");
    if (c.workers < 1) fail("workers must be >= 1");
    const ProblemSpec problem = build_problem(c);
    try {
        parse_scheme(c.solver.scheme);
        parse_init(c.solver.init);
        parse_family(c.stability.family);
        parse_stability_mode(c.stability.mode);
    } catch (const std::invalid_argument& e) {
        fail(e.what());
    }
    if (c.solver.scheme == "explicit" && c.horizon / c.steps > 2.0 / potential_lipschitz_h(problem.potential))
        fail("explicit scheme is unstable at this step size; raise grid.steps or use semi-implicit");
    if (!(c.solver.tol >= 0.0)) fail("solver.tol must be >= 0");
    if (c.solver.max_iters < 0) fail("solver.max_iters must be >= 0");

    const std::set<std::string> functionals{"residual", "definitional", "fenchel", "ben"};
    if (!functionals.count(c.evaluate.functional)) fail("unknown functional '" + c.evaluate.functional + "'");
    const std::set<std::string> sources{"forward", "constant", "file"};
    if (!sources.count(c.evaluate.trajectory)) fail("unknown trajectory source '" + c.evaluate.trajectory + "'");
    if (c.evaluate.trajectory == "file" && c.evaluate.trajectory_file.empty())
        fail("evaluate.trajectory_file is required for trajectory 'file'");

    check_schedule(c.stability.eps_schedule, "stability.eps_schedule", true);
    check_schedule(c.control.delta_schedule, "control.delta_schedule", false);
    if (!(c.control.gamma > 0.0)) fail("control.gamma must be > 0");
    if (!(c.control.fmax > 0.0)) fail("control.fmax must be > 0");
    if (c.control.max_iters < 1) fail("control.max_iters must be >= 1");
    const auto nt = c.control.target.size();
    if (nt != 1 && static_cast<int>(nt) != problem.dim()) fail("control.target must have 1 or n entries");
}

}  // namespace edp::cli
