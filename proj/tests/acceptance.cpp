// Acceptance harness: one PASS/FAIL line per criterion, with wall time
// against the criterion's budget. Exit status is nonzero if any line fails.
#include "oracles.hpp"

#include "edp/control.hpp"
#include "edp/edp.hpp"
#include "edp/parallel.hpp"
#include "edp/solvers.hpp"
#include "edp/stability.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace edp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, pattern, args...);
    return buf;
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

int explicit_steps(const ProblemSpec& p, int at_least) {
    const double lip = potential_lipschitz_h(p.potential);
    int steps = at_least;
    while (p.horizon / steps > 2.0 / lip) steps *= 2;
    return steps;
}

Scheme scheme_for(const ProblemSpec& p, int steps) {
    return p.horizon / steps > 2.0 / potential_lipschitz_h(p.potential) ? Scheme::semi_implicit
                                                                        : Scheme::explicit_euler;
}

std::size_t decision_size(const TrajectoryEnsemble& t) {
    return t.initial_data().size() + t.rate_data().size() + t.coeff_data().size();
}

void add_direction(TrajectoryEnsemble& t, const std::vector<double>& dir, double scale) {
    std::size_t q = 0;
    for (double& x : t.initial_data()) x += scale * dir[q++];
    for (double& x : t.rate_data()) x += scale * dir[q++];
    for (double& x : t.coeff_data()) x += scale * dir[q++];
    t.reconstruct();
}

std::vector<double> random_unit(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> nd;
    std::vector<double> d(n);
    double norm = 0.0;
    for (double& x : d) {
        x = nd(rng);
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (double& x : d) x /= norm;
    return d;
}

// 1. Forward solutions are exact null-minimizers; perturbations are not.
Outcome characterization() {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> log_scale(0.0, 3.0);
    std::ostringstream detail;
    bool pass = true;
    for (const auto& name : builtin_problem_names()) {
        const ProblemSpec p = builtin_problem(name);
        const int steps = explicit_steps(p, 128);
        const auto noise = sample_noise(p.noise_dim(), TimeGrid(p.horizon, steps), 16, 7);
        const TrajectoryEnsemble fwd = solve_forward(p, noise, Scheme::explicit_euler).trajectory;
        const double at_solution = edp_residual(fwd, p).value;
        double smallest = std::numeric_limits<double>::infinity();
        for (int trial = 0; trial < 100; ++trial) {
            TrajectoryEnsemble t = fwd;
            add_direction(t, random_unit(rng, decision_size(t)), 1e-3 * std::pow(10.0, log_scale(rng)));
            smallest = std::min(smallest, edp_residual(t, p).value);
        }
        pass = pass && at_solution == 0.0 && smallest > 0.0;
        detail << name << ": I(fwd)=" << at_solution << " min I(perturbed)=" << smallest << "; ";
    }
    return {pass, detail.str()};
}

// 2. Definitional and residual forms agree up to an O(h) quadrature defect.
Outcome equivalence() {
    const ProblemSpec ou = builtin_problem("ou");
    const int paths = 10000;
    // A deterministic rate bump keeps the O(h) defect above the O(M^-1/2) noise.
    const double bump = 10.0, freq = 8.0 * std::numbers::pi;
    auto gap_at = [&](int steps, std::uint64_t seed, bool check_first) -> std::pair<double, bool> {
        const auto noise = sample_noise(1, TimeGrid(1.0, steps), paths, seed);
        TrajectoryEnsemble t = solve_forward(ou, noise, Scheme::explicit_euler, false).trajectory;
        std::vector<double> shift(steps);
        for (int k = 0; k < steps; ++k) shift[k] = bump * std::sin(freq * t.grid().time(k));
        for (int j = 0; j < paths; ++j)
            for (int k = 0; k < steps; ++k) t.rate(j, k)[0] += shift[k];
        t.reconstruct();
        const auto res = edp_residual(t, ou);
        const auto def = edp_definitional(t, ou);
        const double gap = def.value - res.value;
        bool ok = true;
        if (check_first) {
            const double se = std::hypot(res.mc_std_err, def.mc_std_err);
            ok = std::abs(gap) <= 3.0 * se + 0.05 * std::abs(res.value);
        }
        return {std::abs(gap), ok};
    };
    std::vector<double> coarse, fine;
    bool within = true;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto [g1, ok] = gap_at(1024, seed, true);
        within = within && ok;
        coarse.push_back(g1);
        fine.push_back(gap_at(2048, seed, false).first);
    }
    const double m1 = median(coarse), m2 = median(fine);
    const bool shrinks = m2 <= 0.7 * m1;
    return {within && shrinks,
            fmt("all 20 seeds within 3se+5%%: %s; median |gap| N=1024: %.4g, N=2048: %.4g (ratio %.3f)",
                within ? "yes" : "no", m1, m2, m2 / m1)};
}

// 3. Itô formula on OU: closed-form moment and first-order discrepancy decay.
Outcome ito_formula() {
    const ProblemSpec ou = builtin_problem("ou");
    const auto noise = sample_noise(1, TimeGrid(1.0, 1024), 10000, 3);
    const TrajectoryEnsemble t = solve_forward(ou, noise, Scheme::explicit_euler).trajectory;
    std::vector<double> phi_end(t.paths());
    for (int j = 0; j < t.paths(); ++j) phi_end[j] = potential_value(ou.potential, t.state(j, t.steps()));
    const MeanEstimate m = mean_estimate(phi_end);
    const bool moment_ok = std::abs(m.mean - oracle::ou_second_moment_half) <= 3.0 * m.std_err;

    const std::vector<int> grid_sizes{32, 64, 128, 256};
    std::vector<double> medians;
    for (int steps : grid_sizes) {
        std::vector<double> disc;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const auto nz = sample_noise(1, TimeGrid(1.0, steps), 10000, 100 + seed);
            disc.push_back(ito_check(solve_forward(ou, nz, Scheme::explicit_euler, false).trajectory, ou.potential)
                               .max_discrepancy);
        }
        medians.push_back(median(disc));
    }
    std::vector<double> ratios;
    for (std::size_t i = 1; i < medians.size(); ++i) ratios.push_back(medians[i] / medians[i - 1]);
    const double worst = *std::max_element(ratios.begin(), ratios.end());
    return {moment_ok && worst <= 0.7,
            fmt("E phi(u(1)) = %.6f +- %.2g (oracle %.6f); discrepancy ratios %.3f %.3f %.3f", m.mean, m.std_err,
                oracle::ou_second_moment_half, ratios[0], ratios[1], ratios[2])};
}

// 4. Minimizing from zero recovers the forward solution.
Outcome null_minimization() {
    const ProblemSpec ou = builtin_problem("ou");
    const auto noise = sample_noise(1, TimeGrid(1.0, 64), 64, 21);
    const TrajectoryEnsemble fwd = solve_forward(ou, noise, Scheme::explicit_euler).trajectory;
    VariationalOptions o;
    o.init = InitKind::zero;
    o.max_iters = 5000;
    o.tol = 1e-10;
    const SolverResult res = solve_variational(ou, noise, o);
    double dev = 0.0;
    for (std::size_t i = 0; i < fwd.state_data().size(); ++i)
        dev = std::max(dev, std::abs(fwd.state_data()[i] - res.trajectory.state_data()[i]));
    return {res.objective <= 1e-8 && dev <= 1e-3,
            fmt("objective %.3g after %d iterations, max state deviation %.3g", res.objective, res.iterations, dev)};
}

// 5. Quadratic growth of I along rays.
Outcome coercivity() {
    std::mt19937_64 rng(5);
    std::ostringstream detail;
    bool pass = true;
    for (const auto& name : builtin_problem_names()) {
        const ProblemSpec p = builtin_problem(name);
        const auto noise = sample_noise(p.noise_dim(), TimeGrid(p.horizon, 64), 16, 9);
        TrajectoryEnsemble v = solve_forward(p, noise, scheme_for(p, 64)).trajectory;
        add_direction(v, random_unit(rng, decision_size(v)), 1.0);
        std::vector<double> values, ratios;
        for (double alpha : {1.0, 2.0, 4.0, 8.0}) {
            TrajectoryEnsemble s = v;
            for (double& x : s.initial_data()) x *= alpha;
            for (double& x : s.rate_data()) x *= alpha;
            for (double& x : s.coeff_data()) x *= alpha;
            s.reconstruct();
            values.push_back(edp_residual(s, p).value);
            ratios.push_back(values.back() / (alpha * alpha));
        }
        const bool increasing = std::is_sorted(values.begin(), values.end(), std::less_equal<>()) &&
                                std::adjacent_find(values.begin(), values.end()) == values.end();
        const bool bounded = ratios[3] > 0.0 && ratios[3] >= 0.5 * ratios[2];
        pass = pass && increasing && bounded;
        detail << name << ": I/a^2 = " << ratios[0] << ", " << ratios[1] << ", " << ratios[2] << ", " << ratios[3]
               << "; ";
    }
    return {pass, detail.str()};
}

// 6. Stability under every perturbation family.
Outcome stability() {
    const ProblemSpec heat = builtin_problem("heat1d");
    const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 256), 256, 4);
    StabilityOptions opts;
    opts.scheme = Scheme::semi_implicit;
    std::ostringstream detail;
    bool pass = true;
    for (FamilyKind kind : all_families()) {
        const auto fam = PerturbationFamily::standard(kind, heat, {1e-1, 1e-2, 1e-3});
        const StabilityReport r = stability_experiment(heat, fam, noise, opts);
        const double pred = r.slope_prediction();
        const bool ok = r.err_nonincreasing() && r.rows.back().err <= 10.0 * pred;
        pass = pass && ok;
        detail << to_string(kind) << fmt(" err %.3g/%.3g/%.3g pred %.3g; ", r.rows[0].err, r.rows[1].err,
                                         r.rows[2].err, pred);
    }
    ZooOptions quiet;
    quiet.sigma = 0.0;
    const ProblemSpec ou = builtin_problem("ou", quiet);
    const auto nz = sample_noise(1, TimeGrid(1.0, 256), 4, 4);
    const auto fam = PerturbationFamily::standard(FamilyKind::initial_shift, ou, {1e-1, 1e-2, 1e-3});
    const StabilityReport r = stability_experiment(ou, fam, nz);
    double excess = -std::numeric_limits<double>::infinity();
    for (const auto& row : r.rows) excess = std::max(excess, row.err - row.eps);
    pass = pass && excess <= 1e-10;
    detail << fmt("zero-noise initial family: max(err - eps) = %.3g", excess);
    return {pass, detail.str()};
}

// 7. Penalized control against the Riccati optimum.
Outcome control() {
    ControlProblem cp;
    cp.base = builtin_problem("lq-control");
    cp.target.kind = Forcing::Kind::constant;
    cp.target.amplitude = Vector::Ones(1);
    cp.gamma = 0.1;
    cp.f_max = 10.0;
    const auto noise = sample_noise(1, TimeGrid(1.0, 1024), 1, 0);
    ControlOptions o;
    o.deltas = {1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    const ControlResult r = solve_penalized(cp, noise, o);
    const double rel = std::abs(r.J - oracle::lq_optimal_cost) / oracle::lq_optimal_cost;
    const double bound = 1e-4 * (1.0 + r.reference_cost);
    return {rel <= 0.02 && r.I <= bound,
            fmt("J = %.6f vs Riccati %.6f (rel %.2e), I = %.3g <= %.3g, reduced baseline J = %.6f", r.J,
                oracle::lq_optimal_cost, rel, r.I, bound, r.baseline_J)};
}

double dot(const std::vector<double>& a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// 8. Adjoint gradients against central differences.
Outcome gradients() {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<int> pick(0, 2), steps_dist(4, 32), paths_dist(1, 4);
    const auto names = builtin_problem_names();
    double worst_edp = 0.0, worst_ctl = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const ProblemSpec p = builtin_problem(names[static_cast<std::size_t>(pick(rng))]);
        const int steps = steps_dist(rng);
        const auto noise = sample_noise(p.noise_dim(), TimeGrid(p.horizon, steps), paths_dist(rng), 1000 + trial);
        TrajectoryEnsemble t = solve_forward(p, noise, Scheme::semi_implicit).trajectory;
        add_direction(t, random_unit(rng, decision_size(t)), 0.5 * std::sqrt(static_cast<double>(decision_size(t))));
        const auto dir = random_unit(rng, decision_size(t));
        const TrajectoryGradient g = edp_gradient(t, p);
        std::vector<double> flat = g.initial;
        flat.insert(flat.end(), g.rates.begin(), g.rates.end());
        flat.insert(flat.end(), g.coeffs.begin(), g.coeffs.end());
        const double exact = dot(flat, dir);
        const double eps = 1e-6;
        TrajectoryEnsemble plus = t, minus = t;
        add_direction(plus, dir, eps);
        add_direction(minus, dir, -eps);
        const double fd = (edp_residual(plus, p).value - edp_residual(minus, p).value) / (2 * eps);
        worst_edp = std::max(worst_edp, std::abs(fd - exact) / std::abs(exact));
    }
    for (int trial = 0; trial < 50; ++trial) {
        ControlProblem cp;
        ZooOptions small;
        small.n = 3;
        cp.base = trial % 2 ? builtin_problem("heat1d", small) : builtin_problem("lq-control");
        const int n = cp.base.dim();
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        cp.target.kind = Forcing::Kind::constant;
        cp.target.amplitude = Vector::Constant(n, 2.0 * unif(rng) - 1.0);
        cp.gamma = 0.01 + unif(rng);
        const int steps = steps_dist(rng);
        const auto noise = sample_noise(cp.base.noise_dim(), TimeGrid(cp.base.horizon, steps), paths_dist(rng),
                                        2000 + trial);
        std::normal_distribution<double> nd;
        RowMatrix f(steps, n), dir(steps, n);
        for (Eigen::Index i = 0; i < f.size(); ++i) {
            f.data()[i] = nd(rng);
            dir.data()[i] = nd(rng);
        }
        dir /= dir.norm();
        RowMatrix g;
        reduced_objective(cp, noise, f, &g);
        const double exact = (g.array() * dir.array()).sum();
        const double eps = 1e-6;
        const double fd =
            (reduced_objective(cp, noise, f + eps * dir, nullptr) - reduced_objective(cp, noise, f - eps * dir, nullptr)) /
            (2 * eps);
        worst_ctl = std::max(worst_ctl, std::abs(fd - exact) / std::abs(exact));
    }
    return {worst_edp <= 1e-5 && worst_ctl <= 1e-5,
            fmt("worst relative error: residual %.2e, reduced control %.2e", worst_edp, worst_ctl)};
}

// 9. Fenchel-Young inequality and the quadratic Fenchel form.
Outcome fenchel() {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> curv(0.1, 10.0), weight(0.0, 5.0);
    std::normal_distribution<double> nd(0.0, 3.0);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 10000; ++i) {
        const ConjugatePair pair = ConjugatePair::quadratic_logcosh(curv(rng), weight(rng));
        const double v = nd(rng);
        // Every other sample sits next to the equality graph w = η′(v).
        const double w = i % 2 ? pair.derivative(v) + 1e-3 * nd(rng) : nd(rng);
        worst = std::min(worst, pair.value(v) + pair.conjugate(w) - v * w);
    }
    const ProblemSpec heat = builtin_problem("heat1d");
    double worst_rel = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 64), 8, seed);
        TrajectoryEnsemble t = solve_forward(heat, noise, Scheme::semi_implicit).trajectory;
        std::mt19937_64 local(seed);
        add_direction(t, random_unit(local, decision_size(t)), 5.0);
        const double def = edp_definitional(t, heat).value;
        const double f2 = edp2_fenchel(t, heat, ConjugatePair::quadratic()).value;
        worst_rel = std::max(worst_rel, std::abs(def - f2) / std::abs(def));
    }
    return {worst >= -1e-12 && worst_rel <= 1e-10,
            fmt("min eta(v)+eta*(w)-vw = %.3g; max relative |edp2 - definitional| = %.2e", worst, worst_rel)};
}

// 10. Byte-identical CLI artifacts across repeats and worker counts.
Outcome determinism() {
#ifdef EDP_CLI_PATH
    const fs::path root = fs::temp_directory_path() / "edp_acceptance_determinism";
    fs::remove_all(root);
    fs::create_directories(root);
    struct Run {
        std::string command, body;
        int paths;
    };
    const std::vector<Run> runs{
        {"simulate", "problem:\n  name: heat1d\nsolver:\n  scheme: semi-implicit\n", 200},
        {"evaluate", "problem:\n  name: heat1d\nsolver:\n  scheme: semi-implicit\nevaluate:\n  functional: definitional\n", 200},
        {"minimize", "problem:\n  name: ou\nsolver:\n  tol: 1.0e-9\n  max_iters: 3000\n", 200},
        {"ito-check", "problem:\n  name: ou\n", 200},
        {"stability", "problem:\n  name: ou\nstability:\n  family: moreau-yosida\n", 200},
        {"control", "problem:\n  name: lq-control\ncontrol:\n  delta_schedule: [1.0, 0.1, 0.01]\n", 4},
    };
    bool pass = true;
    std::ostringstream detail;
    int compared = 0;
    for (const auto& [command, body, paths] : runs) {
        const fs::path cfg = root / (command + ".yaml");
        std::ofstream(cfg) << "command: " << command << "\n" << body << "grid:\n  horizon: 1.0\n  steps: 128\nensemble:\n  paths: "
                           << paths << "\n  seed: 17\n";
        std::vector<fs::path> outs;
        for (const auto& [label, workers] : std::vector<std::pair<std::string, int>>{{"a", 1}, {"b", 1}, {"c", 4}}) {
            const fs::path out = root / (command + "_" + label);
            const std::string cmd = std::string("\"") + EDP_CLI_PATH + "\" " + command + " --config \"" +
                                    cfg.string() + "\" --workers " + std::to_string(workers) + " --out \"" +
                                    out.string() + "\" > /dev/null 2>&1";
            const int status = std::system(cmd.c_str());
            if (status != 0) {
                pass = false;
                detail << command << " exited with " << status << "; ";
            }
            outs.push_back(out);
        }
        if (!fs::exists(outs[0])) continue;
        for (const auto& entry : fs::directory_iterator(outs[0])) {
            if (entry.path().extension() != ".csv") continue;
            auto slurp = [](const fs::path& p) {
                std::ifstream in(p, std::ios::binary);
                return std::string(std::istreambuf_iterator<char>(in), {});
            };
            const std::string ref = slurp(entry.path());
            for (std::size_t i = 1; i < outs.size(); ++i) {
                const fs::path other = outs[i] / entry.path().filename();
                if (!fs::exists(other) || slurp(other) != ref) {
                    pass = false;
                    detail << command << "/" << entry.path().filename().string() << " differs; ";
                }
            }
            ++compared;
        }
    }
    fs::remove_all(root);
    detail << compared << " CSV artifacts compared across 3 runs each";
    return {pass && compared > 0, detail.str()};
#else
    return {false, "CLI not built"};
#endif
}

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
    set_worker_count(std::max(1u, std::thread::hardware_concurrency()));
    const std::vector<Criterion> criteria{
        {1, "characterization", 10, characterization},
        {2, "equivalence", 120, equivalence},
        {3, "ito-formula", 120, ito_formula},
        {4, "null-minimization", 300, null_minimization},
        {5, "coercivity", 10, coercivity},
        {6, "stability", 120, stability},
        {7, "control", 300, control},
        {8, "gradients", 60, gradients},
        {9, "fenchel", 30, fenchel},
        {10, "determinism", 60, determinism},
    };
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    int failures = 0;
    for (const auto& c : criteria) {
        if (only && c.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::cout << "criterion " << c.id << " " << c.name << ": " << (pass ? "PASS" : "FAIL")
                  << fmt(" (%.2f s of %.0f s)", secs, c.budget_s) << (in_time ? "" : " over budget") << "  "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
