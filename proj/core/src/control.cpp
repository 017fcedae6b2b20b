#include "edp/control.hpp"

#include "edp/parallel.hpp"
#include "edp/solvers.hpp"

#include <cmath>
#include <limits>

namespace edp {

void validate_control_problem(const ControlProblem& cp) {
    if (!(cp.gamma > 0.0) || !std::isfinite(cp.gamma)) throw std::invalid_argument("control weight gamma must be > 0");
    if (!(cp.f_max > 0.0) || !std::isfinite(cp.f_max)) throw std::invalid_argument("control bound f_max must be > 0");
    constants_of(cp.base);
    const int n = cp.base.dim();
    const auto& tgt = cp.target;
    const bool ok = [&] {
        switch (tgt.kind) {
            case Forcing::Kind::zero: return true;
            case Forcing::Kind::constant:
            case Forcing::Kind::sine: return tgt.amplitude.size() == n;
            case Forcing::Kind::grid: return tgt.samples.cols() == n && tgt.samples.rows() > 0 && tgt.step > 0.0;
        }
        return false;
    }();
    if (!ok || (tgt.offset.size() != 0 && tgt.offset.size() != n))
        throw std::invalid_argument("tracking target does not match the state dimension");
}

ProblemSpec controlled_problem(const ProblemSpec& base, const RowMatrix& f, const TimeGrid& grid) {
    if (f.rows() != grid.steps || f.cols() != base.dim())
        throw std::invalid_argument("control must have one row per time step and one column per state component");
    ProblemSpec out = base;
    out.drift = DriftSpec{};
    out.drift.forcing.kind = Forcing::Kind::grid;
    out.drift.forcing.step = grid.step();
    out.drift.forcing.samples = f;
    out.drift.horizon = base.horizon;
    return out;
}

FunctionalReport controlled_edp(const RowMatrix& f, const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    FunctionalReport report = edp_residual(traj, controlled_problem(problem, f, traj.grid()));
    report.functional = "controlled_edp";
    return report;
}

namespace {

RowMatrix target_samples(const ControlProblem& cp, const TimeGrid& grid) {
    RowMatrix out(grid.steps, cp.base.dim());
    Vector row(cp.base.dim());
    for (int k = 0; k < grid.steps; ++k) {
        cp.target.eval_into(grid.time(k), row);
        out.row(k) = row.transpose();
    }
    return out;
}

void check_noise(const ControlProblem& cp, const NoisePtr& noise) {
    validate_control_problem(cp);
    if (!noise) throw std::invalid_argument("control solver needs a noise ensemble");
    if (noise->noise_dim() != cp.base.noise_dim())
        throw std::invalid_argument("noise dimension differs from the problem's diffusion");
    if (std::abs(noise->grid().horizon - cp.base.horizon) > 1e-12 * std::max(1.0, cp.base.horizon))
        throw std::invalid_argument("noise grid horizon differs from the problem horizon");
}

void check_schedule(const std::vector<double>& deltas) {
    if (deltas.empty()) throw std::invalid_argument("empty penalty schedule");
    for (std::size_t i = 0; i < deltas.size(); ++i) {
        if (!(deltas[i] > 0.0)) throw std::invalid_argument("penalty parameters must be > 0");
        if (i > 0 && !(deltas[i] < deltas[i - 1]))
            throw std::invalid_argument("penalty schedule must be strictly decreasing");
    }
}

double control_energy(const ControlProblem& cp, const RowMatrix& f, double h) {
    return 0.5 * cp.gamma * h * f.squaredNorm();
}

// Tracking part ½E Σ h‖u_k − ū_k‖² and, optionally, its gradient with respect
// to the trajectory variables (reverse sweep of u_{k+1} = u_k + h a_k + B_k ΔW_k).
double tracking_part(const TrajectoryEnsemble& traj, const RowMatrix& target, TrajectoryGradient* grad) {
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double h = traj.grid().step();
    const double w = 1.0 / paths;
    std::vector<double> per_path(paths);
    if (grad) {
        grad->initial.assign(traj.initial_data().size(), 0.0);
        grad->rates.assign(traj.rate_data().size(), 0.0);
        grad->coeffs.assign(traj.coeff_data().size(), 0.0);
    }
    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        double sum = 0.0;
        for (int k = 0; k < steps; ++k) sum += h * (traj.state(j, k) - target.row(k).transpose()).squaredNorm();
        per_path[jj] = 0.5 * sum;
        if (!grad) return;
        Vector lambda = Vector::Zero(n);
        for (int k = steps - 1; k >= 0; --k) {
            VectorMap(grad->rates.data() + (jj * steps + k) * n, n) = h * lambda;
            RowMatrixMap(grad->coeffs.data() + (jj * steps + k) * n * m, n, m) =
                lambda * traj.noise().increment(j, k).transpose();
            lambda += w * h * (traj.state(j, k) - target.row(k).transpose());
        }
        VectorMap(grad->initial.data() + jj * n, n) = lambda;
    });
    return w * pairwise_sum(per_path);
}

}  // namespace

double tracking_cost(const ControlProblem& cp, const RowMatrix& f, const TrajectoryEnsemble& traj) {
    if (f.rows() != traj.steps() || f.cols() != traj.dim())
        throw std::invalid_argument("control shape does not match the trajectory");
    return tracking_part(traj, target_samples(cp, traj.grid()), nullptr) + control_energy(cp, f, traj.grid().step());
}

double reduced_objective(const ControlProblem& cp, const NoisePtr& noise, const RowMatrix& f, RowMatrix* grad) {
    check_noise(cp, noise);
    const TimeGrid& grid = noise->grid();
    const ProblemSpec problem = controlled_problem(cp.base, f, grid);
    const SolverResult fwd = solve_forward(problem, noise, Scheme::explicit_euler);
    const TrajectoryEnsemble& traj = fwd.trajectory;
    const RowMatrix target = target_samples(cp, grid);
    const double h = grid.step();
    const double value = tracking_part(traj, target, nullptr) + control_energy(cp, f, h);
    if (!grad) return value;

    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim();
    const double w = 1.0 / paths;
    const auto& diffusion = problem.diffusion;
    const bool multiplicative = diffusion.modulation != Modulation::additive;
    // Per-path contributions Σ h λ_{k+1}, reduced in path order afterwards.
    std::vector<double> parts(static_cast<std::size_t>(paths) * steps * n);
    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector lambda = Vector::Zero(n), next(n);
        for (int k = steps - 1; k >= 0; --k) {
            VectorMap(parts.data() + (jj * steps + k) * n, n) = h * lambda;
            const auto u = traj.state(j, k);
            next = lambda - h * potential_hessian_apply(problem.potential, u, lambda);
            if (multiplicative) {
                const auto dw = noise->increment(j, k);
                for (int i = 0; i < n; ++i)
                    next[i] += diffusion.g_prime(u[i]) * diffusion.sigma.row(i).dot(dw) * lambda[i];
            }
            next += w * h * (u - target.row(k).transpose());
            lambda = next;
        }
    });
    grad->resize(steps, n);
    std::vector<double> column(paths);
    for (int k = 0; k < steps; ++k) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < paths; ++j) column[j] = parts[(static_cast<std::size_t>(j) * steps + k) * n + i];
            (*grad)(k, i) = pairwise_sum(column) + cp.gamma * h * f(k, i);
        }
    }
    return value;
}

ControlResult solve_reduced_baseline(const ControlProblem& cp, const NoisePtr& noise, const ControlOptions& options) {
    check_noise(cp, noise);
    const TimeGrid& grid = noise->grid();
    const int steps = grid.steps, n = cp.base.dim();
    const double scale = std::sqrt(grid.step());
    const auto size = static_cast<Eigen::Index>(steps) * n;

    RowMatrix f(steps, n), g(steps, n);
    const Objective objective = [&](const Vector& x, Vector& grad) {
        VectorMap(f.data(), size) = x / scale;
        const double value = reduced_objective(cp, noise, f, &g);
        grad = ConstVectorMap(g.data(), size) / scale;
        return value;
    };
    const Box box{Vector::Constant(size, -cp.f_max * scale), Vector::Constant(size, cp.f_max * scale)};
    LbfgsOptions lopts;
    lopts.memory = options.memory;
    lopts.max_iters = options.max_iters;
    lopts.g_tol = options.g_tol;
    const OptimizerResult opt = minimize_lbfgs(objective, Vector::Zero(size), lopts, box);

    f = ConstRowMatrixMap(opt.x.data(), steps, n) / scale;
    f = f.cwiseMax(-cp.f_max).cwiseMin(cp.f_max);
    const ProblemSpec problem = controlled_problem(cp.base, f, grid);
    ControlResult result{f, solve_forward(problem, noise, Scheme::explicit_euler).trajectory};
    result.J = tracking_cost(cp, f, result.trajectory);
    result.I = controlled_edp(f, result.trajectory, cp.base).value;
    result.reference_cost = reduced_objective(cp, noise, RowMatrix::Zero(steps, n), nullptr);
    result.baseline_J = result.J;
    result.iterations = opt.iterations;
    result.stalled = opt.stalled;
    return result;
}

ControlResult solve_penalized(const ControlProblem& cp, const NoisePtr& noise, const ControlOptions& options) {
    check_noise(cp, noise);
    check_schedule(options.deltas);
    const TimeGrid& grid = noise->grid();
    const int steps = grid.steps, n = cp.base.dim();
    const double h = grid.step();
    const RowMatrix target = target_samples(cp, grid);

    double baseline_J = std::numeric_limits<double>::quiet_NaN();
    if (options.baseline) baseline_J = solve_reduced_baseline(cp, noise, options).J;

    RowMatrix f = RowMatrix::Zero(steps, n);
    ProblemSpec problem = controlled_problem(cp.base, f, grid);
    TrajectoryEnsemble traj = solve_forward(problem, noise, Scheme::explicit_euler).trajectory;
    const double reference_cost = tracking_cost(cp, f, traj);

    const auto nf = static_cast<Eigen::Index>(steps) * n;
    const auto n_rates = static_cast<Eigen::Index>(traj.rate_data().size());
    const auto n_coeffs = static_cast<Eigen::Index>(traj.coeff_data().size());
    const double sf = std::sqrt(h);
    const double s = std::sqrt(h / traj.paths());

    // Layout [f·√h | u₀ | a·√(h/M) | B·√(h/M)]: each block's curvature is O(1).
    Vector x(nf + n + n_rates + n_coeffs);
    x.head(nf) = ConstVectorMap(f.data(), nf) * sf;
    x.segment(nf, n) = traj.initial(0);
    x.segment(nf + n, n_rates) = ConstVectorMap(traj.rate_data().data(), n_rates) * s;
    x.tail(n_coeffs) = ConstVectorMap(traj.coeff_data().data(), n_coeffs) * s;

    auto unpack = [&](const Vector& xv) {
        VectorMap(f.data(), nf) = xv.head(nf) / sf;
        problem.drift.forcing.samples = f;
        for (int j = 0; j < traj.paths(); ++j) traj.initial(j) = xv.segment(nf, n);
        VectorMap(traj.rate_data().data(), n_rates) = xv.segment(nf + n, n_rates) / s;
        VectorMap(traj.coeff_data().data(), n_coeffs) = xv.tail(n_coeffs) / s;
        traj.reconstruct();
    };

    Vector lower = Vector::Constant(x.size(), -std::numeric_limits<double>::infinity());
    Vector upper = Vector::Constant(x.size(), std::numeric_limits<double>::infinity());
    lower.head(nf).setConstant(-cp.f_max * sf);
    upper.head(nf).setConstant(cp.f_max * sf);
    const Box box{lower, upper};

    ControlResult result{f, traj};
    result.reference_cost = reference_cost;
    result.baseline_J = baseline_J;

    TrajectoryGradient gi, gj;
    for (const double delta : options.deltas) {
        const double inv = 1.0 / delta;
        const Objective objective = [&](const Vector& xv, Vector& grad) {
            unpack(xv);
            const double i_val = edp_residual_with_gradient(traj, problem, &gi, true);
            const double j_val = tracking_part(traj, target, &gj) + control_energy(cp, f, h);
            for (Eigen::Index q = 0; q < nf; ++q)
                grad[q] = (cp.gamma * h * f.data()[q] + inv * gi.forcing[static_cast<std::size_t>(q)]) / sf;
            auto gu0 = grad.segment(nf, n);
            gu0.setZero();
            for (int j = 0; j < traj.paths(); ++j)
                gu0 += ConstVectorMap(gj.initial.data() + j * n, n) + inv * ConstVectorMap(gi.initial.data() + j * n, n);
            grad.segment(nf + n, n_rates) =
                (ConstVectorMap(gj.rates.data(), n_rates) + inv * ConstVectorMap(gi.rates.data(), n_rates)) / s;
            grad.tail(n_coeffs) =
                (ConstVectorMap(gj.coeffs.data(), n_coeffs) + inv * ConstVectorMap(gi.coeffs.data(), n_coeffs)) / s;
            return j_val + inv * i_val;
        };
        LbfgsOptions lopts;
        lopts.memory = options.memory;
        lopts.max_iters = options.max_iters;
        // Rounding in the I/δ part of the gradient grows like 1/δ.
        lopts.g_tol = options.g_tol * std::max(1.0, inv);
        OptimizerResult opt = minimize_lbfgs(objective, std::move(x), lopts, box);
        x = std::move(opt.x);
        unpack(x);

        ContinuationRow row;
        row.delta = delta;
        row.J = tracking_cost(cp, f, traj);
        row.I = edp_residual(traj, problem).value;
        row.penalized = row.J + row.I / delta;
        row.gap = row.J - baseline_J;
        row.within_bound = row.I <= delta * (1.0 + reference_cost);
        row.iterations = opt.iterations;
        row.stalled = opt.stalled;
        result.iterations += opt.iterations;
        result.stalled = result.stalled || opt.stalled;
        result.history.push_back(row);
    }

    result.control = f;
    result.trajectory = traj;
    result.J = result.history.back().J;
    result.I = result.history.back().I;
    return result;
}

Table control_table(const ControlResult& result) {
    Table t;
    t.columns = {"t"};
    const auto n = result.control.cols();
    for (Eigen::Index i = 0; i < n; ++i) t.columns.push_back("f_" + std::to_string(i + 1));
    const TimeGrid& grid = result.trajectory.grid();
    for (Eigen::Index k = 0; k < result.control.rows(); ++k) {
        std::vector<Cell> row{grid.time(static_cast<int>(k))};
        for (Eigen::Index i = 0; i < n; ++i) row.emplace_back(result.control(k, i));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table continuation_table(const ControlResult& result) {
    Table t;
    t.columns = {"delta", "J", "I", "gap"};
    for (const auto& r : result.history) t.rows.push_back({r.delta, r.J, r.I, r.gap});
    return t;
}

}  // namespace edp
