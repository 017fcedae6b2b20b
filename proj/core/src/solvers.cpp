#include "edp/solvers.hpp"

#include "edp/edp.hpp"
#include "edp/parallel.hpp"

#include "pointwise.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>

namespace edp {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_noise(const ProblemSpec& problem, const NoisePtr& noise) {
    if (!noise) throw std::invalid_argument("solver needs a noise ensemble");
    if (noise->noise_dim() != problem.noise_dim())
        throw std::invalid_argument("noise dimension differs from the problem's diffusion");
    if (std::abs(noise->grid().horizon - problem.horizon) > 1e-12 * std::max(1.0, problem.horizon))
        throw std::invalid_argument("noise grid horizon differs from the problem horizon");
    constants_of(problem);
}

}  // namespace

Scheme parse_scheme(std::string_view name) {
    if (name == "explicit") return Scheme::explicit_euler;
    if (name == "semi-implicit") return Scheme::semi_implicit;
    throw std::invalid_argument("unknown scheme '" + std::string(name) + "'");
}

InitKind parse_init(std::string_view name) {
    if (name == "zero") return InitKind::zero;
    if (name == "constant") return InitKind::constant;
    if (name == "forward") return InitKind::forward;
    throw std::invalid_argument("unknown initialization '" + std::string(name) + "'");
}

std::vector<double> SolverResult::objective_history() const {
    std::vector<double> out;
    out.reserve(trace.size());
    for (const auto& rec : trace) out.push_back(rec.objective);
    return out;
}

Table convergence_table(const SolverResult& result) {
    Table t;
    t.columns = {"iter", "objective", "grad_norm", "step_size"};
    for (const auto& rec : result.trace)
        t.rows.push_back({static_cast<std::int64_t>(rec.iter), rec.objective, rec.grad_norm, rec.step_size});
    return t;
}

SolverResult solve_forward(const ProblemSpec& problem, const NoisePtr& noise, Scheme scheme, bool diagnostics) {
    const auto start = Clock::now();
    check_noise(problem, noise);
    const int n = problem.dim();
    const int m = problem.noise_dim();
    const double h = noise->grid().step();
    if (scheme == Scheme::explicit_euler) {
        const double lip = potential_lipschitz_h(problem.potential);
        if (h > 2.0 / lip)
            throw std::invalid_argument("explicit step h exceeds the stability bound 2/Lip(dphi); use semi-implicit");
    }
    const Matrix linear = potential_linear_part(problem.potential);
    Eigen::LLT<Matrix> implicit_solve;
    if (scheme == Scheme::semi_implicit) implicit_solve.compute(Matrix::Identity(n, n) + h * linear);

    TrajectoryEnsemble traj(noise, n);
    parallel_for(static_cast<std::size_t>(traj.paths()), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector dphi(n), drift(n), rhs(n), next(n);
        traj.initial(j) = problem.u0;
        traj.begin_path(j);
        if (scheme == Scheme::explicit_euler) {
            detail::with_dims(n, m, [&](auto nn, auto mm) {
                // Same recursion as advance_state, with the buffers walked directly.
                double* u = traj.path_states(j);
                double* a = traj.rate(j, 0).data();
                double* b = traj.coeff(j, 0).data();
                const double* dw = noise->increment(j, 0).data();
                for (int k = 0; k < traj.steps(); ++k, u += nn, a += nn, b += nn * mm, dw += mm) {
                    detail::potential_gradient_fast(problem.potential, u, dphi.data(), nn);
                    detail::drift_raw(problem.drift, noise->grid().time(k), u, drift.data(), nn);
                    detail::diffusion_raw(problem.diffusion, u, b, nn, mm, mm);
                    for (int i = 0; i < nn; ++i) {
                        a[i] = drift[i] - dphi[i];
                        double acc = u[i] + h * a[i];
                        for (int c = 0; c < mm; ++c) acc += b[i * mm + c] * dw[c];
                        u[nn + i] = acc;
                    }
                }
            });
            return;
        }
        for (int k = 0; k < traj.steps(); ++k) {
            const double t = noise->grid().time(k);
            const auto u = traj.state(j, k);
            detail::potential_gradient_fast(problem.potential, u.data(), dphi.data(), n);
            detail::drift_raw(problem.drift, t, u.data(), drift.data(), n);
            auto b = traj.coeff(j, k);
            detail::diffusion_raw(problem.diffusion, u.data(), b.data(), n, m, m);
            const auto dw = noise->increment(j, k);
            rhs = u + h * (drift - dphi + linear * u) + b * dw;
            next = implicit_solve.solve(rhs);
            traj.rate(j, k) = (next - u - b * dw) / h;
            traj.advance_state(j, k);
        }
    });

    SolverResult result{std::move(traj)};
    result.converged = true;
    if (diagnostics) {
        result.objective = edp_residual(result.trajectory, problem).value;
        result.adaptedness_defect = adaptedness_defect(result.trajectory);
    }
    result.wall_time = seconds_since(start);
    return result;
}

double adaptedness_defect(const TrajectoryEnsemble& traj) {
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double horizon = traj.grid().horizon;
    // corr[k] accumulates Σ_j a_k⁽ʲ⁾(W(T) − W(t_k))⁽ʲ⁾ᵀ, path by path in order.
    std::vector<double> corr(static_cast<std::size_t>(steps) * n * m, 0.0);
    std::vector<double> a_sq(static_cast<std::size_t>(steps), 0.0);
    Vector future(m);
    for (int j = 0; j < paths; ++j) {
        future.setZero();
        for (int k = steps - 1; k >= 0; --k) {
            future += traj.noise().increment(j, k);
            const auto a = traj.rate(j, k);
            RowMatrixMap(corr.data() + static_cast<std::size_t>(k) * n * m, n, m) += a * future.transpose();
            a_sq[k] += a.squaredNorm();
        }
    }
    double defect = 0.0;
    for (int k = 0; k < steps; ++k) {
        if (a_sq[k] == 0.0) continue;
        const double corr_norm = ConstRowMatrixMap(corr.data() + static_cast<std::size_t>(k) * n * m, n, m).norm() / paths;
        const double rms_a = std::sqrt(a_sq[k] / paths);
        const double scale = rms_a * std::sqrt(horizon - traj.grid().time(k));
        defect = std::max(defect, corr_norm / scale);
    }
    return defect;
}

SolverResult solve_variational(const ProblemSpec& problem, const NoisePtr& noise, const VariationalOptions& options) {
    const auto start = Clock::now();
    check_noise(problem, noise);
    if (!(options.tol >= 0.0)) throw std::invalid_argument("tolerance must be nonnegative");
    if (options.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
    const int n = problem.dim();

    TrajectoryEnsemble traj(noise, n);
    if (options.initial) {
        const auto& init = *options.initial;
        if (init.noise_ptr() != noise || init.dim() != n)
            throw std::invalid_argument("initial trajectory must share the solver's noise and dimension");
        traj = init;
    } else if (options.init == InitKind::forward) {
        traj = solve_forward(problem, noise, Scheme::explicit_euler).trajectory;
    } else if (options.init == InitKind::constant) {
        for (int j = 0; j < traj.paths(); ++j) traj.initial(j) = problem.u0;
    }

    const TrajectoryEnsemble initial_point = traj;
    const std::size_t n_rates = traj.rate_data().size();
    const std::size_t n_coeffs = traj.coeff_data().size();
    const double scale = std::sqrt(noise->grid().step() / traj.paths());

    Vector x(static_cast<Eigen::Index>(n + n_rates + n_coeffs));
    x.head(n) = traj.initial(0);
    x.segment(n, n_rates) = ConstVectorMap(traj.rate_data().data(), n_rates) * scale;
    x.tail(n_coeffs) = ConstVectorMap(traj.coeff_data().data(), n_coeffs) * scale;

    auto unpack = [&](const Vector& xv) {
        for (int j = 0; j < traj.paths(); ++j) traj.initial(j) = xv.head(n);
        VectorMap(traj.rate_data().data(), n_rates) = xv.segment(n, n_rates) / scale;
        VectorMap(traj.coeff_data().data(), n_coeffs) = xv.tail(n_coeffs) / scale;
        traj.reconstruct();
    };

    TrajectoryGradient tg;
    const Objective objective = [&](const Vector& xv, Vector& grad) {
        unpack(xv);
        const double f = edp_residual_with_gradient(traj, problem, &tg);
        grad.head(n).setZero();
        for (int j = 0; j < traj.paths(); ++j) grad.head(n) += ConstVectorMap(tg.initial.data() + j * n, n);
        grad.segment(n, n_rates) = ConstVectorMap(tg.rates.data(), n_rates) / scale;
        grad.tail(n_coeffs) = ConstVectorMap(tg.coeffs.data(), n_coeffs) / scale;
        return f;
    };

    LbfgsOptions lopts;
    lopts.memory = options.memory;
    lopts.max_iters = options.max_iters;
    lopts.f_target = options.tol;
    lopts.first_order = options.first_order;
    lopts.g_tol = 0.0;
    OptimizerResult opt = minimize_lbfgs(objective, std::move(x), lopts);
    // Without a single step the starting point is returned untouched, so an
    // exact solution is not disturbed by the scaling round trip.
    if (opt.iterations == 0) {
        traj = initial_point;
        traj.reconstruct();
    } else {
        unpack(opt.x);
    }

    SolverResult result{std::move(traj)};
    result.trace = std::move(opt.history);
    result.objective = edp_residual(result.trajectory, problem).value;
    result.final_gradient_norm = opt.grad_norm;
    result.iterations = opt.iterations;
    result.converged = result.objective <= options.tol;
    result.adaptedness_defect = adaptedness_defect(result.trajectory);
    result.wall_time = seconds_since(start);
    return result;
}

TrajectoryEnsemble solve_linearized(const ProblemSpec& problem, const TrajectoryEnsemble& base,
                                    std::span<const double> f, std::span<const double> g, std::span<const double> z) {
    constants_of(problem);
    const int n = base.dim(), m = base.noise_dim(), paths = base.paths(), steps = base.steps();
    if (n != problem.dim() || m != problem.noise_dim())
        throw std::invalid_argument("base trajectory does not match the problem dimensions");
    const std::size_t nf = static_cast<std::size_t>(paths) * steps * n;
    if (!f.empty() && f.size() != nf) throw std::invalid_argument("linearized forcing f has wrong shape");
    if (!g.empty() && g.size() != nf * m) throw std::invalid_argument("linearized forcing g has wrong shape");
    if (!z.empty() && z.size() != static_cast<std::size_t>(paths) * n)
        throw std::invalid_argument("linearized initial value z has wrong shape");
    const double h = base.grid().step();
    const Matrix linear = potential_linear_part(problem.potential);
    const Eigen::LLT<Matrix> implicit_solve(Matrix::Identity(n, n) + h * linear);
    const auto& diffusion = problem.diffusion;

    TrajectoryEnsemble out(base.noise_ptr(), n);
    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector jac(n), rhs(n), next(n);
        if (!z.empty()) out.initial(j) = ConstVectorMap(z.data() + jj * n, n);
        out.begin_path(j);
        for (int k = 0; k < steps; ++k) {
            const auto u = base.state(j, k);
            const auto v = out.state(j, k);
            const auto dw = base.noise().increment(j, k);
            const std::size_t idx = jj * steps + static_cast<std::size_t>(k);

            auto b = out.coeff(j, k);
            b.setZero();
            if (diffusion.modulation != Modulation::additive) {
                for (int i = 0; i < n; ++i) b.row(i) = diffusion.g_prime(u[i]) * v[i] * diffusion.sigma.row(i);
            }
            if (!g.empty()) b -= ConstRowMatrixMap(g.data() + idx * n * m, n, m);

            const Matrix stiff_rest = potential_hessian(problem.potential, u) - linear;
            drift_jacobian_diag_into(problem.drift, u, jac);
            rhs = v + h * (jac.cwiseProduct(v) - stiff_rest * v) + b * dw;
            if (!f.empty()) rhs -= h * ConstVectorMap(f.data() + idx * n, n);
            next = implicit_solve.solve(rhs);
            out.rate(j, k) = (next - v - b * dw) / h;
            out.advance_state(j, k);
        }
    });
    return out;
}

}  // namespace edp
