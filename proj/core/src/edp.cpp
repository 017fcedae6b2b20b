#include "edp/edp.hpp"

#include "edp/parallel.hpp"
#include "edp_internal.hpp"
#include "pointwise.hpp"

#include <algorithm>
#include <cmath>

namespace edp {

double FunctionalReport::term(std::string_view name) const {
    for (const auto& t : terms)
        if (t.name == name) return t.value;
    throw std::out_of_range("no functional term named '" + std::string(name) + "'");
}

Table to_table(const FunctionalReport& report) {
    Table t;
    t.columns = {"term", "value", "std_err"};
    for (const auto& term : report.terms) t.rows.push_back({term.name, term.value, term.std_err});
    t.rows.push_back({std::string("total"), report.value, report.mc_std_err});
    return t;
}

namespace detail {

void check_dimensions(const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    if (traj.dim() != problem.dim()) throw std::invalid_argument("trajectory and problem state dimensions differ");
    if (traj.noise_dim() != problem.noise_dim())
        throw std::invalid_argument("trajectory and problem noise dimensions differ");
    const double slack = 1e-12 * std::max(1.0, problem.horizon);
    if (std::abs(traj.grid().horizon - problem.horizon) > slack)
        throw std::invalid_argument("trajectory grid horizon differs from the problem horizon");
}

// Per-path term values laid out [path][term]; reduced in path order.
FunctionalReport reduce_terms(std::string functional, const std::vector<std::string>& names,
                              const std::vector<double>& per_path, int paths) {
    const std::size_t nterms = names.size();
    FunctionalReport report;
    report.functional = std::move(functional);
    std::vector<double> column(paths), totals(paths, 0.0);
    for (std::size_t t = 0; t < nterms; ++t) {
        for (int j = 0; j < paths; ++j) {
            column[j] = per_path[static_cast<std::size_t>(j) * nterms + t];
            totals[j] += column[j];
        }
        const MeanEstimate est = mean_estimate(column);
        report.terms.push_back({names[t], est.mean, est.std_err});
    }
    double value = 0.0;
    for (const auto& term : report.terms) value += term.value;
    report.value = value;
    report.mc_std_err = mean_estimate(totals).std_err;
    return report;
}

}  // namespace detail

using detail::check_dimensions;
using detail::reduce_terms;

FunctionalReport edp_residual(const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    check_dimensions(traj, problem);
    const double big_c = constants_of(problem).C_phi;
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double h = traj.grid().step();
    const std::vector<std::string> names{"drift_residual", "diffusion_mismatch", "initial_mismatch"};
    std::vector<double> per_path(static_cast<std::size_t>(paths) * names.size());

    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        std::vector<double> buf(static_cast<std::size_t>(2 * n + n * m));
        double drift_sum = 0.0, diff_sum = 0.0;
        detail::with_dims(n, m, [&](auto nn, auto mm) {
            double* grad = buf.data();
            double* drift = grad + nn;
            double* e = drift + nn;
            const double* u = traj.state(j, 0).data();
            const double* a = traj.rate(j, 0).data();
            const double* b = traj.coeff(j, 0).data();
            for (int k = 0; k < steps; ++k, u += nn, a += nn, b += nn * mm) {
                detail::potential_gradient_fast(problem.potential, u, grad, nn);
                detail::drift_raw(problem.drift, traj.grid().time(k), u, drift, nn);
                double r_sq = 0.0;
                for (int i = 0; i < nn; ++i) {
                    const double r = a[i] - (drift[i] - grad[i]);
                    r_sq += r * r;
                }
                drift_sum += h * r_sq;
                detail::diffusion_raw(problem.diffusion, u, e, nn, mm, mm);
                for (int i = 0; i < nn * mm; ++i) e[i] = b[i] - e[i];
                diff_sum += h * detail::weighted_trace_raw(problem.geometry.P, e, nn, mm, mm);
            }
        });
        const Vector d0 = traj.initial(j) - problem.u0;
        double* out = per_path.data() + jj * names.size();
        out[0] = 0.5 * drift_sum;
        out[1] = 2.0 * big_c * diff_sum;
        out[2] = problem.geometry.norm_sq(d0);
    });
    return reduce_terms("edp_residual", names, per_path, paths);
}

FunctionalReport edp_definitional(const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    check_dimensions(traj, problem);
    const double big_c = constants_of(problem).C_phi;
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double h = traj.grid().step();
    const bool regularized = problem.potential.yosida_level > 0.0;
    const std::vector<std::string> names{"boundary_energy", "drift_rate_energy", "residual_energy", "cross_term",
                                         "trace_term",      "diffusion_mismatch", "initial_mismatch"};
    std::vector<double> per_path(static_cast<std::size_t>(paths) * names.size());

    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        std::vector<double> buf(static_cast<std::size_t>(2 * n + n * m));
        double rate_energy = 0.0, residual_energy = 0.0, cross = 0.0, trace = 0.0, diff = 0.0;
        detail::with_dims(n, m, [&](auto nn, auto mm) {
            double* grad = buf.data();
            double* drift = grad + nn;
            double* e = drift + nn;
            const double* u = traj.state(j, 0).data();
            const double* a = traj.rate(j, 0).data();
            const double* b = traj.coeff(j, 0).data();
            for (int k = 0; k < steps; ++k, u += nn, a += nn, b += nn * mm) {
                detail::potential_gradient_fast(problem.potential, u, grad, nn);
                detail::drift_raw(problem.drift, traj.grid().time(k), u, drift, nn);
                double a_sq = 0.0, res_sq = 0.0, a_drift = 0.0;
                for (int i = 0; i < nn; ++i) {
                    a_sq += a[i] * a[i];
                    const double res = grad[i] - drift[i];
                    res_sq += res * res;
                    a_drift += a[i] * drift[i];
                }
                rate_energy += h * a_sq;
                residual_energy += h * res_sq;
                cross += h * a_drift;
                trace += h * (regularized ? trace_term(problem.potential, ConstVectorMap(u, nn),
                                                       ConstRowMatrixMap(b, nn, mm))
                                          : detail::trace_raw(problem.potential, u, b, nn, mm, mm));
                detail::diffusion_raw(problem.diffusion, u, e, nn, mm, mm);
                for (int i = 0; i < nn * mm; ++i) e[i] = b[i] - e[i];
                diff += h * detail::weighted_trace_raw(problem.geometry.P, e, nn, mm, mm);
            }
        });
        const Vector d0 = traj.initial(j) - problem.u0;
        double* out = per_path.data() + jj * names.size();
        out[0] = potential_value(problem.potential, traj.state(j, steps)) -
                 potential_value(problem.potential, traj.state(j, 0));
        out[1] = 0.5 * rate_energy;
        out[2] = 0.5 * residual_energy;
        out[3] = -cross;
        out[4] = -0.5 * trace;
        out[5] = 2.0 * big_c * diff;
        out[6] = problem.geometry.norm_sq(d0);
    });
    return reduce_terms("edp_definitional", names, per_path, paths);
}

double edp_residual_with_gradient(const TrajectoryEnsemble& traj, const ProblemSpec& problem,
                                  TrajectoryGradient* grad, bool with_forcing) {
    check_dimensions(traj, problem);
    const double big_c = constants_of(problem).C_phi;
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double h = traj.grid().step();
    const double w = 1.0 / paths;
    const Matrix& p = problem.geometry.P;
    const auto& diffusion = problem.diffusion;
    const bool multiplicative = diffusion.modulation != Modulation::additive;

    std::vector<double> per_path(paths);
    std::vector<double> forcing_parts;
    if (grad) {
        grad->initial.assign(traj.initial_data().size(), 0.0);
        grad->rates.assign(traj.rate_data().size(), 0.0);
        grad->coeffs.assign(traj.coeff_data().size(), 0.0);
        if (with_forcing) forcing_parts.assign(traj.rate_data().size(), 0.0);
    }

    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector dphi(n), drift(n), jac(n);
        // Residuals r_k and mismatches E_k are kept for the reverse sweep.
        Matrix r(n, steps);
        std::vector<double> e(grad ? static_cast<std::size_t>(steps) * n * m : 0);
        RowMatrix ek(n, m);
        double value = 0.0, diff_sum = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double t = traj.grid().time(k);
            const auto u = traj.state(j, k);
            detail::potential_gradient_fast(problem.potential, u.data(), dphi.data(), n);
            detail::drift_raw(problem.drift, t, u.data(), drift.data(), n);
            const double* a = traj.rate(j, k).data();
            double* rk = r.col(k).data();
            double r_sq = 0.0;
            for (int i = 0; i < n; ++i) {
                rk[i] = a[i] - (drift[i] - dphi[i]);
                r_sq += rk[i] * rk[i];
            }
            value += 0.5 * h * r_sq;
            detail::diffusion_raw(diffusion, u.data(), ek.data(), n, m, m);
            const double* b = traj.coeff(j, k).data();
            for (int i = 0; i < n * m; ++i) ek.data()[i] = b[i] - ek.data()[i];
            diff_sum += h * detail::weighted_trace_raw(problem.geometry.P, ek.data(), n, m, m);
            if (grad) RowMatrixMap(e.data() + static_cast<std::size_t>(k) * n * m, n, m) = ek;
        }
        const Vector d0 = traj.initial(j) - problem.u0;
        value += 2.0 * big_c * diff_sum + problem.geometry.norm_sq(d0);
        per_path[jj] = value;
        if (!grad) return;

        // Reverse sweep: lambda holds dI/du_{k+1}; u_N does not enter the sums.
        Vector lambda = Vector::Zero(n), du(n);
        RowMatrix pe(n, m);
        for (int k = steps - 1; k >= 0; --k) {
            const auto u = traj.state(j, k);
            const auto dw = traj.noise().increment(j, k);
            const auto rk = r.col(k);
            VectorMap ga(grad->rates.data() + (jj * steps + k) * n, n);
            RowMatrixMap gb(grad->coeffs.data() + (jj * steps + k) * n * m, n, m);
            ga = w * h * rk + h * lambda;
            pe.noalias() = p.lazyProduct(ConstRowMatrixMap(e.data() + static_cast<std::size_t>(k) * n * m, n, m));
            gb = (4.0 * w * big_c * h) * pe + lambda * dw.transpose();
            if (with_forcing) VectorMap(forcing_parts.data() + (jj * steps + k) * n, n) = -w * h * rk;

            du = potential_hessian_apply(problem.potential, u, rk);
            drift_jacobian_diag_into(problem.drift, u, jac);
            du -= jac.cwiseProduct(rk);
            du *= w * h;
            if (multiplicative) {
                for (int i = 0; i < n; ++i) {
                    const double gp = diffusion.g_prime(u[i]);
                    if (gp != 0.0) du[i] -= 4.0 * w * big_c * h * gp * pe.row(i).dot(diffusion.sigma.row(i));
                }
            }
            lambda += du;
        }
        VectorMap(grad->initial.data() + jj * n, n) = lambda + 2.0 * w * (p * d0);
    });

    if (grad && with_forcing) {
        grad->forcing.assign(static_cast<std::size_t>(steps) * n, 0.0);
        std::vector<double> column(paths);
        for (int k = 0; k < steps; ++k) {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < paths; ++j)
                    column[j] = forcing_parts[(static_cast<std::size_t>(j) * steps + k) * n + i];
                grad->forcing[static_cast<std::size_t>(k) * n + i] = pairwise_sum(column);
            }
        }
    }
    return pairwise_sum(per_path) * w;
}

TrajectoryGradient edp_gradient(const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    TrajectoryGradient grad;
    edp_residual_with_gradient(traj, problem, &grad, true);
    return grad;
}

}  // namespace edp
