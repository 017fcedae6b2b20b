#include "edp/edp.hpp"

#include "edp/parallel.hpp"
#include "edp_internal.hpp"

#include <Eigen/Cholesky>

#include <cmath>

namespace edp {
namespace {

constexpr double kNewtonTolerance = 1e-12;
constexpr int kMaxNewtonIterations = 200;

double log_cosh(double x) {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

double sech_sq(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

}  // namespace

ConjugatePair::ConjugatePair(double curvature, double beta) : curvature_(curvature), beta_(beta) {
    if (!(curvature > 0.0 && std::isfinite(curvature))) throw std::invalid_argument("eta needs positive curvature");
    if (!(beta >= 0.0 && std::isfinite(beta))) throw std::invalid_argument("eta log-cosh weight must be nonnegative");
}

ConjugatePair ConjugatePair::quadratic(double curvature) { return ConjugatePair(curvature, 0.0); }

ConjugatePair ConjugatePair::quadratic_logcosh(double curvature, double beta) { return ConjugatePair(curvature, beta); }

double ConjugatePair::value(double x) const { return 0.5 * curvature_ * x * x + beta_ * log_cosh(x); }

double ConjugatePair::derivative(double x) const { return curvature_ * x + beta_ * std::tanh(x); }

double ConjugatePair::derivative_inverse(double w) const {
    if (!std::isfinite(w)) throw std::domain_error("conjugate argument must be finite");
    if (beta_ == 0.0) return w / curvature_;
    // η′ is increasing with slope in [c, c+β]; the root lies between w/(c+β) and w/c.
    double lo = std::min(w / curvature_, w / (curvature_ + beta_));
    double hi = std::max(w / curvature_, w / (curvature_ + beta_));
    double v = w / (curvature_ + beta_);
    const double tol = kNewtonTolerance * std::max(1.0, std::abs(w));
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        const double f = derivative(v) - w;
        if (std::abs(f) <= tol) return v;
        if (f > 0.0) hi = v; else lo = v;
        double next = v - f / (curvature_ + beta_ * sech_sq(v));
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (next == v) return v;
        v = next;
    }
    if (std::abs(derivative(v) - w) <= tol) return v;
    throw NumericalError("conjugate Newton iteration did not converge");
}

double ConjugatePair::conjugate(double w) const {
    if (beta_ == 0.0) return 0.5 * w * w / curvature_;
    const double v = derivative_inverse(w);
    return w * v - value(v);
}

double fenchel_conjugate(const ConjugatePair& pair, double w) { return pair.conjugate(w); }

DissipationOperator DissipationOperator::broadcast(const ConjugatePair& pair, int dim) {
    return DissipationOperator{std::vector<ConjugatePair>(static_cast<std::size_t>(dim), pair)};
}

DissipationOperator DissipationOperator::from_matrix(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("dissipation matrix must be square");
    Matrix off = m;
    off.diagonal().setZero();
    if (!off.isZero(0.0)) throw UnsupportedError("only diagonal (componentwise) dissipation operators are supported");
    DissipationOperator op;
    for (Eigen::Index i = 0; i < m.rows(); ++i) op.components.push_back(ConjugatePair::quadratic(m(i, i)));
    return op;
}

FunctionalReport edp2_fenchel(const TrajectoryEnsemble& traj, const ProblemSpec& problem,
                              const DissipationOperator& op) {
    detail::check_dimensions(traj, problem);
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    if (static_cast<int>(op.components.size()) != n)
        throw std::invalid_argument("dissipation operator dimension differs from the state dimension");
    const double big_c = constants_of(problem).C_phi;
    const double h = traj.grid().step();
    const std::vector<std::string> names{"boundary_energy", "fenchel_energy", "cross_term", "trace_term",
                                         "diffusion_mismatch", "initial_mismatch"};
    std::vector<double> per_path(static_cast<std::size_t>(paths) * names.size());

    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector grad(n), drift(n);
        RowMatrix g(n, m), e(n, m);
        double psi = 0.0, cross = 0.0, trace = 0.0, diff = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double t = traj.grid().time(k);
            const auto u = traj.state(j, k);
            const auto a = traj.rate(j, k);
            const auto b = traj.coeff(j, k);
            potential_gradient_into(problem.potential, u, grad);
            drift_eval_into(problem.drift, t, u, drift);
            for (int i = 0; i < n; ++i) psi += h * op.components[i].fenchel(a[i], drift[i] - grad[i]);
            cross += h * a.dot(drift);
            trace += h * trace_term(problem.potential, u, b);
            diffusion_eval_into(problem.diffusion, t, u, g);
            e = b - g;
            diff += h * problem.geometry.hs_norm_sq(e);
        }
        const Vector d0 = traj.initial(j) - problem.u0;
        double* out = per_path.data() + jj * names.size();
        out[0] = potential_value(problem.potential, traj.state(j, steps)) -
                 potential_value(problem.potential, traj.state(j, 0));
        out[1] = psi;
        out[2] = -cross;
        out[3] = -0.5 * trace;
        out[4] = 2.0 * big_c * diff;
        out[5] = problem.geometry.norm_sq(d0);
    });
    return detail::reduce_terms("edp2_fenchel", names, per_path, paths);
}

FunctionalReport edp2_fenchel(const TrajectoryEnsemble& traj, const ProblemSpec& problem, const ConjugatePair& pair) {
    return edp2_fenchel(traj, problem, DissipationOperator::broadcast(pair, traj.dim()));
}

double potential_conjugate(const PotentialSpec& spec, ConstVectorRef w) {
    if (!w.allFinite()) throw std::domain_error("potential_conjugate: non-finite input");
    double regularization = 0.0;
    if (spec.yosida_level > 0.0) regularization = 0.5 * spec.yosida_level * w.squaredNorm();
    const double beta = spec.logcosh_weight();
    if (beta == 0.0) return 0.5 * w.dot(spec.A.llt().solve(w)) + regularization;

    Matrix off = spec.A;
    off.diagonal().setZero();
    if (!off.isZero(0.0)) throw UnsupportedError("conjugate of log-cosh potentials needs a diagonal A");
    double total = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i)
        total += ConjugatePair::quadratic_logcosh(spec.A(i, i), beta).conjugate(w[i]);
    return total + regularization;
}

FunctionalReport ben_functional(const TrajectoryEnsemble& traj, const ProblemSpec& problem) {
    detail::check_dimensions(traj, problem);
    {
        // Reject unsupported families before any path work.
        const Vector probe = Vector::Zero(problem.dim());
        potential_conjugate(problem.potential, probe);
    }
    const int paths = traj.paths(), steps = traj.steps(), n = traj.dim(), m = traj.noise_dim();
    const double h = traj.grid().step();
    const std::vector<std::string> names{"fenchel_gap", "diffusion_mismatch", "initial_mismatch"};
    std::vector<double> per_path(static_cast<std::size_t>(paths) * names.size());

    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector drift(n), v(n);
        RowMatrix g(n, m), e(n, m);
        double gap = 0.0, diff = 0.0;
        for (int k = 0; k < steps; ++k) {
            const double t = traj.grid().time(k);
            const auto u = traj.state(j, k);
            drift_eval_into(problem.drift, t, u, drift);
            v = drift - traj.rate(j, k);
            gap += h * (potential_value(problem.potential, u) + potential_conjugate(problem.potential, v) - v.dot(u));
            diffusion_eval_into(problem.diffusion, t, u, g);
            e = traj.coeff(j, k) - g;
            diff += h * problem.geometry.hs_norm_sq(e);
        }
        double* out = per_path.data() + jj * names.size();
        out[0] = gap;
        out[1] = 0.5 * diff;
        out[2] = (traj.initial(j) - problem.u0).squaredNorm();
    });
    return detail::reduce_terms("ben_functional", names, per_path, paths);
}

}  // namespace edp
