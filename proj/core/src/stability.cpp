#include "edp/stability.hpp"

#include "edp/edp.hpp"
#include "edp/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace edp {

FamilyKind parse_family(std::string_view name) {
    if (name == "initial") return FamilyKind::initial_shift;
    if (name == "matrix") return FamilyKind::matrix_shift;
    if (name == "moreau-yosida") return FamilyKind::moreau_yosida;
    if (name == "drift") return FamilyKind::drift_shift;
    if (name == "diffusion") return FamilyKind::diffusion_shift;
    throw std::invalid_argument("unknown perturbation family '" + std::string(name) + "'");
}

std::string to_string(FamilyKind kind) {
    switch (kind) {
        case FamilyKind::initial_shift: return "initial";
        case FamilyKind::matrix_shift: return "matrix";
        case FamilyKind::moreau_yosida: return "moreau-yosida";
        case FamilyKind::drift_shift: return "drift";
        case FamilyKind::diffusion_shift: return "diffusion";
    }
    return "unknown";
}

std::vector<FamilyKind> all_families() {
    return {FamilyKind::initial_shift, FamilyKind::matrix_shift, FamilyKind::moreau_yosida, FamilyKind::drift_shift,
            FamilyKind::diffusion_shift};
}

StabilityMode parse_stability_mode(std::string_view name) {
    if (name == "exact-solve") return StabilityMode::exact_solve;
    if (name == "approximate-minimizer") return StabilityMode::approximate_minimizer;
    throw std::invalid_argument("unknown stability mode '" + std::string(name) + "'");
}

PerturbationFamily PerturbationFamily::standard(FamilyKind kind, const ProblemSpec& problem,
                                                std::vector<double> schedule) {
    const int n = problem.dim(), m = problem.noise_dim();
    PerturbationFamily family;
    family.kind = kind;
    family.schedule = std::move(schedule);
    switch (kind) {
        case FamilyKind::initial_shift:
        case FamilyKind::drift_shift: family.direction = Vector::Ones(n); break;
        case FamilyKind::matrix_shift: family.matrix_direction = Matrix::Identity(n, n); break;
        case FamilyKind::diffusion_shift: family.diffusion_direction = RowMatrix::Ones(n, m); break;
        case FamilyKind::moreau_yosida: break;
    }
    return family;
}

ProblemSpec perturb_problem(const ProblemSpec& problem, const PerturbationFamily& family, double eps) {
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("perturbation size must be finite and >= 0");
    if (eps == 0.0) return problem;
    const int n = problem.dim(), m = problem.noise_dim();
    ProblemSpec out = problem;
    switch (family.kind) {
        case FamilyKind::initial_shift:
            if (family.direction.size() != n) throw std::invalid_argument("initial shift direction has wrong size");
            out.u0 += eps * family.direction;
            break;
        case FamilyKind::matrix_shift: {
            const Matrix& d = family.matrix_direction;
            if (d.rows() != n || d.cols() != n) throw std::invalid_argument("matrix shift direction has wrong shape");
            out.potential.A += eps * d;
            Eigen::SelfAdjointEigenSolver<Matrix> eig(out.potential.A, Eigen::EigenvaluesOnly);
            if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0)
                throw std::invalid_argument("shifted matrix A + eps*dA is not SPD");
            break;
        }
        case FamilyKind::moreau_yosida:
            if (problem.potential.yosida_level > 0.0)
                throw UnsupportedError("potential is already Moreau-Yosida regularized");
            out.potential.yosida_level = eps;
            break;
        case FamilyKind::drift_shift: {
            if (family.direction.size() != n) throw std::invalid_argument("drift shift direction has wrong size");
            Vector& offset = out.drift.forcing.offset;
            if (offset.size() == 0) offset = Vector::Zero(n);
            offset += eps * family.direction;
            break;
        }
        case FamilyKind::diffusion_shift: {
            const RowMatrix& d = family.diffusion_direction;
            if (d.rows() != n || d.cols() != m) throw std::invalid_argument("diffusion shift direction has wrong shape");
            RowMatrix& shift = out.diffusion.shift;
            if (shift.size() == 0) shift = RowMatrix::Zero(n, m);
            shift += eps * d;
            break;
        }
    }
    out.constants.reset();
    certify(out);
    return out;
}

double StabilityReport::slope_prediction() const {
    if (rows.size() < 2) throw std::logic_error("slope prediction needs two schedule members");
    if (rows[0].err == 0.0) return 0.0;
    return rows[1].err * rows[1].err / rows[0].err;
}

bool StabilityReport::err_nonincreasing(double slack) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].err > rows[i - 1].err + slack) return false;
    return true;
}

namespace {

struct ErrorEstimate {
    double err = 0.0;
    double std_err = 0.0;
};

ErrorEstimate pathwise_error(const TrajectoryEnsemble& v, const TrajectoryEnsemble& u) {
    const int paths = u.paths(), steps = u.steps();
    std::vector<double> sq(paths);
    ErrorEstimate best;
    for (int k = 0; k <= steps; ++k) {
        for (int j = 0; j < paths; ++j) sq[j] = (v.state(j, k) - u.state(j, k)).squaredNorm();
        const MeanEstimate est = mean_estimate(sq);
        const double err = std::sqrt(est.mean);
        if (err > best.err) best = {err, 0.5 * est.std_err / err};
    }
    return best;
}

}  // namespace

StabilityReport stability_experiment(const ProblemSpec& problem, const PerturbationFamily& family,
                                     const NoisePtr& noise, const StabilityOptions& options) {
    const auto& schedule = family.schedule;
    if (schedule.empty()) throw std::invalid_argument("empty perturbation schedule");
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!(schedule[i] >= 0.0)) throw std::invalid_argument("schedule entries must be >= 0");
        if (i > 0 && !(schedule[i] < schedule[i - 1]))
            throw std::invalid_argument("perturbation schedule must be strictly decreasing");
    }
    if (!(options.envelope >= 1.0)) throw std::invalid_argument("constant envelope factor must be >= 1");

    StabilityReport report;
    report.family = family.kind;
    report.mode = options.mode;
    report.base_constants = constants_of(problem);
    const SolverResult reference = solve_forward(problem, noise, options.scheme);
    const double lo = report.base_constants.c_phi / options.envelope;
    const double hi = report.base_constants.C_phi * options.envelope;

    for (const double eps : schedule) {
        const ProblemSpec member = perturb_problem(problem, family, eps);
        StabilityRow row;
        row.eps = eps;
        row.constants = constants_of(member);
        if (row.constants.c_phi < lo || row.constants.C_phi > hi) report.constants_within_envelope = false;

        SolverResult v = [&] {
            if (options.mode == StabilityMode::exact_solve) return solve_forward(member, noise, options.scheme);
            VariationalOptions vopts = options.variational;
            vopts.tol = eps;
            return solve_variational(member, noise, vopts);
        }();
        row.converged = v.converged;
        row.I_eps = edp_residual(v.trajectory, member).value;
        row.I_zero_cross = edp_residual(v.trajectory, problem).value;
        const ErrorEstimate e = pathwise_error(v.trajectory, reference.trajectory);
        row.err = e.err;
        row.std_err = e.std_err;
        report.rows.push_back(row);
    }
    return report;
}

Table to_table(const StabilityReport& report) {
    Table t;
    t.columns = {"eps", "I_eps", "I_zero_cross", "err", "std_err"};
    for (const auto& r : report.rows) t.rows.push_back({r.eps, r.I_eps, r.I_zero_cross, r.err, r.std_err});
    return t;
}

}  // namespace edp
