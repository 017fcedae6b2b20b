#pragma once

#include "edp/edp.hpp"
#include "edp/ito.hpp"
#include "edp/model.hpp"
#include "edp/optimizer.hpp"
#include "edp/table.hpp"

#include <vector>

namespace edp {

/// Tracking problem with a deterministic, piecewise-constant control:
/// J(f,u) = ½E Σ_k h‖u_k − ū(t_k)‖² + (γ/2) Σ_k h‖f_k‖², subject to ‖f_k‖_∞ ≤ f_max.
/// The drift of `base` is ignored; the controlled equation uses F(t,u) = f(t).
struct ControlProblem {
    ProblemSpec base;
    Forcing target;  ///< ū(t), evaluated at the grid times
    double gamma = 0.1;
    double f_max = 10.0;
};

/// Throws std::invalid_argument for γ ≤ 0, f_max ≤ 0 or mismatched dimensions.
void validate_control_problem(const ControlProblem& cp);

/// `base` with its drift replaced by the grid control f (N×n rows).
ProblemSpec controlled_problem(const ProblemSpec& base, const RowMatrix& f, const TimeGrid& grid);

/// Residual functional with F(·,u) replaced by f; zero iff traj is the explicit
/// forward solve driven by f from u⁰.
FunctionalReport controlled_edp(const RowMatrix& f, const TrajectoryEnsemble& traj, const ProblemSpec& problem);

double tracking_cost(const ControlProblem& cp, const RowMatrix& f, const TrajectoryEnsemble& traj);

/// f ↦ J(f, S_h(f)) with S_h the explicit forward solve on `noise`. When
/// `grad` is non-null it receives the discrete-adjoint gradient (N×n).
double reduced_objective(const ControlProblem& cp, const NoisePtr& noise, const RowMatrix& f, RowMatrix* grad);

struct ContinuationRow {
    double delta = 0.0;
    double J = 0.0;
    double I = 0.0;
    double penalized = 0.0;  ///< F_δ = J + I/δ
    double gap = 0.0;        ///< J − J_baseline (NaN without a baseline)
    bool within_bound = false;  ///< I ≤ δ(1 + J(f₀, S(f₀))) with f₀ = 0
    int iterations = 0;
    bool stalled = false;
};

struct ControlResult {
    RowMatrix control;  ///< N×n, inside the box
    TrajectoryEnsemble trajectory;
    double J = 0.0;
    double I = 0.0;
    double reference_cost = 0.0;  ///< J(f₀, S(f₀)) for f₀ = 0
    double baseline_J = 0.0;      ///< NaN when no baseline was run
    std::vector<ContinuationRow> history{};
    int iterations = 0;
    bool stalled = false;
};

struct ControlOptions {
    std::vector<double> deltas{1.0, 1e-1, 1e-2, 1e-3, 1e-4};
    int max_iters = 20000;  ///< per continuation stage
    int memory = 20;
    double g_tol = 1e-9;    ///< on the scaled projected gradient; penalized stages use g_tol·max(1, 1/δ)
    bool baseline = true;
};

/// Projected L-BFGS on the reduced objective; gradients by the discrete adjoint.
ControlResult solve_reduced_baseline(const ControlProblem& cp, const NoisePtr& noise,
                                     const ControlOptions& options = {});

/// Minimizes F_δ = J + I/δ jointly over (f, u₀, a, B) for each δ of the
/// strictly decreasing schedule, warm-started from the previous stage and
/// initially from (0, S_h(0)).
ControlResult solve_penalized(const ControlProblem& cp, const NoisePtr& noise, const ControlOptions& options = {});

/// Columns t, f_1..f_n.
Table control_table(const ControlResult& result);
/// Columns delta, J, I, gap.
Table continuation_table(const ControlResult& result);

}  // namespace edp
