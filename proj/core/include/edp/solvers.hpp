#pragma once

#include "edp/ito.hpp"
#include "edp/model.hpp"
#include "edp/optimizer.hpp"
#include "edp/table.hpp"

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace edp {

enum class Scheme { explicit_euler, semi_implicit };

Scheme parse_scheme(std::string_view name);

struct SolverResult {
    TrajectoryEnsemble trajectory;
    std::vector<IterationRecord> trace{};///< variational solver only
    double objective = 0.0;              ///< residual functional at the returned trajectory
    double final_gradient_norm = 0.0;    ///< in the optimizer's scaled variables
    int iterations = 0;
    bool converged = false;
    /// Largest normalized sample correlation between a_k and the future
    /// Brownian increment W(T) − W(t_k); O(M^{-1/2}) for adapted trajectories.
    double adaptedness_defect = 0.0;
    double wall_time = 0.0;

    std::vector<double> objective_history() const;
};

/// Columns iter, objective, grad_norm, step_size.
Table convergence_table(const SolverResult& result);

/// Time stepping on the noise's grid. Explicit: a_k = F − ∂φ(u_k), B_k = G(u_k).
/// Semi-implicit: (I + hL)u_{k+1} = u_k + h(F − (∂φ − L)(u_k)) + GΔW with L the
/// linear part of ∂φ; the recorded rates reproduce the states exactly.
/// Throws std::invalid_argument when the explicit step exceeds 2/Lip(∂φ).
/// With `diagnostics` false the objective and adaptedness defect are left at
/// zero, which saves two passes over the ensemble.
SolverResult solve_forward(const ProblemSpec& problem, const NoisePtr& noise, Scheme scheme,
                           bool diagnostics = true);

enum class InitKind { zero, constant, forward };

InitKind parse_init(std::string_view name);

struct VariationalOptions {
    InitKind init = InitKind::zero;
    double tol = 1e-8;
    int max_iters = 2000;
    int memory = 20;
    bool first_order = false;
    /// Overrides `init` when set; must share the problem's noise.
    std::optional<TrajectoryEnsemble> initial;
};

/// Minimizes the residual functional over (shared u₀, per-path a, B) by
/// L-BFGS. Non-convergence is reported through `converged`, not thrown.
SolverResult solve_variational(const ProblemSpec& problem, const NoisePtr& noise, const VariationalOptions& options);

double adaptedness_defect(const TrajectoryEnsemble& traj);

/// Linearization along `base`: dv + D_G∂φ(u)v dt = (D_uF(u)v − f)dt + (D_uG(u)v − g)dW,
/// v(0) = z, stepped semi-implicitly in the linear part of ∂φ. f is M×N×n,
/// g is M×N×n×m and z is M×n (flat, row-major); empty spans mean zero.
TrajectoryEnsemble solve_linearized(const ProblemSpec& problem, const TrajectoryEnsemble& base,
                                    std::span<const double> f, std::span<const double> g, std::span<const double> z);

}  // namespace edp
