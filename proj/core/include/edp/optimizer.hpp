#pragma once

#include "edp/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace edp {

/// Objective value; writes the gradient into `grad` (already sized).
using Objective = std::function<double(const Vector& x, Vector& grad)>;

struct Box {
    Vector lower;  // -inf for free components
    Vector upper;  // +inf for free components

    Vector project(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }
};

struct LbfgsOptions {
    int memory = 20;
    int max_iters = 1000;
    double f_target = -std::numeric_limits<double>::infinity();  ///< stop once f ≤ f_target
    double g_tol = 0.0;                                          ///< stop once ‖projected gradient‖ ≤ g_tol
    double armijo = 1e-4;
    int max_backtracks = 60;
    bool first_order = false;  ///< projected steepest descent instead of quasi-Newton
    /// Stop after `patience` consecutive accepted steps whose decrease is at
    /// most f_rel_tol·|f|, i.e. once progress is at rounding level.
    double f_rel_tol = 1e-15;
    int patience = 10;
};

struct IterationRecord {
    int iter = 0;
    double objective = 0.0;
    double grad_norm = 0.0;
    double step_size = 0.0;
};

struct OptimizerResult {
    Vector x;
    double objective = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    bool reached_target = false;
    bool stationary = false;
    bool stalled = false;
    bool stagnated = false;  ///< stopped by the f_rel_tol rule
    std::vector<IterationRecord> history;  ///< accepted iterates, starting with iteration 0
};

/// Limited-memory BFGS with Armijo backtracking. With a box, iterates are
/// projected and pinned components (at a bound, gradient pointing outward)
/// are frozen for the direction computation.
OptimizerResult minimize_lbfgs(const Objective& objective, Vector x0, const LbfgsOptions& options,
                               const std::optional<Box>& box = std::nullopt);

}  // namespace edp
