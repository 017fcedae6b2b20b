#pragma once

#include "edp/ito.hpp"
#include "edp/model.hpp"
#include "edp/solvers.hpp"
#include "edp/table.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace edp {

enum class FamilyKind { initial_shift, matrix_shift, moreau_yosida, drift_shift, diffusion_shift };

FamilyKind parse_family(std::string_view name);
std::string to_string(FamilyKind kind);
std::vector<FamilyKind> all_families();

/// A one-parameter perturbation of a problem's data. Each family converges
/// to the base problem as ε → 0: shifts are linear in ε, and the
/// Moreau–Yosida member uses λ(ε) = ε, which converges in the Mosco sense.
struct PerturbationFamily {
    FamilyKind kind = FamilyKind::initial_shift;
    Vector direction;            ///< initial_shift: u⁰ + εd; drift_shift: F + εe
    Matrix matrix_direction;     ///< matrix_shift: A + εΔA (ΔA symmetric)
    RowMatrix diffusion_direction;  ///< diffusion_shift: G + εH
    std::vector<double> schedule;

    /// Unit directions matched to the problem: d = e = 1, ΔA = I, H = 1 (all entries).
    static PerturbationFamily standard(FamilyKind kind, const ProblemSpec& problem, std::vector<double> schedule = {});
};

/// Certified perturbed problem. ε = 0 returns the base problem unchanged.
/// Throws std::invalid_argument for ε < 0 or when A_ε fails to be SPD, and
/// UnsupportedError when regularizing an already regularized potential.
ProblemSpec perturb_problem(const ProblemSpec& problem, const PerturbationFamily& family, double eps);

enum class StabilityMode { exact_solve, approximate_minimizer };

StabilityMode parse_stability_mode(std::string_view name);

struct StabilityOptions {
    StabilityMode mode = StabilityMode::exact_solve;
    Scheme scheme = Scheme::explicit_euler;
    /// Approximate-minimizer mode; `tol` is replaced by ε for each member.
    VariationalOptions variational;
    /// Certified constants must lie in [c₀/envelope, C₀·envelope].
    double envelope = 2.0;
};

struct StabilityRow {
    double eps = 0.0;
    double I_eps = 0.0;         ///< I_ε(v_ε)
    double I_zero_cross = 0.0;  ///< I₀(v_ε)
    double err = 0.0;           ///< max_k (E‖v_ε,k − u_k‖²)^{1/2}
    double std_err = 0.0;       ///< delta-method standard error of err at the maximizing step
    CertifiedConstants constants;
    bool converged = true;      ///< approximate-minimizer mode: I_ε(v_ε) ≤ ε reached
};

/// err is a pathwise error on common noise, stronger than the weak-* limit
/// the stability theory guarantees; it is an empirical proxy.
struct StabilityReport {
    FamilyKind family = FamilyKind::initial_shift;
    StabilityMode mode = StabilityMode::exact_solve;
    CertifiedConstants base_constants;
    bool constants_within_envelope = true;
    std::vector<StabilityRow> rows;

    /// Geometric extrapolation err₂²/err₁ of the next error from the first two rows.
    double slope_prediction() const;
    bool err_nonincreasing(double slack = 0.0) const;
};

/// Runs every member of the family's schedule (strictly decreasing, ≥ 0)
/// against the unperturbed solution on the same noise.
StabilityReport stability_experiment(const ProblemSpec& problem, const PerturbationFamily& family,
                                     const NoisePtr& noise, const StabilityOptions& options = {});

/// Columns eps, I_eps, I_zero_cross, err, std_err.
Table to_table(const StabilityReport& report);

}  // namespace edp
