#pragma once

#include "edp/ito.hpp"
#include "edp/model.hpp"
#include "edp/table.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace edp {

struct FunctionalTerm {
    std::string name;
    double value = 0.0;
    double std_err = 0.0;
};

/// Value of a trajectory functional with its per-term breakdown. `value` is
/// the sum of the term means; `mc_std_err` is the standard error of the
/// per-path totals.
struct FunctionalReport {
    std::string functional;
    double value = 0.0;
    std::vector<FunctionalTerm> terms;
    double mc_std_err = 0.0;

    /// Throws std::out_of_range for unknown names.
    double term(std::string_view name) const;
};

/// Columns term, value, std_err; the last row is the total.
Table to_table(const FunctionalReport& report);

/// Residual form: ½E Σ h‖a_k + ∂φ(u_k) − F(t_k,u_k)‖² + 2C_φ E Σ h‖B_k − G(t_k,u_k)‖²_V
/// + E‖u₀ − u⁰‖²_V. Nonnegative by construction.
FunctionalReport edp_residual(const TrajectoryEnsemble& traj, const ProblemSpec& problem);

/// Term-by-term energy form (boundary energy, dissipation, cross and trace
/// terms) with left-endpoint quadrature. Differs from the residual form by the
/// discrete Itô defect, which vanishes as h → 0 and M → ∞.
FunctionalReport edp_definitional(const TrajectoryEnsemble& traj, const ProblemSpec& problem);

/// Derivatives of the discrete residual functional with respect to every
/// trajectory variable, laid out like TrajectoryEnsemble's flat arrays.
struct TrajectoryGradient {
    std::vector<double> initial;  // M×n
    std::vector<double> rates;    // M×N×n
    std::vector<double> coeffs;   // M×N×n×m
    std::vector<double> forcing;  // N×n, w.r.t. grid samples of the drift's affine part (optional)
};

/// Residual value and, when `grad` is non-null, its exact gradient by reverse
/// accumulation through the state recursion. `with_forcing` also fills
/// grad->forcing.
double edp_residual_with_gradient(const TrajectoryEnsemble& traj, const ProblemSpec& problem,
                                  TrajectoryGradient* grad, bool with_forcing = false);

TrajectoryGradient edp_gradient(const TrajectoryEnsemble& traj, const ProblemSpec& problem);

/// Scalar strongly convex η(x) = (c/2)x² + β·log cosh x and its Legendre conjugate.
class ConjugatePair {
public:
    static ConjugatePair quadratic(double curvature = 1.0);
    static ConjugatePair quadratic_logcosh(double curvature = 1.0, double beta = 1.0);

    double curvature() const { return curvature_; }
    double beta() const { return beta_; }

    double value(double x) const;
    double derivative(double x) const;
    /// The v* with η′(v*) = w (Newton with bisection safeguard, tolerance 1e-12).
    double derivative_inverse(double w) const;
    double conjugate(double w) const;
    /// ψ(v, w) = η(v) + η*(w), the Fenchel representation of η′.
    double fenchel(double v, double w) const { return value(v) + conjugate(w); }

private:
    ConjugatePair(double curvature, double beta);
    double curvature_;
    double beta_;
};

double fenchel_conjugate(const ConjugatePair& pair, double w);

/// Componentwise (diagonal, cyclic) monotone operator A = ∂η acting on ∂_t u^d.
struct DissipationOperator {
    std::vector<ConjugatePair> components;

    static DissipationOperator broadcast(const ConjugatePair& pair, int dim);
    /// Quadratic η_i(x) = ½M_ii x²; throws UnsupportedError when M is not diagonal.
    static DissipationOperator from_matrix(const Matrix& m);
};

/// Energy form with the dissipation ½‖v‖² + ½‖w‖² replaced by the Fenchel
/// function ψ_A(∂_t u^d, F − ∂φ(u)). The trace term carries the ½ of the
/// energy form, so η = ½x² reproduces edp_definitional.
FunctionalReport edp2_fenchel(const TrajectoryEnsemble& traj, const ProblemSpec& problem,
                              const DissipationOperator& op);
FunctionalReport edp2_fenchel(const TrajectoryEnsemble& traj, const ProblemSpec& problem, const ConjugatePair& pair);

/// Legendre conjugate φ*(w). Closed form for pure quadratics, per-component
/// Newton for diagonal A with log-cosh; regularized potentials add (λ/2)‖w‖².
/// Throws UnsupportedError for non-diagonal A with β > 0.
double potential_conjugate(const PotentialSpec& spec, ConstVectorRef w);

/// Stochastic Brezis–Ekeland–Nayroles functional
/// E Σ h[φ(u) + φ*(F − a) − (F − a, u)] + ½E Σ h‖B − G‖²_V + E‖u₀ − u⁰‖².
FunctionalReport ben_functional(const TrajectoryEnsemble& traj, const ProblemSpec& problem);

}  // namespace edp
