#pragma once

#include "edp/types.hpp"

#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace edp {

/// vᵀMv and tr(BᵀMB), evaluated without temporaries.
double quadratic_form(const Matrix& m, ConstVectorRef v);
double weighted_trace(const Matrix& m, const Eigen::Ref<const RowMatrix>& b);

/// ℝⁿ carrying two norms: the standard one (the pivot space H) and
/// ‖v‖_V² = vᵀPv. Diffusion coefficients B (n×m) are measured in
/// Hilbert–Schmidt-into-V norm tr(BᵀPB).
struct VGeometry {
    Matrix P;

    int dim() const { return static_cast<int>(P.rows()); }
    double norm_sq(ConstVectorRef v) const;
    double hs_norm_sq(const Eigen::Ref<const RowMatrix>& b) const;
};

/// Throws std::invalid_argument unless P is symmetric (1e-12 relative) and positive definite.
void validate_geometry(const VGeometry& geom);

enum class Nonlinearity { none, logcosh };

/// φ(u) = ½uᵀAu + β Σ log cosh(uᵢ). A positive `yosida_level` λ replaces φ by
/// its Moreau–Yosida regularization φ_λ, evaluated through the resolvent.
struct PotentialSpec {
    Matrix A;
    Nonlinearity nonlinearity = Nonlinearity::none;
    double beta = 0.0;
    double yosida_level = 0.0;

    int dim() const { return static_cast<int>(A.rows()); }
    double logcosh_weight() const { return nonlinearity == Nonlinearity::logcosh ? beta : 0.0; }
};

void validate_potential(const PotentialSpec& spec);

struct CertifiedConstants {
    double c_phi = 0.0;  ///< coercivity modulus in the V geometry
    double C_phi = 0.0;  ///< bound on the Gateaux differential, V → V*
};

double potential_value(const PotentialSpec& spec, ConstVectorRef u);
Vector potential_gradient(const PotentialSpec& spec, ConstVectorRef u);
void potential_gradient_into(const PotentialSpec& spec, ConstVectorRef u, VectorRef out);
Vector potential_hessian_apply(const PotentialSpec& spec, ConstVectorRef u, ConstVectorRef v);
/// Dense Gateaux differential D_G∂φ(u) (n×n, symmetric).
Matrix potential_hessian(const PotentialSpec& spec, ConstVectorRef u);

/// Linear part used by semi-implicit stepping: A, or A(I+λA)⁻¹ under regularization.
Matrix potential_linear_part(const PotentialSpec& spec);

/// Lipschitz constant of ∂φ in the standard norm: λmax(A)+β (regularized accordingly).
double potential_lipschitz_h(const PotentialSpec& spec);

/// Rigorous (c_φ, C_φ) for the built-in family, from generalized eigenvalues of
/// (A, P). Throws NumericalError if the eigen solve fails.
CertifiedConstants certify_constants(const PotentialSpec& spec, const VGeometry& geom);

/// Moreau–Yosida regularization of an unregularized potential. The resolvent
/// J_λ(u) solves v + λ∂φ(v) = u by damped Newton to residual 1e-12.
class MoreauYosida {
public:
    MoreauYosida(PotentialSpec base, double lambda);

    double lambda() const { return lambda_; }
    const PotentialSpec& base() const { return base_; }

    Vector resolvent(ConstVectorRef u) const;
    double value(ConstVectorRef u) const;
    Vector gradient(ConstVectorRef u) const;
    Vector hessian_apply(ConstVectorRef u, ConstVectorRef v) const;
    Matrix hessian(ConstVectorRef u) const;

private:
    PotentialSpec base_;
    double lambda_;
    Matrix shifted_inverse_;  // (I + λA)⁻¹, the exact resolvent when β = 0
};

MoreauYosida moreau_yosida(const PotentialSpec& spec, double lambda);

enum class Saturation { none, tanh_clip };

/// Time-dependent affine part f(t) of the drift.
struct Forcing {
    enum class Kind { zero, constant, sine, grid };

    Kind kind = Kind::zero;
    Vector amplitude;    // constant value, or sine amplitude
    double omega = 1.0;  // sine: amplitude·sin(ωt + phase)
    double phase = 0.0;
    double step = 0.0;   // grid: row k of `samples` holds f on [k·step, (k+1)·step)
    RowMatrix samples;
    Vector offset;       // added to every evaluation when non-empty

    void eval_into(double t, VectorRef out) const;
    bool is_zero() const { return kind == Kind::zero && offset.size() == 0; }
};

/// F(t,u) = f(t) + ρ·sat(u).
struct DriftSpec {
    Forcing forcing;
    double gain = 0.0;
    Saturation saturation = Saturation::none;
    double kappa = 1.0;  // tanh-clip: sat(x) = κ·tanh(x/κ)
    double horizon = std::numeric_limits<double>::infinity();

    double lipschitz() const;
};

Vector drift_eval(const DriftSpec& spec, double t, ConstVectorRef u);
void drift_eval_into(const DriftSpec& spec, double t, ConstVectorRef u, VectorRef out);
/// Diagonal of ∂F/∂u (the drift Jacobian is diagonal for the built-in family).
void drift_jacobian_diag_into(const DriftSpec& spec, ConstVectorRef u, VectorRef out);

enum class Modulation { additive, tanh, affine_tanh };

/// G(t,u) = diag(g(u))·Σ + S with g(x) = offset + slope·tanh(x).
struct DiffusionSpec {
    RowMatrix sigma;  // n×m
    Modulation modulation = Modulation::additive;
    double offset = 1.0;
    double slope = 0.0;
    RowMatrix shift;  // optional n×m additive term
    double horizon = std::numeric_limits<double>::infinity();

    int noise_dim() const { return static_cast<int>(sigma.cols()); }
    double g(double x) const;
    double g_prime(double x) const;
};

struct DiffusionConstants {
    double c_G = 0.0;   ///< Lipschitz constant into HS(U,H)
    double c_G2 = 0.0;  ///< linear-growth constant into HS(U,V)
};

RowMatrix diffusion_eval(const DiffusionSpec& spec, double t, ConstVectorRef u);
void diffusion_eval_into(const DiffusionSpec& spec, double t, ConstVectorRef u,
                         Eigen::Ref<RowMatrix> out);
DiffusionConstants diffusion_constants(const DiffusionSpec& spec, const VGeometry& geom);

/// The data (u⁰, φ, F, G) with geometry, horizon and certified constants.
struct ProblemSpec {
    VGeometry geometry;
    PotentialSpec potential;
    DriftSpec drift;
    DiffusionSpec diffusion;
    Vector u0;
    double horizon = 1.0;

    std::optional<CertifiedConstants> constants;
    DiffusionConstants diffusion_bounds;

    int dim() const { return static_cast<int>(u0.size()); }
    int noise_dim() const { return diffusion.noise_dim(); }
};

/// Validates every assumption the library can check and fills in the
/// certified constants. Throws std::invalid_argument on violation.
void certify(ProblemSpec& problem);
ProblemSpec certified(ProblemSpec problem);

/// Certified constants of a problem; throws std::logic_error if missing.
const CertifiedConstants& constants_of(const ProblemSpec& problem);

/// Parameters of the built-in problem zoo. Unset fields keep the zoo defaults.
struct ZooOptions {
    std::optional<double> sigma{};
    std::optional<int> n{};
    std::optional<double> nu{};
    std::optional<double> beta{};
    std::optional<double> horizon{};
    std::optional<Vector> u0{};
};

/// "ou", "heat1d" or "lq-control". Throws std::invalid_argument for other names.
ProblemSpec builtin_problem(std::string_view name, const ZooOptions& options = {});
std::vector<std::string> builtin_problem_names();

}  // namespace edp
