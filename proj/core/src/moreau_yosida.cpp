#include "edp/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>

namespace edp {
namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kResolventTolerance = 1e-12;

double sech_sq(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

}  // namespace

MoreauYosida::MoreauYosida(PotentialSpec base, double lambda) : base_(std::move(base)), lambda_(lambda) {
    if (!(lambda > 0.0 && std::isfinite(lambda))) throw std::invalid_argument("Moreau-Yosida level must be positive");
    base_.yosida_level = 0.0;
    const auto n = base_.A.rows();
    Matrix shifted = Matrix::Identity(n, n) + lambda_ * base_.A;
    shifted_inverse_ = shifted.llt().solve(Matrix::Identity(n, n));
}

Vector MoreauYosida::resolvent(ConstVectorRef u) const {
    if (!u.allFinite()) throw std::domain_error("resolvent: non-finite input");
    Vector v = shifted_inverse_ * u;
    const double beta = base_.logcosh_weight();
    if (beta == 0.0) return v;

    const auto n = u.size();
    const double tol = kResolventTolerance * std::max(1.0, u.norm());
    auto residual = [&](const Vector& x) {
        Vector r = x + lambda_ * base_.A * x - u;
        for (Eigen::Index i = 0; i < n; ++i) r[i] += lambda_ * beta * std::tanh(x[i]);
        return r;
    };
    Vector r = residual(v);
    double r_norm = r.norm();
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        if (r_norm <= tol) return v;
        Matrix jac = Matrix::Identity(n, n) + lambda_ * base_.A;
        for (Eigen::Index i = 0; i < n; ++i) jac(i, i) += lambda_ * beta * sech_sq(v[i]);
        const Vector step = jac.llt().solve(r);
        double t = 1.0;
        for (int ls = 0; ls < 60; ++ls) {
            Vector trial = v - t * step;
            Vector trial_r = residual(trial);
            const double trial_norm = trial_r.norm();
            if (trial_norm <= (1.0 - 1e-4 * t) * r_norm || trial_norm <= tol) {
                v = std::move(trial);
                r = std::move(trial_r);
                r_norm = trial_norm;
                break;
            }
            t *= 0.5;
            if (ls == 59) throw NumericalError("resolvent Newton line search failed");
        }
    }
    if (r_norm <= tol) return v;
    throw NumericalError("resolvent Newton did not converge in 100 iterations");
}

double MoreauYosida::value(ConstVectorRef u) const {
    const Vector j = resolvent(u);
    return potential_value(base_, j) + (u - j).squaredNorm() / (2.0 * lambda_);
}

Vector MoreauYosida::gradient(ConstVectorRef u) const { return (u - resolvent(u)) / lambda_; }

Matrix MoreauYosida::hessian(ConstVectorRef u) const {
    // D∂φ_λ(u) = H (I + λH)⁻¹ with H the Gateaux differential at J_λ(u).
    const Matrix h = potential_hessian(base_, resolvent(u));
    const auto n = h.rows();
    Matrix shifted = Matrix::Identity(n, n) + lambda_ * h;
    Matrix out = shifted.llt().solve(h);
    return 0.5 * (out + out.transpose());
}

Vector MoreauYosida::hessian_apply(ConstVectorRef u, ConstVectorRef v) const { return hessian(u) * v; }

MoreauYosida moreau_yosida(const PotentialSpec& spec, double lambda) {
    if (spec.yosida_level > 0.0) throw UnsupportedError("potential is already regularized");
    return MoreauYosida(spec, lambda);
}

}  // namespace edp
