#include "edp/model.hpp"

#include "pointwise.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace edp {
namespace {

double sech_sq(double x) {
    const double c = std::cosh(x);
    return 1.0 / (c * c);
}

void require_finite(ConstVectorRef u, const char* what) {
    if (!u.allFinite()) throw std::domain_error(std::string(what) + ": non-finite input");
}

void require_symmetric_pd(const Matrix& m, const char* what) {
    if (m.rows() == 0 || m.rows() != m.cols())
        throw std::invalid_argument(std::string(what) + " must be a non-empty square matrix");
    if (!m.allFinite()) throw std::invalid_argument(std::string(what) + " has non-finite entries");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument(std::string(what) + " is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
        throw std::invalid_argument(std::string(what) + " is not positive definite");
}

// Generalized eigenvalues of M x = λ P x, ascending.
Vector generalized_eigenvalues(const Matrix& m, const Matrix& p) {
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> eig(m, p, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("generalized eigenvalue solve did not converge");
    return eig.eigenvalues();
}

// A(I + λA)⁻¹, symmetrized.
Matrix regularized_matrix(const Matrix& a, double lambda) {
    const auto n = a.rows();
    Matrix shifted = Matrix::Identity(n, n) + lambda * a;
    Matrix out = shifted.llt().solve(a);
    return 0.5 * (out + out.transpose());
}

}  // namespace

double quadratic_form(const Matrix& m, ConstVectorRef v) {
    return detail::quadratic_form_raw(m, v.data(), static_cast<int>(v.size()));
}

double weighted_trace(const Matrix& m, const Eigen::Ref<const RowMatrix>& b) {
    return detail::weighted_trace_raw(m, b.data(), static_cast<int>(b.rows()), static_cast<int>(b.cols()),
                                      b.outerStride());
}

double VGeometry::norm_sq(ConstVectorRef v) const { return quadratic_form(P, v); }

double VGeometry::hs_norm_sq(const Eigen::Ref<const RowMatrix>& b) const { return weighted_trace(P, b); }

void validate_geometry(const VGeometry& geom) { require_symmetric_pd(geom.P, "geometry matrix P"); }

void validate_potential(const PotentialSpec& spec) {
    require_symmetric_pd(spec.A, "potential matrix A");
    if (spec.nonlinearity == Nonlinearity::logcosh && !(spec.beta >= 0.0 && std::isfinite(spec.beta)))
        throw std::invalid_argument("log-cosh weight beta must be finite and nonnegative");
    if (!(spec.yosida_level >= 0.0 && std::isfinite(spec.yosida_level)))
        throw std::invalid_argument("Moreau-Yosida level must be finite and nonnegative");
}

double potential_value(const PotentialSpec& spec, ConstVectorRef u) {
    require_finite(u, "potential_value");
    if (spec.yosida_level > 0.0) return MoreauYosida(spec, spec.yosida_level).value(u);
    return detail::value_raw(spec, u.data(), static_cast<int>(u.size()));
}

void potential_gradient_into(const PotentialSpec& spec, ConstVectorRef u, VectorRef out) {
    require_finite(u, "potential_gradient");
    if (spec.yosida_level > 0.0) {
        out = MoreauYosida(spec, spec.yosida_level).gradient(u);
        return;
    }
    detail::gradient_raw(spec, u.data(), out.data(), static_cast<int>(u.size()));
}

Vector potential_gradient(const PotentialSpec& spec, ConstVectorRef u) {
    Vector out(u.size());
    potential_gradient_into(spec, u, out);
    return out;
}

Vector potential_hessian_apply(const PotentialSpec& spec, ConstVectorRef u, ConstVectorRef v) {
    require_finite(u, "potential_hessian_apply");
    require_finite(v, "potential_hessian_apply");
    if (spec.yosida_level > 0.0) return MoreauYosida(spec, spec.yosida_level).hessian_apply(u, v);
    Vector out = spec.A.lazyProduct(v);
    if (const double beta = spec.logcosh_weight(); beta != 0.0) {
        for (Eigen::Index i = 0; i < u.size(); ++i) out[i] += beta * sech_sq(u[i]) * v[i];
    }
    return out;
}

Matrix potential_hessian(const PotentialSpec& spec, ConstVectorRef u) {
    require_finite(u, "potential_hessian");
    if (spec.yosida_level > 0.0) return MoreauYosida(spec, spec.yosida_level).hessian(u);
    Matrix h = spec.A;
    if (const double beta = spec.logcosh_weight(); beta != 0.0) {
        for (Eigen::Index i = 0; i < u.size(); ++i) h(i, i) += beta * sech_sq(u[i]);
    }
    return h;
}

Matrix potential_linear_part(const PotentialSpec& spec) {
    if (spec.yosida_level > 0.0) return regularized_matrix(spec.A, spec.yosida_level);
    return spec.A;
}

double potential_lipschitz_h(const PotentialSpec& spec) {
    const auto n = spec.A.rows();
    Matrix upper = spec.A + spec.logcosh_weight() * Matrix::Identity(n, n);
    if (spec.yosida_level > 0.0) upper = regularized_matrix(upper, spec.yosida_level);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(upper, Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw NumericalError("eigenvalue solve did not converge");
    return eig.eigenvalues().maxCoeff();
}

CertifiedConstants certify_constants(const PotentialSpec& spec, const VGeometry& geom) {
    if (spec.A.rows() != geom.P.rows())
        throw std::invalid_argument("potential and geometry dimensions differ");
    const double beta = spec.logcosh_weight();
    const auto n = spec.A.rows();
    CertifiedConstants out;
    if (spec.yosida_level > 0.0) {
        // x ↦ x/(1+λx) is operator monotone, so A ⪯ D_G∂φ ⪯ A+βI carries over.
        const Matrix lower = regularized_matrix(spec.A, spec.yosida_level);
        const Matrix upper =
            regularized_matrix(spec.A + beta * Matrix::Identity(n, n), spec.yosida_level);
        out.c_phi = generalized_eigenvalues(lower, geom.P).minCoeff();
        out.C_phi = generalized_eigenvalues(upper, geom.P).maxCoeff();
    } else {
        const Vector ev = generalized_eigenvalues(spec.A, geom.P);
        out.c_phi = ev.minCoeff();
        out.C_phi = ev.maxCoeff();
        if (beta != 0.0) {
            Eigen::SelfAdjointEigenSolver<Matrix> peig(geom.P, Eigen::EigenvaluesOnly);
            if (peig.info() != Eigen::Success) throw NumericalError("eigenvalue solve did not converge");
            out.C_phi += beta / peig.eigenvalues().minCoeff();
        }
    }
    if (!(out.c_phi > 0.0) || !(out.C_phi >= out.c_phi) || !std::isfinite(out.C_phi))
        throw NumericalError("certified constants are not ordered 0 < c_phi <= C_phi");
    return out;
}

void Forcing::eval_into(double t, VectorRef out) const {
    detail::forcing_raw(*this, t, out.data(), static_cast<int>(out.size()));
}

double DriftSpec::lipschitz() const { return std::abs(gain); }

void drift_eval_into(const DriftSpec& spec, double t, ConstVectorRef u, VectorRef out) {
    const double slack = 1e-12 * std::max(1.0, std::isfinite(spec.horizon) ? spec.horizon : 1.0);
    if (!(t >= -slack && t <= spec.horizon + slack))
        throw std::out_of_range("drift evaluated outside [0, T]");
    detail::drift_raw(spec, t, u.data(), out.data(), static_cast<int>(u.size()));
}

Vector drift_eval(const DriftSpec& spec, double t, ConstVectorRef u) {
    require_finite(u, "drift_eval");
    Vector out(u.size());
    drift_eval_into(spec, t, u, out);
    return out;
}

void drift_jacobian_diag_into(const DriftSpec& spec, ConstVectorRef u, VectorRef out) {
    if (spec.saturation == Saturation::none || spec.gain == 0.0) {
        out.setConstant(spec.gain);
        return;
    }
    for (Eigen::Index i = 0; i < u.size(); ++i) out[i] = spec.gain * sech_sq(u[i] / spec.kappa);
}

double DiffusionSpec::g(double x) const {
    switch (modulation) {
        case Modulation::additive: return 1.0;
        case Modulation::tanh: return std::tanh(x);
        case Modulation::affine_tanh: return offset + slope * std::tanh(x);
    }
    return 1.0;
}

double DiffusionSpec::g_prime(double x) const {
    switch (modulation) {
        case Modulation::additive: return 0.0;
        case Modulation::tanh: return sech_sq(x);
        case Modulation::affine_tanh: return slope * sech_sq(x);
    }
    return 0.0;
}

void diffusion_eval_into(const DiffusionSpec& spec, double t, ConstVectorRef u,
                         Eigen::Ref<RowMatrix> out) {
    const double slack = 1e-12 * std::max(1.0, std::isfinite(spec.horizon) ? spec.horizon : 1.0);
    if (!(t >= -slack && t <= spec.horizon + slack))
        throw std::out_of_range("diffusion evaluated outside [0, T]");
    detail::diffusion_raw(spec, u.data(), out.data(), static_cast<int>(spec.sigma.rows()),
                          static_cast<int>(spec.sigma.cols()), out.outerStride());
}

RowMatrix diffusion_eval(const DiffusionSpec& spec, double t, ConstVectorRef u) {
    require_finite(u, "diffusion_eval");
    RowMatrix out(spec.sigma.rows(), spec.sigma.cols());
    diffusion_eval_into(spec, t, u, out);
    return out;
}

DiffusionConstants diffusion_constants(const DiffusionSpec& spec, const VGeometry& geom) {
    double g_sup = 1.0;
    double g_lip = 0.0;
    switch (spec.modulation) {
        case Modulation::additive: break;
        case Modulation::tanh: g_lip = 1.0; break;
        case Modulation::affine_tanh:
            g_sup = std::abs(spec.offset) + std::abs(spec.slope);
            g_lip = std::abs(spec.slope);
            break;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> peig(geom.P, Eigen::EigenvaluesOnly);
    const double p_max = peig.eigenvalues().maxCoeff();
    DiffusionConstants out;
    out.c_G = g_lip * (spec.sigma.rows() > 0 ? spec.sigma.rowwise().norm().maxCoeff() : 0.0);
    const double shift_norm = spec.shift.size() != 0 ? spec.shift.norm() : 0.0;
    out.c_G2 = std::sqrt(p_max) * (g_sup * spec.sigma.norm() + shift_norm);
    return out;
}

void certify(ProblemSpec& problem) {
    const int n = problem.dim();
    if (n <= 0) throw std::invalid_argument("initial datum must be non-empty");
    if (!problem.u0.allFinite()) throw std::invalid_argument("initial datum has non-finite entries");
    if (!(problem.horizon > 0.0 && std::isfinite(problem.horizon)))
        throw std::invalid_argument("horizon T must be positive and finite");
    validate_geometry(problem.geometry);
    validate_potential(problem.potential);
    if (problem.geometry.dim() != n || problem.potential.dim() != n)
        throw std::invalid_argument("geometry/potential dimension does not match the initial datum");

    auto& drift = problem.drift;
    drift.horizon = problem.horizon;
    if (!std::isfinite(drift.gain)) throw std::invalid_argument("drift gain must be finite");
    if (drift.saturation == Saturation::tanh_clip && !(drift.kappa > 0.0))
        throw std::invalid_argument("tanh-clip kappa must be positive");
    const auto& f = drift.forcing;
    if ((f.kind == Forcing::Kind::constant || f.kind == Forcing::Kind::sine) && f.amplitude.size() != n)
        throw std::invalid_argument("forcing amplitude has wrong dimension");
    if (f.kind == Forcing::Kind::grid && (f.samples.cols() != n || f.samples.rows() == 0 || !(f.step > 0.0)))
        throw std::invalid_argument("grid forcing has wrong shape or step");
    if (f.offset.size() != 0 && f.offset.size() != n)
        throw std::invalid_argument("forcing offset has wrong dimension");

    auto& diff = problem.diffusion;
    diff.horizon = problem.horizon;
    if (diff.sigma.rows() != n || diff.sigma.cols() <= 0)
        throw std::invalid_argument("diffusion matrix must be n x m with m >= 1");
    if (!diff.sigma.allFinite()) throw std::invalid_argument("diffusion matrix has non-finite entries");
    if (diff.shift.size() != 0 && (diff.shift.rows() != n || diff.shift.cols() != diff.sigma.cols()))
        throw std::invalid_argument("diffusion shift has wrong shape");
    if (diff.modulation == Modulation::additive) {
        diff.offset = 1.0;
        diff.slope = 0.0;
    }

    problem.constants = certify_constants(problem.potential, problem.geometry);
    problem.diffusion_bounds = diffusion_constants(diff, problem.geometry);
}

ProblemSpec certified(ProblemSpec problem) {
    certify(problem);
    return problem;
}

const CertifiedConstants& constants_of(const ProblemSpec& problem) {
    if (!problem.constants) throw std::logic_error("problem constants have not been certified");
    return *problem.constants;
}

}  // namespace edp
