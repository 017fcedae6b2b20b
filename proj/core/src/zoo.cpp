#include "edp/model.hpp"

#include <cmath>
#include <numbers>

namespace edp {
namespace {

ProblemSpec make_ou(const ZooOptions& opt) {
    ProblemSpec p;
    p.potential.A = Matrix::Identity(1, 1);
    p.geometry.P = p.potential.A;
    p.diffusion.sigma = RowMatrix::Constant(1, 1, opt.sigma.value_or(1.0));
    p.diffusion.modulation = Modulation::additive;
    p.u0 = opt.u0.value_or(Vector::Ones(1));
    p.horizon = opt.horizon.value_or(1.0);
    return p;
}

// Dirichlet second difference on (0,1) with n interior nodes, scaled by ν, plus identity.
ProblemSpec make_heat1d(const ZooOptions& opt) {
    const int n = opt.n.value_or(8);
    if (n < 1) throw std::invalid_argument("heat1d needs n >= 1");
    const double nu = opt.nu.value_or(0.05);
    const double inv_dx2 = static_cast<double>((n + 1) * (n + 1));
    Matrix a = Matrix::Identity(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) += 2.0 * nu * inv_dx2;
        if (i > 0) a(i, i - 1) = a(i - 1, i) = -nu * inv_dx2;
    }
    ProblemSpec p;
    p.potential.A = a;
    p.potential.nonlinearity = Nonlinearity::logcosh;
    p.potential.beta = opt.beta.value_or(0.5);
    p.geometry.P = a;

    p.drift.forcing.kind = Forcing::Kind::sine;
    p.drift.forcing.amplitude = Vector::Constant(n, 0.5);
    p.drift.forcing.omega = 2.0 * std::numbers::pi;
    p.drift.gain = -0.5;

    p.diffusion.sigma = RowMatrix::Identity(n, n) * opt.sigma.value_or(0.3);
    p.diffusion.modulation = Modulation::affine_tanh;
    p.diffusion.offset = 1.0;
    p.diffusion.slope = 0.5;

    if (opt.u0) {
        p.u0 = *opt.u0;
    } else {
        p.u0.resize(n);
        for (int i = 0; i < n; ++i) p.u0[i] = std::sin(std::numbers::pi * (i + 1) / (n + 1));
    }
    p.horizon = opt.horizon.value_or(1.0);
    return p;
}

ProblemSpec make_lq(const ZooOptions& opt) {
    ProblemSpec p;
    p.potential.A = Matrix::Identity(1, 1);
    p.geometry.P = p.potential.A;
    p.diffusion.sigma = RowMatrix::Constant(1, 1, opt.sigma.value_or(0.0));
    p.u0 = opt.u0.value_or(Vector::Zero(1));
    p.horizon = opt.horizon.value_or(1.0);
    return p;
}

}  // namespace

ProblemSpec builtin_problem(std::string_view name, const ZooOptions& options) {
    ProblemSpec p;
    if (name == "ou") {
        p = make_ou(options);
    } else if (name == "heat1d") {
        p = make_heat1d(options);
    } else if (name == "lq-control") {
        p = make_lq(options);
    } else {
        throw std::invalid_argument("unknown built-in problem '" + std::string(name) + "'");
    }
    certify(p);
    return p;
}

std::vector<std::string> builtin_problem_names() { return {"ou", "heat1d", "lq-control"}; }

}  // namespace edp
