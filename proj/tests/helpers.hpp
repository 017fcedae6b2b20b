#pragma once

#include "edp/ito.hpp"
#include "edp/model.hpp"

#include <random>

namespace testing {

inline edp::PotentialSpec quadratic(double a) {
    edp::PotentialSpec p;
    p.A = edp::Matrix::Constant(1, 1, a);
    return p;
}

inline edp::PotentialSpec quadratic_logcosh(double a, double beta) {
    edp::PotentialSpec p = quadratic(a);
    p.nonlinearity = edp::Nonlinearity::logcosh;
    p.beta = beta;
    return p;
}

inline edp::Vector vec(std::initializer_list<double> xs) {
    edp::Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Scalar problem φ = ½a u², F = 0, additive σ, u⁰ given, P = [a].
inline edp::ProblemSpec scalar_problem(double a, double sigma, double u0, double horizon = 1.0) {
    edp::ProblemSpec p;
    p.geometry.P = edp::Matrix::Constant(1, 1, a);
    p.potential = quadratic(a);
    p.diffusion.sigma = edp::RowMatrix::Constant(1, 1, sigma);
    p.u0 = vec({u0});
    p.horizon = horizon;
    edp::certify(p);
    return p;
}

inline edp::Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    edp::Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = nd(rng);
    return v;
}

inline edp::RowMatrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    edp::RowMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = nd(rng);
    return m;
}

/// Adds independent Gaussian noise of size `scale` to every decision variable.
inline void perturb(edp::TrajectoryEnsemble& traj, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> nd(0.0, scale);
    for (double& x : traj.initial_data()) x += nd(rng);
    for (double& x : traj.rate_data()) x += nd(rng);
    for (double& x : traj.coeff_data()) x += nd(rng);
    traj.reconstruct();
}

}  // namespace testing
