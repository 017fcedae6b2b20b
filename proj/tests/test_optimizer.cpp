#include "edp/optimizer.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace edp;

namespace {

double rosenbrock(const Vector& x, Vector& g) {
    double f = 0.0;
    g.setZero();
    for (Eigen::Index i = 0; i + 1 < x.size(); ++i) {
        const double a = x[i + 1] - x[i] * x[i], b = 1.0 - x[i];
        f += 100.0 * a * a + b * b;
        g[i] += -400.0 * a * x[i] - 2.0 * b;
        g[i + 1] += 200.0 * a;
    }
    return f;
}

}  // namespace

TEST_CASE("L-BFGS solves Rosenbrock") {
    LbfgsOptions opts;
    opts.max_iters = 2000;
    opts.g_tol = 1e-10;
    const auto r = minimize_lbfgs(rosenbrock, Vector::Constant(6, -1.2), opts);
    CHECK((r.x - Vector::Ones(6)).norm() <= 1e-6);
    CHECK(r.stationary);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].objective <= r.history[i - 1].objective);
    CHECK(r.history.front().iter == 0);
}

TEST_CASE("objective target stops early") {
    LbfgsOptions opts;
    opts.f_target = 1.0;
    const auto r = minimize_lbfgs(rosenbrock, Vector::Constant(4, -1.2), opts);
    CHECK(r.reached_target);
    CHECK(r.objective <= 1.0);
}

TEST_CASE("box-constrained quadratic lands on the projection") {
    // min ½‖x − c‖² over [−1, 1]ⁿ has solution clamp(c).
    Vector c(4);
    c << 3.0, -0.5, -7.0, 0.25;
    const Objective f = [&](const Vector& x, Vector& g) {
        g = x - c;
        return 0.5 * g.squaredNorm();
    };
    const Box box{Vector::Constant(4, -1.0), Vector::Constant(4, 1.0)};
    LbfgsOptions opts;
    opts.g_tol = 1e-12;
    for (bool first : {false, true}) {
        opts.first_order = first;
        const auto r = minimize_lbfgs(f, Vector::Zero(4), opts, box);
        CHECK((r.x - box.project(c)).norm() <= 1e-10);
        CHECK((r.x.array() <= 1.0).all());
        CHECK((r.x.array() >= -1.0).all());
    }
}

TEST_CASE("start outside the box is projected") {
    const Objective f = [](const Vector& x, Vector& g) {
        g = x;
        return 0.5 * x.squaredNorm();
    };
    const Box box{Vector::Constant(2, 1.0), Vector::Constant(2, 2.0)};
    const auto r = minimize_lbfgs(f, Vector::Constant(2, 5.0), LbfgsOptions{}, box);
    CHECK((r.x - Vector::Ones(2)).norm() <= 1e-12);
}

TEST_CASE("invalid options are rejected") {
    const Objective f = [](const Vector& x, Vector& g) {
        g = x;
        return 0.5 * x.squaredNorm();
    };
    LbfgsOptions bad;
    bad.memory = 0;
    CHECK_THROWS_AS(minimize_lbfgs(f, Vector::Zero(2), bad), std::invalid_argument);
    const Box wrong{Vector::Zero(3), Vector::Ones(3)};
    CHECK_THROWS_AS(minimize_lbfgs(f, Vector::Zero(2), LbfgsOptions{}, wrong), std::invalid_argument);
}
