#include "helpers.hpp"
#include "oracles.hpp"
#include "riccati.hpp"

#include "edp/control.hpp"
#include "edp/solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace edp;
using testing::vec;

namespace {

ControlProblem lq_problem(double target) {
    ControlProblem cp;
    cp.base = builtin_problem("lq-control");
    cp.target.kind = Forcing::Kind::constant;
    cp.target.amplitude = vec({target});
    cp.gamma = 0.1;
    cp.f_max = 10.0;
    return cp;
}

}  // namespace

TEST_CASE("Riccati oracle reproduces the frozen optimal cost") {
    const auto sol = riccati::solve_lq(0.1, 1.0, 20000);
    CHECK(sol.cost == doctest::Approx(oracle::lq_optimal_cost).epsilon(1e-9));
    CHECK(sol.f0 == doctest::Approx(oracle::lq_optimal_f0).epsilon(1e-7));
}

TEST_CASE("controlled functional") {
    const ProblemSpec p = testing::scalar_problem(1.0, 0.0, 1.0);
    const TimeGrid grid(1.0, 16);
    const auto noise = sample_noise(1, grid, 1, 0);
    TrajectoryEnsemble constant(noise, 1);
    constant.initial(0) = vec({1.0});
    constant.reconstruct();
    CHECK(controlled_edp(RowMatrix::Zero(16, 1), constant, p).value == doctest::Approx(0.5).epsilon(1e-14));

    std::mt19937_64 rng(2);
    const RowMatrix f = testing::random_matrix(rng, 16, 1);
    const ProblemSpec driven = controlled_problem(p, f, grid);
    const auto fwd = solve_forward(driven, noise, Scheme::explicit_euler).trajectory;
    CHECK(controlled_edp(f, fwd, p).value == 0.0);

    ProblemSpec shifted = driven;
    shifted.u0[0] += 1.0;
    const auto off = solve_forward(shifted, noise, Scheme::explicit_euler).trajectory;
    CHECK(controlled_edp(f, off, p).value >= 1.0);

    CHECK_THROWS_AS(controlled_edp(RowMatrix::Zero(15, 1), constant, p), std::invalid_argument);
}

TEST_CASE("reduced objective gradient against central differences") {
    std::mt19937_64 rng(5);
    ZooOptions o;
    o.n = 3;
    ControlProblem cp;
    cp.base = builtin_problem("heat1d", o);
    cp.target.kind = Forcing::Kind::constant;
    cp.target.amplitude = Vector::Constant(3, 0.5);
    cp.gamma = 0.05;
    const auto noise = sample_noise(cp.base.noise_dim(), TimeGrid(1.0, 16), 5, 3);
    for (int trial = 0; trial < 5; ++trial) {
        const RowMatrix f = testing::random_matrix(rng, 16, 3);
        const RowMatrix dir = testing::random_matrix(rng, 16, 3);
        RowMatrix g;
        reduced_objective(cp, noise, f, &g);
        const double eps = 1e-6;
        const double fd = (reduced_objective(cp, noise, f + eps * dir, nullptr) -
                           reduced_objective(cp, noise, f - eps * dir, nullptr)) / (2 * eps);
        const double exact = (g.array() * dir.array()).sum();
        CHECK(std::abs(fd - exact) <= 1e-5 * std::abs(exact));
    }
}

TEST_CASE("zero target from zero start is optimal at zero") {
    const ControlProblem cp = lq_problem(0.0);
    const auto noise = sample_noise(1, TimeGrid(1.0, 32), 1, 0);
    const ControlResult base = solve_reduced_baseline(cp, noise);
    CHECK(base.control.norm() == 0.0);
    CHECK(base.J == 0.0);
    ControlOptions opts;
    opts.deltas = {1.0, 0.1, 0.01};
    const ControlResult pen = solve_penalized(cp, noise, opts);
    CHECK(pen.control.norm() == 0.0);
    for (const auto& row : pen.history) {
        CHECK(row.J == 0.0);
        CHECK(row.I == 0.0);
    }
}

TEST_CASE("deterministic LQ: baseline and penalized solves against the Riccati cost") {
    const ControlProblem cp = lq_problem(1.0);
    const int N = 256;
    const auto noise = sample_noise(1, TimeGrid(1.0, N), 1, 0);
    const ControlResult base = solve_reduced_baseline(cp, noise);
    CHECK(std::abs(base.J - oracle::lq_optimal_cost) <= 0.02 * oracle::lq_optimal_cost);
    CHECK(base.reference_cost == doctest::Approx(0.5).epsilon(1e-2));

    ControlOptions opts;
    opts.deltas = {1.0, 1e-1, 1e-2};
    const ControlResult pen = solve_penalized(cp, noise, opts);
    REQUIRE(pen.history.size() == 3);
    for (std::size_t i = 0; i < pen.history.size(); ++i) {
        const auto& row = pen.history[i];
        CHECK(row.within_bound);
        // J ≤ F_δ ≤ F_δ(baseline) = J_baseline
        CHECK(row.J <= row.penalized);
        CHECK(row.penalized <= base.J * (1 + 1e-6));
        if (i > 0) CHECK(row.I <= pen.history[i - 1].I * (1 + 1e-6));
    }
    CHECK((pen.control.array().abs() <= cp.f_max).all());
    CHECK(continuation_table(pen).rows.size() == 3);
    CHECK(control_table(pen).rows.size() == static_cast<std::size_t>(N));
}

TEST_CASE("box constraint is enforced") {
    ControlProblem cp = lq_problem(1.0);
    cp.f_max = 0.5;
    const auto noise = sample_noise(1, TimeGrid(1.0, 64), 1, 0);
    const ControlResult base = solve_reduced_baseline(cp, noise);
    CHECK((base.control.array().abs() <= 0.5).all());
    CHECK(base.control.maxCoeff() == 0.5);
}

TEST_CASE("control validation") {
    ControlProblem cp = lq_problem(1.0);
    const auto noise = sample_noise(1, TimeGrid(1.0, 16), 1, 0);
    ControlOptions opts;
    opts.deltas = {0.1, 1.0};
    CHECK_THROWS_AS(solve_penalized(cp, noise, opts), std::invalid_argument);
    cp.gamma = 0.0;
    CHECK_THROWS_AS(solve_reduced_baseline(cp, noise), std::invalid_argument);
    cp.gamma = 0.1;
    cp.target.amplitude = vec({1.0, 2.0});
    CHECK_THROWS_AS(validate_control_problem(cp), std::invalid_argument);
}
