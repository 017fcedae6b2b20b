#include "helpers.hpp"

#include "edp/edp.hpp"
#include "edp/parallel.hpp"
#include "edp/solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace edp;
using testing::vec;

namespace {

TrajectoryEnsemble constant_path(const NoisePtr& noise, double value) {
    TrajectoryEnsemble traj(noise, 1);
    for (int j = 0; j < traj.paths(); ++j) traj.initial(j) = vec({value});
    traj.reconstruct();
    return traj;
}

double directional_fd(const TrajectoryEnsemble& base, const ProblemSpec& p, const TrajectoryEnsemble& dir, double eps) {
    auto plus = base, minus = base;
    auto axpy = [](std::span<double> y, std::span<const double> x, double a) {
        for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
    };
    axpy(plus.initial_data(), dir.initial_data(), eps);
    axpy(plus.rate_data(), dir.rate_data(), eps);
    axpy(plus.coeff_data(), dir.coeff_data(), eps);
    axpy(minus.initial_data(), dir.initial_data(), -eps);
    axpy(minus.rate_data(), dir.rate_data(), -eps);
    axpy(minus.coeff_data(), dir.coeff_data(), -eps);
    plus.reconstruct();
    minus.reconstruct();
    return (edp_residual(plus, p).value - edp_residual(minus, p).value) / (2 * eps);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

TEST_CASE("residual form hand examples") {
    const ProblemSpec p = testing::scalar_problem(1.0, 0.0, 1.0);
    for (int N : {1, 7, 64}) {
        const auto traj = constant_path(sample_noise(1, TimeGrid(1.0, N), 1, 0), 1.0);
        const FunctionalReport r = edp_residual(traj, p);
        CHECK(r.value == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(r.term("drift_residual") == doctest::Approx(0.5));
        CHECK_THROWS_AS(r.term("nope"), std::out_of_range);
        CHECK(edp_definitional(traj, p).value == doctest::Approx(0.5).epsilon(1e-14));
        CHECK(to_table(r).rows.back().size() == 3);
    }

    // Diffusion mismatch only: a_k = −u_k, B = 0, against additive σ = 1
    const ProblemSpec ou = testing::scalar_problem(1.0, 1.0, 1.0);
    const auto noise = sample_noise(1, TimeGrid(1.0, 32), 5, 3);
    TrajectoryEnsemble traj(noise, 1);
    for (int j = 0; j < 5; ++j) {
        traj.initial(j) = vec({1.0});
        traj.begin_path(j);
        for (int k = 0; k < 32; ++k) {
            traj.rate(j, k) = -traj.state(j, k);
            traj.advance_state(j, k);
        }
    }
    const FunctionalReport r = edp_residual(traj, ou);
    CHECK(r.value == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(r.term("diffusion_mismatch") == doctest::Approx(2.0));
}

TEST_CASE("characterization: zero exactly on forward trajectories") {
    for (const auto& name : builtin_problem_names()) {
        const ProblemSpec p = builtin_problem(name);
        const auto noise = sample_noise(p.noise_dim(), TimeGrid(p.horizon, 64), 8, 1);
        const auto fwd = solve_forward(p, noise, Scheme::explicit_euler);
        CHECK(edp_residual(fwd.trajectory, p).value == 0.0);
        auto shifted = fwd.trajectory;
        for (int j = 0; j < shifted.paths(); ++j) shifted.initial(j)[0] += 1e-3;
        shifted.reconstruct();
        CHECK(edp_residual(shifted, p).value > 0.0);
    }
}

TEST_CASE("term sums and nonnegativity") {
    const ProblemSpec heat = builtin_problem("heat1d");
    const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 32), 6, 2);
    auto traj = solve_forward(heat, noise, Scheme::semi_implicit).trajectory;
    std::mt19937_64 rng(4);
    testing::perturb(traj, rng, 0.3);
    for (const auto& r : {edp_residual(traj, heat), edp_definitional(traj, heat)}) {
        double sum = 0.0;
        for (const auto& t : r.terms) sum += t.value;
        CHECK(std::abs(sum - r.value) <= 1e-10 * std::abs(r.value));
        CHECK(r.mc_std_err >= 0.0);
    }
    CHECK(edp_residual(traj, heat).value > 0.0);
}

TEST_CASE("definitional form decays on the exact exponential path") {
    const ProblemSpec p = testing::scalar_problem(1.0, 0.0, 1.0);
    double prev = 1.0;
    for (int N : {64, 256, 1024, 4096}) {
        const double h = 1.0 / N;
        TrajectoryEnsemble traj(sample_noise(1, TimeGrid(1.0, N), 1, 0), 1);
        traj.initial(0) = vec({1.0});
        for (int k = 0; k < N; ++k) traj.rate(0, k)[0] = (std::exp(-(k + 1) * h) - std::exp(-k * h)) / h;
        traj.reconstruct();
        const double v = std::abs(edp_definitional(traj, p).value);
        CHECK(v <= h);
        CHECK(v < prev);
        prev = v;
    }
}

TEST_CASE("reductions do not depend on the worker count") {
    const ProblemSpec heat = builtin_problem("heat1d");
    const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 32), 37, 8);
    auto traj = solve_forward(heat, noise, Scheme::semi_implicit).trajectory;
    std::mt19937_64 rng(1);
    testing::perturb(traj, rng, 0.1);
    set_worker_count(1);
    const double one = edp_residual(traj, heat).value;
    const auto g1 = edp_gradient(traj, heat);
    set_worker_count(5);
    const double five = edp_residual(traj, heat).value;
    const auto g5 = edp_gradient(traj, heat);
    set_worker_count(1);
    CHECK(one == five);
    CHECK(g1.rates == g5.rates);
    CHECK(g1.forcing == g5.forcing);
}

TEST_CASE("adjoint gradient") {
    SUBCASE("one-step hand differentiation") {
        const ProblemSpec p = testing::scalar_problem(1.0, 0.0, 1.0);
        const auto traj = constant_path(sample_noise(1, TimeGrid(1.0, 1), 1, 0), 1.0);
        const auto g = edp_gradient(traj, p);
        CHECK(g.rates[0] == doctest::Approx(1.0));
        CHECK(g.forcing[0] == doctest::Approx(-1.0));
    }
    SUBCASE("vanishes at the zero-noise forward solution") {
        ZooOptions o;
        o.sigma = 0.0;
        const ProblemSpec p = builtin_problem("ou", o);
        const auto traj = solve_forward(p, sample_noise(1, TimeGrid(1.0, 32), 2, 0), Scheme::explicit_euler).trajectory;
        const auto g = edp_gradient(traj, p);
        double norm = 0.0;
        for (double x : g.rates) norm += x * x;
        for (double x : g.coeffs) norm += x * x;
        for (double x : g.initial) norm += x * x;
        CHECK(std::sqrt(norm) <= 1e-10);
    }
    SUBCASE("directional derivatives against central differences") {
        const ProblemSpec heat = builtin_problem("heat1d");
        const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 16), 3, 6);
        std::mt19937_64 rng(10);
        for (int trial = 0; trial < 5; ++trial) {
            auto traj = solve_forward(heat, noise, Scheme::semi_implicit).trajectory;
            testing::perturb(traj, rng, 0.2);
            auto dir = traj;
            for (double& x : dir.initial_data()) x = std::normal_distribution<double>()(rng);
            for (double& x : dir.rate_data()) x = std::normal_distribution<double>()(rng);
            for (double& x : dir.coeff_data()) x = std::normal_distribution<double>()(rng);
            const auto g = edp_gradient(traj, heat);
            const double exact = dot(g.initial, dir.initial_data()) + dot(g.rates, dir.rate_data()) +
                                 dot(g.coeffs, dir.coeff_data());
            const double fd = directional_fd(traj, heat, dir, 1e-6);
            CHECK(std::abs(fd - exact) <= 1e-5 * std::abs(exact));
        }
    }
}

TEST_CASE("dimension checks") {
    const ProblemSpec p = testing::scalar_problem(1.0, 1.0, 1.0);
    const ProblemSpec heat = builtin_problem("heat1d");
    const auto traj = constant_path(sample_noise(1, TimeGrid(1.0, 4), 1, 0), 1.0);
    CHECK_THROWS_AS(edp_residual(traj, heat), std::invalid_argument);
    const auto longer = constant_path(sample_noise(1, TimeGrid(2.0, 4), 1, 0), 1.0);
    CHECK_THROWS_AS(edp_residual(longer, p), std::invalid_argument);
    ProblemSpec uncertified = p;
    uncertified.constants.reset();
    CHECK_THROWS_AS(edp_residual(traj, uncertified), std::logic_error);
}
