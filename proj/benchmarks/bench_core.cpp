#include "edp/edp.hpp"
#include "edp/ito.hpp"
#include "edp/model.hpp"
#include "edp/rng.hpp"
#include "edp/solvers.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace edp;

constexpr int kPaths = 256;

// Shared setup: a forward ensemble on the given builtin with `steps` steps.
struct Fixture {
    ProblemSpec problem;
    NoisePtr noise;
    TrajectoryEnsemble traj;

    Fixture(const char* name, int steps)
        : problem(builtin_problem(name)),
          noise(sample_noise(problem.noise_dim(), TimeGrid(1.0, steps), kPaths, 7)),
          traj(solve_forward(problem, noise, Scheme::semi_implicit, false).trajectory) {}
};

void BM_Philox(benchmark::State& state) {
    const PhiloxKey key = philox_key(42);
    std::uint32_t i = 0;
    for (auto _ : state) benchmark::DoNotOptimize(philox_normal_pair({i++, 0, 0, 0}, key));
    state.SetItemsProcessed(state.iterations() * 2);
}
BENCHMARK(BM_Philox);

void BM_SampleNoise(benchmark::State& state) {
    const TimeGrid grid(1.0, static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sample_noise(1, grid, kPaths, 3));
    state.SetItemsProcessed(state.iterations() * kPaths * state.range(0));
}
BENCHMARK(BM_SampleNoise)->Arg(256)->Arg(1024);

void BM_ForwardExplicit(benchmark::State& state) {
    const ProblemSpec ou = builtin_problem("ou");
    const auto noise = sample_noise(1, TimeGrid(1.0, static_cast<int>(state.range(0))), kPaths, 3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_forward(ou, noise, Scheme::explicit_euler, false));
    state.SetItemsProcessed(state.iterations() * kPaths * state.range(0));
}
BENCHMARK(BM_ForwardExplicit)->Arg(256)->Arg(1024);

void BM_ForwardSemiImplicitHeat(benchmark::State& state) {
    const ProblemSpec heat = builtin_problem("heat1d");
    const auto noise = sample_noise(heat.noise_dim(), TimeGrid(1.0, 256), kPaths, 3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_forward(heat, noise, Scheme::semi_implicit, false));
}
BENCHMARK(BM_ForwardSemiImplicitHeat);

void BM_Residual(benchmark::State& state) {
    const Fixture f(state.range(0) == 0 ? "ou" : "heat1d", 256);
    for (auto _ : state) benchmark::DoNotOptimize(edp_residual(f.traj, f.problem));
}
BENCHMARK(BM_Residual)->Arg(0)->Arg(1);

void BM_Definitional(benchmark::State& state) {
    const Fixture f(state.range(0) == 0 ? "ou" : "heat1d", 256);
    for (auto _ : state) benchmark::DoNotOptimize(edp_definitional(f.traj, f.problem));
}
BENCHMARK(BM_Definitional)->Arg(0)->Arg(1);

void BM_ResidualGradient(benchmark::State& state) {
    const Fixture f(state.range(0) == 0 ? "ou" : "heat1d", 256);
    TrajectoryGradient g;
    for (auto _ : state) benchmark::DoNotOptimize(edp_residual_with_gradient(f.traj, f.problem, &g));
}
BENCHMARK(BM_ResidualGradient)->Arg(0)->Arg(1);

void BM_ItoCheck(benchmark::State& state) {
    const Fixture f("ou", 256);
    for (auto _ : state) benchmark::DoNotOptimize(ito_check(f.traj, f.problem.potential));
}
BENCHMARK(BM_ItoCheck);

void BM_Resolvent(benchmark::State& state) {
    const ProblemSpec heat = builtin_problem("heat1d");
    const MoreauYosida my(heat.potential, 0.1);
    const Vector u = Vector::LinSpaced(heat.dim(), -2.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(my.resolvent(u));
}
BENCHMARK(BM_Resolvent);

}  // namespace

BENCHMARK_MAIN();
