#include "edp/ito.hpp"

#include "edp/parallel.hpp"
#include "edp/rng.hpp"
#include "pointwise.hpp"

#include <algorithm>
#include <cmath>
#include <span>

namespace edp {

TimeGrid::TimeGrid(double horizon_, int steps_) : horizon(horizon_), steps(steps_) {
    if (!(horizon > 0.0 && std::isfinite(horizon))) throw std::invalid_argument("grid horizon must be positive");
    if (steps < 1) throw std::invalid_argument("grid needs at least one step");
}

NoiseEnsemble NoiseEnsemble::sample(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed,
                                    std::size_t budget) {
    if (paths < 1) throw std::invalid_argument("noise ensemble needs at least one path");
    if (noise_dim < 1) throw std::invalid_argument("noise dimension must be positive");
    const std::size_t total =
        static_cast<std::size_t>(paths) * static_cast<std::size_t>(grid.steps) * static_cast<std::size_t>(noise_dim);
    if (total > budget) throw std::length_error("noise ensemble exceeds the memory budget");

    NoiseEnsemble out;
    out.noise_dim_ = noise_dim;
    out.paths_ = paths;
    out.grid_ = grid;
    out.seed_ = seed;
    out.data_.resize(total);
    const double scale = std::sqrt(grid.step());
    const PhiloxKey key = philox_key(seed);
    // Each Philox draw yields two normals, used for steps 2q and 2q+1 of one component.
    const int pairs = (grid.steps + 1) / 2;
    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t j) {
        const auto path = static_cast<std::uint64_t>(j);
        double* base = out.data_.data() + out.offset(static_cast<int>(j), 0);
        for (int q = 0; q < pairs; ++q) {
            const bool second = 2 * q + 1 < grid.steps;
            for (int c = 0; c < noise_dim; ++c) {
                const PhiloxCounter ctr{static_cast<std::uint32_t>(q), static_cast<std::uint32_t>(c),
                                        static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
                const auto z = philox_normal_pair(ctr, key);
                base[(2 * q) * noise_dim + c] = scale * z[0];
                if (second) base[(2 * q + 1) * noise_dim + c] = scale * z[1];
            }
        }
    });
    return out;
}

NoiseEnsemble NoiseEnsemble::from_increments(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed,
                                             std::vector<double> increments) {
    if (increments.size() != static_cast<std::size_t>(paths) * grid.steps * noise_dim)
        throw std::invalid_argument("increment array has wrong size");
    NoiseEnsemble out;
    out.noise_dim_ = noise_dim;
    out.paths_ = paths;
    out.grid_ = grid;
    out.seed_ = seed;
    out.data_ = std::move(increments);
    return out;
}

NoisePtr sample_noise(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed, std::size_t budget) {
    return std::make_shared<const NoiseEnsemble>(NoiseEnsemble::sample(noise_dim, grid, paths, seed, budget));
}

TrajectoryEnsemble::TrajectoryEnsemble(NoisePtr noise, int dim) : noise_(std::move(noise)), dim_(dim) {
    if (!noise_) throw std::invalid_argument("trajectory needs a noise ensemble");
    if (dim_ < 1) throw std::invalid_argument("state dimension must be positive");
    const auto m = static_cast<std::size_t>(paths());
    const auto nsteps = static_cast<std::size_t>(steps());
    const auto n = static_cast<std::size_t>(dim_);
    u0_.assign(m * n, 0.0);
    rates_.assign(m * nsteps * n, 0.0);
    coeffs_.assign(m * nsteps * n * static_cast<std::size_t>(noise_dim()), 0.0);
    states_.assign(m * (nsteps + 1) * n, 0.0);
}

void TrajectoryEnsemble::begin_path(int j) {
    std::copy_n(u0_.data() + u0_offset(j), dim_, states_.data() + state_offset(j, 0));
}

void TrajectoryEnsemble::advance_state(int j, int k) {
    const double h = grid().step();
    const int m = noise_dim();
    const double* u = states_.data() + state_offset(j, k);
    const double* a = rates_.data() + rate_offset(j, k);
    const double* b = coeffs_.data() + coeff_offset(j, k);
    const auto dw = noise_->increment(j, k);
    double* next = states_.data() + state_offset(j, k + 1);
    for (int i = 0; i < dim_; ++i) {
        double acc = u[i] + h * a[i];
        for (int c = 0; c < m; ++c) acc += b[i * m + c] * dw[c];
        next[i] = acc;
    }
}

void TrajectoryEnsemble::reconstruct_path(int j) {
    begin_path(j);
    for (int k = 0; k < steps(); ++k) advance_state(j, k);
}

void TrajectoryEnsemble::reconstruct() {
    parallel_for(static_cast<std::size_t>(paths()), [&](std::size_t j) { reconstruct_path(static_cast<int>(j)); });
}

TrajectoryEnsemble make_trajectory(std::span<const double> u0s, std::span<const double> rates,
                                   std::span<const double> coeffs, NoisePtr noise, const TimeGrid& grid) {
    if (!noise) throw std::invalid_argument("make_trajectory: missing noise");
    if (noise->grid().steps != grid.steps || noise->grid().horizon != grid.horizon)
        throw std::invalid_argument("make_trajectory: grid does not match the noise ensemble");
    const auto paths = static_cast<std::size_t>(noise->paths());
    if (u0s.empty() || u0s.size() % paths != 0) throw std::invalid_argument("make_trajectory: bad initial-value shape");
    const auto n = u0s.size() / paths;
    const auto steps = static_cast<std::size_t>(grid.steps);
    const auto m = static_cast<std::size_t>(noise->noise_dim());
    if (rates.size() != paths * steps * n) throw std::invalid_argument("make_trajectory: bad rate shape");
    if (coeffs.size() != paths * steps * n * m) throw std::invalid_argument("make_trajectory: bad coefficient shape");
    TrajectoryEnsemble traj(std::move(noise), static_cast<int>(n));
    std::copy(u0s.begin(), u0s.end(), traj.initial_data().begin());
    std::copy(rates.begin(), rates.end(), traj.rate_data().begin());
    std::copy(coeffs.begin(), coeffs.end(), traj.coeff_data().begin());
    traj.reconstruct();
    return traj;
}

double trace_term(const PotentialSpec& potential, ConstVectorRef u, const Eigen::Ref<const RowMatrix>& b) {
    if (b.isZero(0.0)) return 0.0;
    if (potential.yosida_level > 0.0) {
        const Matrix h = potential_hessian(potential, u);
        const Matrix bbt = b * b.transpose();
        return (bbt * h).trace();
    }
    // D_G∂φ(u) = A + β·diag(sech² u_i), so the trace splits into two sums.
    return detail::trace_raw(potential, u.data(), b.data(), static_cast<int>(b.rows()), static_cast<int>(b.cols()),
                             b.outerStride());
}

double trace_term_cyclic(const PotentialSpec& potential, ConstVectorRef u, const Eigen::Ref<const RowMatrix>& b) {
    if (b.isZero(0.0)) return 0.0;
    const Matrix h = potential_hessian(potential, u);
    return (b.transpose() * h * b).trace();
}

ItoReport ito_check(const TrajectoryEnsemble& traj, const PotentialSpec& potential) {
    const int paths = traj.paths();
    const int steps = traj.steps();
    const int n = traj.dim();
    const int m = traj.noise_dim();
    const double h = traj.grid().step();
    if (potential.dim() != n) throw std::invalid_argument("ito_check: potential dimension mismatch");
    const bool regularized = potential.yosida_level > 0.0;

    // Per path, per node: φ(u_k) and the accumulated right-hand side.
    std::vector<double> lhs(static_cast<std::size_t>(paths) * (steps + 1));
    std::vector<double> rhs(lhs.size());
    std::vector<double> martingale(lhs.size());
    parallel_for(static_cast<std::size_t>(paths), [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        Vector grad(n);
        double* l = lhs.data() + jj * (steps + 1);
        double* r = rhs.data() + jj * (steps + 1);
        double* mg = martingale.data() + jj * (steps + 1);
        l[0] = potential_value(potential, traj.state(j, 0));
        r[0] = l[0];
        mg[0] = 0.0;
        detail::with_dims(n, m, [&](auto nn, auto mm) {
            const double* u = traj.state(j, 0).data();
            const double* a = traj.rate(j, 0).data();
            const double* b = traj.coeff(j, 0).data();
            const double* dw = traj.noise().increment(j, 0).data();
            for (int k = 0; k < steps; ++k, u += nn, a += nn, b += nn * mm, dw += mm) {
                detail::potential_gradient_fast(potential, u, grad.data(), nn);
                double a_grad = 0.0, noise_grad = 0.0;
                for (int i = 0; i < nn; ++i) {
                    a_grad += a[i] * grad[i];
                    double bdw = 0.0;
                    for (int c = 0; c < mm; ++c) bdw += b[i * mm + c] * dw[c];
                    noise_grad += grad[i] * bdw;
                }
                const double trace = regularized ? trace_term(potential, ConstVectorMap(u, nn),
                                                              ConstRowMatrixMap(b, nn, mm))
                                                 : detail::trace_raw(potential, u, b, nn, mm, mm);
                r[k + 1] = r[k] + h * (a_grad + 0.5 * trace);
                mg[k + 1] = mg[k] + noise_grad;
                l[k + 1] = detail::potential_value_fast(potential, u + nn, nn);
            }
        });
    });

    ItoReport report;
    report.times.resize(steps + 1);
    report.mean_phi.resize(steps + 1);
    report.rhs_accum.resize(steps + 1);
    report.std_err.resize(steps + 1);
    // Nodes are reduced in blocks so the path-major arrays are read in contiguous runs.
    constexpr int kBlock = 32;
    const auto stride = static_cast<std::size_t>(steps + 1);
    std::vector<double> block_l(static_cast<std::size_t>(kBlock) * paths), block_r(block_l.size()),
        block_d(block_l.size());
    for (int k0 = 0; k0 <= steps; k0 += kBlock) {
        const int width = std::min(kBlock, steps + 1 - k0);
        for (int j = 0; j < paths; ++j) {
            const std::size_t base = static_cast<std::size_t>(j) * stride + k0;
            for (int q = 0; q < width; ++q) {
                const std::size_t idx = base + q;
                const std::size_t dst = static_cast<std::size_t>(q) * paths + j;
                block_l[dst] = lhs[idx];
                block_r[dst] = rhs[idx];
                block_d[dst] = lhs[idx] - rhs[idx] - martingale[idx];
            }
        }
        for (int q = 0; q < width; ++q) {
            const int k = k0 + q;
            const auto column = [&](const std::vector<double>& block) {
                return std::span<const double>(block).subspan(static_cast<std::size_t>(q) * paths, paths);
            };
            report.times[k] = traj.grid().time(k);
            report.mean_phi[k] = mean_estimate(column(block_l)).mean;
            report.rhs_accum[k] = mean_estimate(column(block_r)).mean;
            const MeanEstimate diff = mean_estimate(column(block_d));
            report.std_err[k] = diff.std_err;
            if (std::abs(diff.mean) > report.max_discrepancy) {
                report.max_discrepancy = std::abs(diff.mean);
                report.max_discrepancy_std_err = diff.std_err;
                report.argmax = k;
            }
        }
    }
    return report;
}

Table to_table(const ItoReport& report) {
    Table t;
    t.columns = {"t", "mean_phi", "rhs_accum", "std_err"};
    t.rows.reserve(report.times.size());
    for (std::size_t k = 0; k < report.times.size(); ++k)
        t.rows.push_back({report.times[k], report.mean_phi[k], report.rhs_accum[k], report.std_err[k]});
    return t;
}

}  // namespace edp
