#pragma once

#include "edp/model.hpp"
#include "edp/table.hpp"
#include "edp/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace edp {

/// Uniform grid t_k = k·h on [0, T], h = T/N.
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    TimeGrid() = default;
    TimeGrid(double horizon, int steps);

    double step() const { return horizon / steps; }
    double time(int k) const { return k * step(); }
};

/// Default cap on M·N·m stored increments (2²⁷ doubles, 1 GiB).
inline constexpr std::size_t kDefaultNoiseBudget = std::size_t{1} << 27;

/// Brownian increments ΔW_k⁽ʲ⁾ ~ N(0, h·I_m), generated by Philox keyed by
/// the seed with counter (step pair, component, path). Bit-reproducible and
/// independent of generation order.
class NoiseEnsemble {
public:
    static NoiseEnsemble sample(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed,
                                std::size_t budget = kDefaultNoiseBudget);
    /// Wraps explicit increments (used when reading a container back).
    static NoiseEnsemble from_increments(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed,
                                         std::vector<double> increments);

    int noise_dim() const { return noise_dim_; }
    int paths() const { return paths_; }
    int steps() const { return grid_.steps; }
    const TimeGrid& grid() const { return grid_; }
    std::uint64_t seed() const { return seed_; }

    ConstVectorMap increment(int path, int step) const {
        return ConstVectorMap(data_.data() + offset(path, step), noise_dim_);
    }
    std::span<const double> data() const { return data_; }

private:
    NoiseEnsemble() = default;
    std::size_t offset(int path, int step) const {
        return (static_cast<std::size_t>(path) * grid_.steps + static_cast<std::size_t>(step)) * noise_dim_;
    }

    int noise_dim_ = 0;
    int paths_ = 0;
    TimeGrid grid_;
    std::uint64_t seed_ = 0;
    std::vector<double> data_;
};

using NoisePtr = std::shared_ptr<const NoiseEnsemble>;

NoisePtr sample_noise(int noise_dim, const TimeGrid& grid, int paths, std::uint64_t seed,
                      std::size_t budget = kDefaultNoiseBudget);

/// M discrete Itô processes u_{k+1} = u_k + h·a_k + B_k·ΔW_k sharing one noise
/// ensemble. The decision data are (u₀, a, B) per path; states are derived.
class TrajectoryEnsemble {
public:
    TrajectoryEnsemble(NoisePtr noise, int dim);

    int dim() const { return dim_; }
    int noise_dim() const { return noise_->noise_dim(); }
    int paths() const { return noise_->paths(); }
    int steps() const { return noise_->steps(); }
    const TimeGrid& grid() const { return noise_->grid(); }
    const NoiseEnsemble& noise() const { return *noise_; }
    const NoisePtr& noise_ptr() const { return noise_; }

    VectorMap initial(int path) { return VectorMap(u0_.data() + u0_offset(path), dim_); }
    ConstVectorMap initial(int path) const { return ConstVectorMap(u0_.data() + u0_offset(path), dim_); }
    VectorMap rate(int path, int step) { return VectorMap(rates_.data() + rate_offset(path, step), dim_); }
    ConstVectorMap rate(int path, int step) const {
        return ConstVectorMap(rates_.data() + rate_offset(path, step), dim_);
    }
    RowMatrixMap coeff(int path, int step) {
        return RowMatrixMap(coeffs_.data() + coeff_offset(path, step), dim_, noise_dim());
    }
    ConstRowMatrixMap coeff(int path, int step) const {
        return ConstRowMatrixMap(coeffs_.data() + coeff_offset(path, step), dim_, noise_dim());
    }
    /// Reconstructed state u_k; valid after reconstruct().
    ConstVectorMap state(int path, int step) const {
        return ConstVectorMap(states_.data() + state_offset(path, step), dim_);
    }

    std::span<double> initial_data() { return u0_; }
    std::span<double> rate_data() { return rates_; }
    std::span<double> coeff_data() { return coeffs_; }
    std::span<const double> initial_data() const { return u0_; }
    std::span<const double> rate_data() const { return rates_; }
    std::span<const double> coeff_data() const { return coeffs_; }
    std::span<const double> state_data() const { return states_; }

    /// Recomputes every state from (u₀, a, B, ΔW).
    void reconstruct();
    void reconstruct_path(int path);
    /// Incremental reconstruction for solvers that choose (a_k, B_k) from u_k:
    /// begin_path sets u_0 from the initial value, advance_state computes u_{k+1}.
    void begin_path(int path);
    void advance_state(int path, int step);
    /// States u_0..u_N of one path, for solvers that write the recursion in place.
    double* path_states(int path) { return states_.data() + state_offset(path, 0); }

private:
    std::size_t u0_offset(int path) const { return static_cast<std::size_t>(path) * dim_; }
    std::size_t rate_offset(int path, int step) const {
        return (static_cast<std::size_t>(path) * steps() + step) * dim_;
    }
    std::size_t coeff_offset(int path, int step) const { return rate_offset(path, step) * noise_dim(); }
    std::size_t state_offset(int path, int step) const {
        return (static_cast<std::size_t>(path) * (steps() + 1) + step) * dim_;
    }

    NoisePtr noise_;
    int dim_;
    std::vector<double> u0_;
    std::vector<double> rates_;
    std::vector<double> coeffs_;
    std::vector<double> states_;
};

/// Builds an ensemble from flat row-major data: u0s is M×n, rates M×N×n,
/// coeffs M×N×n×m. Throws std::invalid_argument on shape mismatch.
TrajectoryEnsemble make_trajectory(std::span<const double> u0s, std::span<const double> rates,
                                   std::span<const double> coeffs, NoisePtr noise, const TimeGrid& grid);

/// Tr_H L = tr(B·Bᵀ·D_G∂φ(u)).
double trace_term(const PotentialSpec& potential, ConstVectorRef u, const Eigen::Ref<const RowMatrix>& b);
/// Same quantity through the cyclic permutation tr(Bᵀ·D_G∂φ(u)·B).
double trace_term_cyclic(const PotentialSpec& potential, ConstVectorRef u, const Eigen::Ref<const RowMatrix>& b);

/// Per-node Monte Carlo check of the Itô formula for φ. The discrepancy
/// subtracts the stochastic integral Σ(∂φ(u_l), B_lΔW_l) path by path; it has
/// mean zero for adapted data and removes most of the sampling noise.
struct ItoReport {
    std::vector<double> times;
    std::vector<double> mean_phi;   ///< E φ(u(t_k))
    std::vector<double> rhs_accum;  ///< Eφ(u₀) + Σ_{l<k} h[E(a_l,∂φ(u_l)) + ½E Tr_H L(u_l)]
    std::vector<double> std_err;    ///< standard error of the per-node discrepancy
    double max_discrepancy = 0.0;
    double max_discrepancy_std_err = 0.0;
    int argmax = 0;
};

ItoReport ito_check(const TrajectoryEnsemble& traj, const PotentialSpec& potential);

/// Columns t, mean_phi, rhs_accum, std_err.
Table to_table(const ItoReport& report);

/// Flat binary container: magic, header (n, m, N, M, T, seed), then row-major
/// u0s, rates, coeffs, increments and states as little-endian binary64.
void write_trajectory(const std::filesystem::path& path, const TrajectoryEnsemble& traj);
TrajectoryEnsemble read_trajectory(const std::filesystem::path& path);

}  // namespace edp
