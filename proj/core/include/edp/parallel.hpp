#pragma once

#include <cstddef>
#include <functional>
#include <span>

namespace edp {

/// Process-wide worker count used by path-parallel loops. Defaults to 1.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

/// Runs fn(i) for i in [0, count). Each index is visited exactly once; callers
/// write into per-index slots so the result does not depend on the worker count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

/// Pairwise (cascade) summation with a fixed split order.
double pairwise_sum(std::span<const double> values);

struct MeanEstimate {
    double mean = 0.0;
    double std_err = 0.0;
};

/// Sample mean and its standard error (sample variance with M-1 denominator).
MeanEstimate mean_estimate(std::span<const double> values);

}  // namespace edp
