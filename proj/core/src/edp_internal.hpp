#pragma once

#include "edp/edp.hpp"

#include <string>
#include <vector>

namespace edp::detail {

void check_dimensions(const TrajectoryEnsemble& traj, const ProblemSpec& problem);

FunctionalReport reduce_terms(std::string functional, const std::vector<std::string>& names,
                              const std::vector<double>& per_path, int paths);

}  // namespace edp::detail
