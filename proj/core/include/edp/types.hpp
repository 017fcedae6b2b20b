#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace edp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// n×m diffusion coefficients are stored row-major to match the on-disk layout.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using RowMatrixMap = Eigen::Map<RowMatrix>;
using ConstRowMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Vector>;
using ConstVectorMap = Eigen::Map<const Vector>;

/// A numerical procedure failed to reach its tolerance (Newton, eigen solve).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request that is well-formed but outside what the library implements.
class UnsupportedError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace edp
