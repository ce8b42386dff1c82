#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace adaconv {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;
using EigenvalueList = std::vector<Complex>;

using VectorRef = Eigen::Ref<Vector>;
using ConstVectorRef = Eigen::Ref<const Vector>;
using MatrixRef = Eigen::Ref<Matrix>;

using Index = Eigen::Index;

}  // namespace adaconv
