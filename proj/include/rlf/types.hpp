#pragma once

#include <initializer_list>

#include <Eigen/Core>

namespace rlf {

/// Spatial dimensions 1..3 are supported; points and Jacobians live on the stack.
inline constexpr int kMaxDim = 3;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

Vec make_vec(std::initializer_list<double> values);

/// Lebesgue measure of the unit ball in R^n.
double unit_ball_volume(int n);

/// Volume of B_r(0) in R^n.
double ball_volume(int n, double r);

void require_dimension(int n);

}  // namespace rlf
