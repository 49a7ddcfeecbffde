#include "rlf/types.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "rlf/error.hpp"

namespace rlf {

Vec make_vec(std::initializer_list<double> values) {
  require_dimension(static_cast<int>(values.size()));
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

double unit_ball_volume(int n) {
  switch (n) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: return std::pow(std::numbers::pi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  }
}

double ball_volume(int n, double r) { return unit_ball_volume(n) * std::pow(r, n); }

void require_dimension(int n) {
  if (n < 1 || n > kMaxDim) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("dimension {} outside the supported range 1..{}", n, kMaxDim));
  }
}

}  // namespace rlf
