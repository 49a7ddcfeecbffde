#include "rlf/params.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "rlf/error.hpp"
#include "rlf/types.hpp"

namespace rlf {

std::string_view to_string(Integrator integrator) {
  return integrator == Integrator::euler ? "euler" : "rk4";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "euler") return Integrator::euler;
  if (name == "rk4") return Integrator::rk4;
  throw LabError(ErrorCode::configuration, fmt::format("unknown integrator '{}'", name));
}

void require_exponent(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) {
    throw LabError(ErrorCode::unsupported_exponent,
                   fmt::format("exponent p = {} is unsupported; p must satisfy 1 < p < inf", p));
  }
}

int step_count(double tau, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw LabError(ErrorCode::configuration, fmt::format("time step must be positive, got {}", dt));
  }
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw LabError(ErrorCode::configuration, fmt::format("horizon tau must be positive, got {}", tau));
  }
  const double raw = tau / dt;
  // Absorb rounding in exact ratios such as 1 / 1e-3.
  const double rounded = std::round(raw);
  const double steps = (std::abs(raw - rounded) <= 1e-9 * raw) ? rounded : std::ceil(raw);
  if (steps > 1e8) throw LabError(ErrorCode::configuration, "too many time steps");
  return static_cast<int>(std::max(1.0, steps));
}

ExperimentParams ExperimentParams::derive(const ExperimentSettings& s, double sup_b, double sup_bt) {
  require_dimension(s.dim);
  require_exponent(s.p);
  if (!(s.r > 0.0)) throw LabError(ErrorCode::configuration, fmt::format("radius r must be positive, got {}", s.r));
  if (!(s.T > 0.0)) throw LabError(ErrorCode::configuration, fmt::format("horizon T must be positive, got {}", s.T));
  if (!(s.tau > 0.0) || s.tau > s.T) {
    throw LabError(ErrorCode::configuration, fmt::format("tau = {} must lie in (0, T = {}]", s.tau, s.T));
  }
  if (s.lattice_size < 3) throw LabError(ErrorCode::configuration, "lattice_size must be >= 3");
  if (s.norm_lattice_size < 3) throw LabError(ErrorCode::configuration, "norm_lattice_size must be >= 3");
  if (!(s.bin_width > 0.0)) throw LabError(ErrorCode::configuration, "bin_width must be positive");
  if (!(s.grid_spacing > 0.0)) throw LabError(ErrorCode::configuration, "grid_spacing must be positive");
  if (s.pair_count < 1) throw LabError(ErrorCode::configuration, "pair_count must be >= 1");
  if (!(sup_b >= 0.0) || !(sup_bt >= 0.0) || !std::isfinite(sup_b) || !std::isfinite(sup_bt)) {
    throw LabError(ErrorCode::configuration, "sup norms must be finite and nonnegative");
  }

  ExperimentParams params;
  params.settings_ = s;
  params.sup_b_ = sup_b;
  params.sup_bt_ = sup_bt;
  params.steps_ = step_count(s.tau, s.dt);
  params.step_ = s.tau / params.steps_;

  Radii& radii = params.radii_;
  radii.R = s.r + s.T * sup_bt;
  radii.R_tilde = s.T * (sup_b + sup_bt);
  radii.R_prime = s.r + 3.0 * s.T * std::max(sup_b, sup_bt);
  radii.lambda = radii.R_tilde;
  radii.grid_half_width = radii.R_prime + radii.R_tilde;
  return params;
}

}  // namespace rlf
