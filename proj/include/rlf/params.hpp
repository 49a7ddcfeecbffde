#pragma once

#include <cstdint>
#include <string_view>

namespace rlf {

enum class Integrator { euler, rk4 };

std::string_view to_string(Integrator integrator);
Integrator parse_integrator(std::string_view name);

/// Independent experiment knobs. Radii are never part of this struct.
struct ExperimentSettings {
  int dim = 2;
  double p = 2.0;
  double r = 1.0;
  double T = 1.0;
  double tau = 1.0;
  double dt = 1e-3;
  Integrator integrator = Integrator::rk4;
  int lattice_size = 101;       // nodes per axis across B_r for the particle lattice
  double bin_width = 0.1;       // compressibility histogram
  double grid_spacing = 0.05;   // lattice for |Db| and its maximal function
  int norm_lattice_size = 101;  // nodes per axis across B_R / B_R' for field norms
  int pair_count = 2000;        // pairs for the empirical pointwise constant
  std::uint64_t seed = 1;
};

/// Radius bookkeeping derived from the two sup norms.
struct Radii {
  double R = 0.0;                // r + T |b~|_inf
  double R_tilde = 0.0;          // T (|b|_inf + |b~|_inf)
  double R_prime = 0.0;          // r + 3 T max(|b|_inf, |b~|_inf)
  double lambda = 0.0;           // maximal-function radius, = R_tilde
  double grid_half_width = 0.0;  // |Db| lattice covers B_{R' + R~}
};

class ExperimentParams {
 public:
  /// Validates the settings (p > 1, 0 < tau <= T, ...) and derives the radii.
  static ExperimentParams derive(const ExperimentSettings& settings, double sup_b, double sup_bt);

  const ExperimentSettings& settings() const noexcept { return settings_; }
  const Radii& radii() const noexcept { return radii_; }
  double sup_b() const noexcept { return sup_b_; }
  double sup_bt() const noexcept { return sup_bt_; }

  /// Number of uniform steps; the step is tau / steps() <= dt so tau is hit exactly.
  int steps() const noexcept { return steps_; }
  double step() const noexcept { return step_; }

 private:
  ExperimentSettings settings_;
  Radii radii_;
  double sup_b_ = 0.0;
  double sup_bt_ = 0.0;
  int steps_ = 0;
  double step_ = 0.0;
};

/// Throws unsupported-exponent for p <= 1 (or non-finite p).
void require_exponent(double p);

/// Uniform step count covering [0, tau] with steps no longer than dt.
int step_count(double tau, double dt);

}  // namespace rlf
