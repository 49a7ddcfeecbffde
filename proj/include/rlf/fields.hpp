#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rlf/grid.hpp"
#include "rlf/types.hpp"

namespace rlf {

enum class FieldKind { constant, rotation, contraction, shear, sampled_grid, perturbed };

std::string_view to_string(FieldKind kind);

/// Radial cutoff profile chi(s): 1 on [0, 1/2], 0 on [1, inf), smooth in
/// between. Catalog fields use chi(|x| / cutoff_radius).
double cutoff_profile(double s);
double cutoff_profile_derivative(double s);

/// Linear catalog fields equal their uncut formula on B_3(0) with this radius.
inline constexpr double kDefaultCutoffRadius = 6.0;

struct FieldMetadata {
  FieldKind kind = FieldKind::constant;
  int dim = 2;
  double sup_norm = 0.0;
  bool autonomous = true;
  bool analytic_gradient = true;
  double cutoff_radius = 0.0;         // 0: no cutoff
  double mollification_radius = 0.0;  // sampled fields: half-width of the interpolation kernel
  std::optional<double> gradient_step;  // fixed finite-difference step; unset = 1e-4 (1 + |x|)
  std::string id;
};

namespace detail {

class FieldModel {
 public:
  virtual ~FieldModel() = default;
  virtual void value(double t, const Vec& x, Vec& out) const = 0;
  /// Only called when the metadata declares an analytic gradient.
  virtual void jacobian(double t, const Vec& x, Mat& out) const;
};

}  // namespace detail

/// Immutable, cheaply copyable handle to a time-dependent bounded field
/// b : [0, T] x R^n -> R^n. Evaluation is thread-safe.
class VectorField {
 public:
  VectorField(std::shared_ptr<const detail::FieldModel> model, FieldMetadata meta);

  int dim() const noexcept { return meta_.dim; }
  FieldKind kind() const noexcept { return meta_.kind; }
  double sup_norm() const noexcept { return meta_.sup_norm; }
  bool autonomous() const noexcept { return meta_.autonomous; }
  const std::string& id() const noexcept { return meta_.id; }
  const FieldMetadata& metadata() const noexcept { return meta_; }

  /// b(t, x). Non-finite inputs are an invalid-input error.
  Vec eval(double t, const Vec& x) const;
  /// Db(t, x): closed form for analytic entries, centered differences otherwise.
  Mat grad(double t, const Vec& x) const;

  // Unchecked versions for inner loops.
  void eval_into(double t, const Vec& x, Vec& out) const { model_->value(t, x, out); }
  void grad_into(double t, const Vec& x, Mat& out) const;

 private:
  std::shared_ptr<const detail::FieldModel> model_;
  FieldMetadata meta_;
};

double default_gradient_step(const Vec& x);

/// Centered-difference Jacobian with step h; h <= 0 is a configuration error.
Mat finite_difference_jacobian(const VectorField& field, double t, const Vec& x, double h);

/// 21 points per axis on [-2, 2]^n: the lattice used for sup-norm,
/// gradient-consistency and perturbation-normalisation checks.
std::vector<Vec> test_lattice(int dim, int per_axis = 21, double half_width = 2.0);

VectorField make_constant_field(const Vec& value);
/// (-y, x) * chi(|x| / cutoff_radius); n = 2.
VectorField make_rotation_field(double cutoff_radius = kDefaultCutoffRadius);
/// -rate * x * chi(|x| / cutoff_radius). A negative rate gives an expansion.
VectorField make_contraction_field(int dim, double rate = 1.0, double cutoff_radius = kDefaultCutoffRadius);
/// (tanh(y / width), 0) * chi(|x| / cutoff_radius); n = 2.
VectorField make_shear_field(double width, double cutoff_radius = kDefaultCutoffRadius);

/// Piecewise multilinear interpolation of lattice samples (linear in time
/// between slices, clamped outside the sampled box and time range).
VectorField make_sampled_field(SampledGrid grid, std::optional<double> gradient_step = {});
VectorField load_sampled_field(const std::string& csv_path, std::optional<double> gradient_step = {});

enum class PerturbationMode { constant_shift, smooth_bump, seeded_random_trig };

std::string_view to_string(PerturbationMode mode);
/// Unknown names are a configuration error.
PerturbationMode parse_perturbation_mode(std::string_view name);

struct PerturbationSpec {
  PerturbationMode mode = PerturbationMode::constant_shift;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  /// Shift/bump direction (normalised); defaults to e_1.
  std::optional<Vec> direction;
  /// Support radius of the smooth bump, centred at the origin.
  double bump_radius = 1.0;
};

/// b~ = b + w with |w| <= epsilon. For seeded-random-trig the perturbation
/// is sum_{k in {1,2}^n} c_k sin(k.x + phi_k) per component, with
/// coefficients from the seed, rescaled so max |w| over test_lattice() is
/// exactly epsilon.
VectorField make_perturbation(const VectorField& field, const PerturbationSpec& spec);

}  // namespace rlf
