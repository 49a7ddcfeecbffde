#include "rlf/fields.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>

#include <fmt/format.h>

#include "rlf/error.hpp"

namespace rlf {

std::string_view to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::constant: return "constant";
    case FieldKind::rotation: return "rotation";
    case FieldKind::contraction: return "contraction";
    case FieldKind::shear: return "shear";
    case FieldKind::sampled_grid: return "sampled-grid";
    case FieldKind::perturbed: return "perturbed";
  }
  return "unknown";
}

std::string_view to_string(PerturbationMode mode) {
  switch (mode) {
    case PerturbationMode::constant_shift: return "constant-shift";
    case PerturbationMode::smooth_bump: return "smooth-bump";
    case PerturbationMode::seeded_random_trig: return "seeded-random-trig";
  }
  return "unknown";
}

PerturbationMode parse_perturbation_mode(std::string_view name) {
  if (name == "constant-shift") return PerturbationMode::constant_shift;
  if (name == "smooth-bump") return PerturbationMode::smooth_bump;
  if (name == "seeded-random-trig") return PerturbationMode::seeded_random_trig;
  throw LabError(ErrorCode::configuration, fmt::format("unknown perturbation mode '{}'", name));
}

// chi(s) = f(1-u) / (f(1-u) + f(u)) with u = 2s - 1 and f(z) = exp(-1/z).
double cutoff_profile(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 1.0) return 0.0;
  const double u = 2.0 * s - 1.0;
  const double a = std::exp(-1.0 / (1.0 - u));
  const double b = std::exp(-1.0 / u);
  return a / (a + b);
}

double cutoff_profile_derivative(double s) {
  if (s <= 0.5 || s >= 1.0) return 0.0;
  const double u = 2.0 * s - 1.0;
  const double a = std::exp(-1.0 / (1.0 - u));
  const double b = std::exp(-1.0 / u);
  const double sum = a + b;
  const double dchi_du = -a * b * (1.0 / ((1.0 - u) * (1.0 - u)) + 1.0 / (u * u)) / (sum * sum);
  return 2.0 * dchi_du;
}

void detail::FieldModel::jacobian(double, const Vec&, Mat&) const {
  throw LabError(ErrorCode::configuration, "field has no analytic gradient");
}

VectorField::VectorField(std::shared_ptr<const detail::FieldModel> model, FieldMetadata meta)
    : model_(std::move(model)), meta_(std::move(meta)) {
  require_dimension(meta_.dim);
  if (meta_.gradient_step && !(*meta_.gradient_step > 0.0)) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("finite-difference gradient step must be positive, got {}", *meta_.gradient_step));
  }
}

namespace {

void check_point(const VectorField& f, double t, const Vec& x) {
  if (!std::isfinite(t)) throw LabError(ErrorCode::invalid_input, "non-finite time");
  if (x.size() != f.dim()) {
    throw LabError(ErrorCode::invalid_input,
                   fmt::format("point has dimension {}, field has {}", x.size(), f.dim()));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw LabError(ErrorCode::invalid_input, "non-finite point coordinate");
  }
}

}  // namespace

Vec VectorField::eval(double t, const Vec& x) const {
  check_point(*this, t, x);
  Vec out(meta_.dim);
  model_->value(t, x, out);
  return out;
}

Mat VectorField::grad(double t, const Vec& x) const {
  check_point(*this, t, x);
  Mat out(meta_.dim, meta_.dim);
  grad_into(t, x, out);
  return out;
}

void VectorField::grad_into(double t, const Vec& x, Mat& out) const {
  if (meta_.analytic_gradient) {
    model_->jacobian(t, x, out);
  } else {
    out = finite_difference_jacobian(*this, t, x, meta_.gradient_step.value_or(default_gradient_step(x)));
  }
}

double default_gradient_step(const Vec& x) { return 1e-4 * (1.0 + x.norm()); }

Mat finite_difference_jacobian(const VectorField& field, double t, const Vec& x, double h) {
  if (!(h > 0.0)) {
    throw LabError(ErrorCode::configuration, fmt::format("finite-difference step must be positive, got {}", h));
  }
  const int n = field.dim();
  Mat jac(n, n);
  Vec xp = x;
  Vec xm = x;
  Vec fp(n);
  Vec fm(n);
  for (int d = 0; d < n; ++d) {
    xp[d] = x[d] + h;
    xm[d] = x[d] - h;
    field.eval_into(t, xp, fp);
    field.eval_into(t, xm, fm);
    jac.col(d) = (fp - fm) / (2.0 * h);
    xp[d] = x[d];
    xm[d] = x[d];
  }
  return jac;
}

std::vector<Vec> test_lattice(int dim, int per_axis, double half_width) {
  require_dimension(dim);
  std::vector<Vec> pts;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= per_axis;
  pts.reserve(total);
  const double step = 2.0 * half_width / (per_axis - 1);
  for (std::size_t k = 0; k < total; ++k) {
    Vec x(dim);
    std::size_t rem = k;
    for (int d = dim - 1; d >= 0; --d) {
      x[d] = -half_width + step * static_cast<double>(rem % per_axis);
      rem /= per_axis;
    }
    pts.push_back(x);
  }
  return pts;
}

namespace {

// Upper bound on max_{0 <= s <= radius} profile(s): dense scan, golden-section
// polish around the best sample, then a relative margin of 1e-12.
double radial_sup(const std::function<double(double)>& profile, double radius) {
  constexpr int kSamples = 20000;
  double best = 0.0;
  int best_i = 0;
  for (int i = 0; i <= kSamples; ++i) {
    const double v = profile(radius * i / kSamples);
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  double lo = radius * std::max(0, best_i - 1) / kSamples;
  double hi = radius * std::min(kSamples, best_i + 1) / kSamples;
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * radius; ++it) {
    const double m1 = hi - phi * (hi - lo);
    const double m2 = lo + phi * (hi - lo);
    if (profile(m1) < profile(m2)) {
      lo = m1;
    } else {
      hi = m2;
    }
    best = std::max({best, profile(m1), profile(m2)});
  }
  return best * (1.0 + 1e-12);
}

void require_cutoff(double cutoff_radius, std::string_view name) {
  if (!(cutoff_radius > 0.0) || !std::isfinite(cutoff_radius)) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("{} field needs a positive cutoff radius to be bounded", name));
  }
}

// Shared pieces for phi(x) * chi(|x| / rho).
struct Cutoff {
  double radius = 0.0;

  double value(const Vec& x) const { return radius > 0.0 ? cutoff_profile(x.norm() / radius) : 1.0; }

  // Gradient of chi(|x| / rho).
  Vec gradient(const Vec& x) const {
    Vec g = Vec::Zero(x.size());
    if (radius <= 0.0) return g;
    const double r = x.norm();
    const double d = cutoff_profile_derivative(r / radius);
    if (d == 0.0 || r == 0.0) return g;
    return x * (d / (radius * r));
  }
};

class ConstantModel final : public detail::FieldModel {
 public:
  explicit ConstantModel(Vec v) : v_(std::move(v)) {}
  void value(double, const Vec&, Vec& out) const override { out = v_; }
  void jacobian(double, const Vec&, Mat& out) const override { out.setZero(v_.size(), v_.size()); }

 private:
  Vec v_;
};

class RotationModel final : public detail::FieldModel {
 public:
  explicit RotationModel(double rho) : cut_{rho} {}
  void value(double, const Vec& x, Vec& out) const override {
    const double c = cut_.value(x);
    out.resize(2);
    out[0] = -x[1] * c;
    out[1] = x[0] * c;
  }
  void jacobian(double, const Vec& x, Mat& out) const override {
    const double c = cut_.value(x);
    const Vec gc = cut_.gradient(x);
    Vec phi(2);
    phi << -x[1], x[0];
    out.resize(2, 2);
    out << 0.0, -c, c, 0.0;
    out += phi * gc.transpose();
  }

 private:
  Cutoff cut_;
};

class ContractionModel final : public detail::FieldModel {
 public:
  ContractionModel(double rate, double rho) : rate_(rate), cut_{rho} {}
  void value(double, const Vec& x, Vec& out) const override { out = x * (-rate_ * cut_.value(x)); }
  void jacobian(double, const Vec& x, Mat& out) const override {
    const Eigen::Index n = x.size();
    out = Mat::Identity(n, n) * (-rate_ * cut_.value(x));
    out += (x * (-rate_)) * cut_.gradient(x).transpose();
  }

 private:
  double rate_;
  Cutoff cut_;
};

class ShearModel final : public detail::FieldModel {
 public:
  ShearModel(double width, double rho) : a_(width), cut_{rho} {}
  void value(double, const Vec& x, Vec& out) const override {
    out.resize(2);
    out[0] = std::tanh(x[1] / a_) * cut_.value(x);
    out[1] = 0.0;
  }
  void jacobian(double, const Vec& x, Mat& out) const override {
    const double th = std::tanh(x[1] / a_);
    const double c = cut_.value(x);
    const Vec gc = cut_.gradient(x);
    out.resize(2, 2);
    out << th * gc[0], (1.0 - th * th) / a_ * c + th * gc[1], 0.0, 0.0;
  }

 private:
  double a_;
  Cutoff cut_;
};

class SampledModel final : public detail::FieldModel {
 public:
  explicit SampledModel(SampledGrid grid) : grid_(std::move(grid)) {}

  void value(double t, const Vec& x, Vec& out) const override {
    const auto& times = grid_.times;
    if (times.size() == 1 || t <= times.front()) {
      out = grid_.slices.front().interpolate_vector(x);
      return;
    }
    if (t >= times.back()) {
      out = grid_.slices.back().interpolate_vector(x);
      return;
    }
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - times.begin());
    const std::size_t lo = hi - 1;
    const double s = (t - times[lo]) / (times[hi] - times[lo]);
    out = grid_.slices[lo].interpolate_vector(x) * (1.0 - s) + grid_.slices[hi].interpolate_vector(x) * s;
  }

 private:
  SampledGrid grid_;
};

class PerturbedModel final : public detail::FieldModel {
 public:
  struct TrigTerm {
    int component;
    Vec k;
    double coeff;
    double phase;
  };

  PerturbedModel(VectorField base, PerturbationSpec spec, Vec direction)
      : base_(std::move(base)), spec_(std::move(spec)), dir_(std::move(direction)) {}

  void set_trig(std::vector<TrigTerm> terms) { trig_ = std::move(terms); }

  void perturbation(const Vec& x, Vec& w) const {
    const Eigen::Index n = x.size();
    w.setZero(n);
    switch (spec_.mode) {
      case PerturbationMode::constant_shift:
        w = dir_ * spec_.epsilon;
        break;
      case PerturbationMode::smooth_bump: {
        const double z = x.norm() / spec_.bump_radius;
        if (z < 1.0) w = dir_ * (spec_.epsilon * std::exp(1.0 - 1.0 / (1.0 - z * z)));
        break;
      }
      case PerturbationMode::seeded_random_trig:
        for (const auto& term : trig_) w[term.component] += term.coeff * std::sin(term.k.dot(x) + term.phase);
        break;
    }
  }

  void value(double t, const Vec& x, Vec& out) const override {
    base_.eval_into(t, x, out);
    Vec w(x.size());
    perturbation(x, w);
    out += w;
  }

  void jacobian(double t, const Vec& x, Mat& out) const override {
    const Eigen::Index n = x.size();
    base_.grad_into(t, x, out);
    switch (spec_.mode) {
      case PerturbationMode::constant_shift:
        break;
      case PerturbationMode::smooth_bump: {
        const double r = x.norm();
        const double z = r / spec_.bump_radius;
        if (z < 1.0 && r > 0.0) {
          const double q = 1.0 - z * z;
          const double beta = std::exp(1.0 - 1.0 / q);
          const double dbeta = beta * (-2.0 * z / (q * q));
          const Vec grad_beta = x * (dbeta / (r * spec_.bump_radius));
          out += (dir_ * spec_.epsilon) * grad_beta.transpose();
        }
        break;
      }
      case PerturbationMode::seeded_random_trig:
        for (const auto& term : trig_) {
          const double c = term.coeff * std::cos(term.k.dot(x) + term.phase);
          for (Eigen::Index d = 0; d < n; ++d) out(term.component, d) += c * term.k[d];
        }
        break;
    }
  }

 private:
  VectorField base_;
  PerturbationSpec spec_;
  Vec dir_;
  std::vector<TrigTerm> trig_;
};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

VectorField make_constant_field(const Vec& value) {
  require_dimension(static_cast<int>(value.size()));
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (!std::isfinite(value[i])) throw LabError(ErrorCode::invalid_input, "constant field value is not finite");
  }
  FieldMetadata meta;
  meta.kind = FieldKind::constant;
  meta.dim = static_cast<int>(value.size());
  meta.sup_norm = value.norm();
  std::string v;
  for (Eigen::Index i = 0; i < value.size(); ++i) v += fmt::format("{}{}", i ? "," : "", value[i]);
  meta.id = fmt::format("constant({})", v);
  return VectorField(std::make_shared<ConstantModel>(value), std::move(meta));
}

VectorField make_rotation_field(double cutoff_radius) {
  require_cutoff(cutoff_radius, "rotation");
  FieldMetadata meta;
  meta.kind = FieldKind::rotation;
  meta.dim = 2;
  meta.cutoff_radius = cutoff_radius;
  meta.sup_norm = radial_sup([&](double s) { return s * cutoff_profile(s / cutoff_radius); }, cutoff_radius);
  meta.id = fmt::format("rotation(cutoff={})", cutoff_radius);
  return VectorField(std::make_shared<RotationModel>(cutoff_radius), std::move(meta));
}

VectorField make_contraction_field(int dim, double rate, double cutoff_radius) {
  require_dimension(dim);
  require_cutoff(cutoff_radius, "contraction");
  if (!std::isfinite(rate)) throw LabError(ErrorCode::configuration, "contraction rate must be finite");
  FieldMetadata meta;
  meta.kind = FieldKind::contraction;
  meta.dim = dim;
  meta.cutoff_radius = cutoff_radius;
  meta.sup_norm =
      radial_sup([&](double s) { return std::abs(rate) * s * cutoff_profile(s / cutoff_radius); }, cutoff_radius);
  meta.id = fmt::format("contraction(rate={},cutoff={})", rate, cutoff_radius);
  return VectorField(std::make_shared<ContractionModel>(rate, cutoff_radius), std::move(meta));
}

VectorField make_shear_field(double width, double cutoff_radius) {
  if (!(width > 0.0)) throw LabError(ErrorCode::configuration, "shear width must be positive");
  if (cutoff_radius < 0.0) throw LabError(ErrorCode::configuration, "cutoff radius must be >= 0");
  FieldMetadata meta;
  meta.kind = FieldKind::shear;
  meta.dim = 2;
  meta.cutoff_radius = cutoff_radius;
  // For |x| = s the largest |tanh(y / a)| has |y| = s.
  meta.sup_norm = cutoff_radius > 0.0
                      ? radial_sup([&](double s) { return std::tanh(s / width) * cutoff_profile(s / cutoff_radius); },
                                   cutoff_radius)
                      : 1.0;
  meta.id = fmt::format("shear(width={},cutoff={})", width, cutoff_radius);
  return VectorField(std::make_shared<ShearModel>(width, cutoff_radius), std::move(meta));
}

VectorField make_sampled_field(SampledGrid grid, std::optional<double> gradient_step) {
  if (grid.slices.empty() || grid.slices.size() != grid.times.size()) {
    throw LabError(ErrorCode::invalid_input, "sampled field needs one grid per time sample");
  }
  const GridFunction& first = grid.slices.front();
  if (first.dim_out() != first.dim()) {
    throw LabError(ErrorCode::invalid_input,
                   fmt::format("sampled field has {} components in dimension {}", first.dim_out(), first.dim()));
  }
  if (gradient_step && !(*gradient_step > 0.0)) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("finite-difference gradient step must be positive, got {}", *gradient_step));
  }
  double sup = 0.0;
  for (const auto& slice : grid.slices) {
    if (slice.dim() != first.dim() || slice.counts() != first.counts() || slice.dim_out() != first.dim_out()) {
      throw LabError(ErrorCode::invalid_input, "sampled field time slices disagree in shape");
    }
    for (std::size_t k = 0; k < slice.node_count(); ++k) sup = std::max(sup, slice.magnitude(k));
  }
  FieldMetadata meta;
  meta.kind = FieldKind::sampled_grid;
  meta.dim = first.dim();
  meta.sup_norm = sup;
  meta.autonomous = grid.slices.size() == 1;
  meta.analytic_gradient = false;
  meta.mollification_radius = first.spacing();
  meta.gradient_step = gradient_step;
  meta.id = fmt::format("sampled-grid(h={},slices={})", first.spacing(), grid.slices.size());
  return VectorField(std::make_shared<SampledModel>(std::move(grid)), std::move(meta));
}

VectorField load_sampled_field(const std::string& csv_path, std::optional<double> gradient_step) {
  return make_sampled_field(read_grid_csv_file(csv_path), gradient_step);
}

VectorField make_perturbation(const VectorField& field, const PerturbationSpec& spec) {
  if (!(spec.epsilon >= 0.0) || !std::isfinite(spec.epsilon)) {
    throw LabError(ErrorCode::configuration, fmt::format("perturbation epsilon must be >= 0, got {}", spec.epsilon));
  }
  const int n = field.dim();
  Vec dir = Vec::Zero(n);
  dir[0] = 1.0;
  if (spec.direction) {
    if (spec.direction->size() != n || !(spec.direction->norm() > 0.0)) {
      throw LabError(ErrorCode::configuration, "perturbation direction must be a nonzero vector of the field's dimension");
    }
    dir = *spec.direction / spec.direction->norm();
  }
  if (spec.mode == PerturbationMode::smooth_bump && !(spec.bump_radius > 0.0)) {
    throw LabError(ErrorCode::configuration, "bump radius must be positive");
  }

  auto model = std::make_shared<PerturbedModel>(field, spec, dir);
  if (spec.mode == PerturbationMode::seeded_random_trig) {
    std::mt19937_64 rng(spec.seed);
    std::vector<PerturbedModel::TrigTerm> terms;
    for (int j = 0; j < n; ++j) {
      for (int mask = 0; mask < (1 << n); ++mask) {
        Vec k(n);
        for (int d = 0; d < n; ++d) k[d] = ((mask >> (n - 1 - d)) & 1) ? 2.0 : 1.0;
        const double coeff = 2.0 * uniform01(rng) - 1.0;
        const double phase = 2.0 * std::numbers::pi * uniform01(rng);
        terms.push_back({j, k, coeff, phase});
      }
    }
    model->set_trig(terms);
    double peak = 0.0;
    Vec w(n);
    for (const Vec& x : test_lattice(n)) {
      model->perturbation(x, w);
      peak = std::max(peak, w.norm());
    }
    const double scale = (peak > 0.0) ? spec.epsilon / peak : 0.0;
    for (auto& term : terms) term.coeff *= scale;
    model->set_trig(std::move(terms));
  }

  FieldMetadata meta = field.metadata();
  meta.kind = FieldKind::perturbed;
  meta.sup_norm = field.sup_norm() + spec.epsilon;
  meta.id = fmt::format("perturbed({},{},eps={},seed={})", field.id(), to_string(spec.mode), spec.epsilon, spec.seed);
  return VectorField(std::move(model), std::move(meta));
}

}  // namespace rlf
