#include <doctest.h>

#include <cmath>
#include <limits>

#include "rlf/error.hpp"
#include "rlf/fields.hpp"
#include "rlf/grid.hpp"

using namespace rlf;

namespace {

std::vector<VectorField> analytic_catalog() {
  std::vector<VectorField> out{make_constant_field(make_vec({1.0, 0.0})), make_rotation_field(),
                               make_contraction_field(2, 1.0), make_contraction_field(2, -1.0),
                               make_shear_field(0.5)};
  PerturbationSpec spec;
  spec.mode = PerturbationMode::seeded_random_trig;
  spec.epsilon = 0.05;
  spec.seed = 7;
  out.push_back(make_perturbation(make_rotation_field(), spec));
  spec.mode = PerturbationMode::smooth_bump;
  out.push_back(make_perturbation(make_shear_field(0.5), spec));
  return out;
}

}  // namespace

TEST_CASE("catalog values at simple points") {
  const Vec c = make_constant_field(make_vec({1.0, 0.0})).eval(0.3, make_vec({5.0, -7.0}));
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 0.0);

  const Vec r = make_rotation_field().eval(0.0, make_vec({1.0, 0.0}));
  CHECK(r[0] == 0.0);
  CHECK(r[1] == 1.0);

  // The cutoff is identically 1 on B_{rho/2}; rho = 8 covers |(2, 3)| = 3.6.
  const Vec k = make_contraction_field(2, 1.0, 8.0).eval(0.0, make_vec({2.0, 3.0}));
  CHECK(k[0] == -2.0);
  CHECK(k[1] == -3.0);
}

TEST_CASE("catalog gradients") {
  const Mat R = make_rotation_field().grad(0.7, make_vec({0.4, -1.1}));
  CHECK(R(0, 0) == 0.0);
  CHECK(R(0, 1) == -1.0);
  CHECK(R(1, 0) == 1.0);
  CHECK(R(1, 1) == 0.0);
  CHECK(make_constant_field(make_vec({1.0, 0.0})).grad(0.0, make_vec({3.0, 1.0})).norm() == 0.0);
}

TEST_CASE("sampled-grid gradient of (x1^2, 0)") {
  SampledGrid grid;
  grid.times = {0.0};
  grid.slices.push_back(GridFunction::sample(Box::cube(2, 2.0), 0.05, 2, [](const Vec& x, std::span<double> o) {
    o[0] = x[0] * x[0];
    o[1] = 0.0;
  }));
  const VectorField f = make_sampled_field(grid, 1e-3);
  const Mat J = f.grad(0.0, make_vec({1.0, 0.0}));
  // Analytic derivative of x1^2 is 2 x1.
  CHECK(std::abs(J(0, 0) - 2.0) <= 1e-5);
  CHECK(std::abs(J(0, 1)) <= 1e-5);
  CHECK(std::abs(J(1, 0)) <= 1e-5);
  CHECK(std::abs(J(1, 1)) <= 1e-5);
  CHECK(f.metadata().mollification_radius == doctest::Approx(0.05));
}

TEST_CASE("non-positive finite-difference step is a configuration error") {
  const VectorField f = make_rotation_field();
  try {
    finite_difference_jacobian(f, 0.0, make_vec({0.0, 0.0}), 0.0);
    FAIL("expected an error");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::configuration);
  }
  SampledGrid grid;
  grid.times = {0.0};
  grid.slices.push_back(GridFunction::zeros(Box::cube(2, 1.0), 0.1, 2));
  CHECK_THROWS_AS(make_sampled_field(grid, -1e-3), LabError);
}

TEST_CASE("non-finite coordinates are rejected") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  try {
    make_rotation_field().eval(0.0, make_vec({nan, 0.0}));
    FAIL("expected an error");
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::invalid_input);
  }
}

TEST_CASE("perturbations") {
  const VectorField rot = make_rotation_field();
  SUBCASE("zero shift leaves the field unchanged") {
    PerturbationSpec spec;
    const VectorField same = make_perturbation(rot, spec);
    for (const Vec& x : test_lattice(2)) CHECK((same.eval(0.0, x) - rot.eval(0.0, x)).norm() == 0.0);
    CHECK(same.kind() == FieldKind::perturbed);
  }
  SUBCASE("constant shift along e1") {
    PerturbationSpec spec;
    spec.epsilon = 0.1;
    const Vec v = make_perturbation(rot, spec).eval(0.0, make_vec({0.0, 0.0}));
    CHECK(v[0] == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(v[1] == 0.0);
  }
  SUBCASE("seeded trig sums are deterministic and bounded") {
    PerturbationSpec spec;
    spec.mode = PerturbationMode::seeded_random_trig;
    spec.epsilon = 0.05;
    spec.seed = 7;
    const VectorField a = make_perturbation(rot, spec);
    const VectorField b = make_perturbation(rot, spec);
    const auto pts = test_lattice(2, 10, 2.0);
    REQUIRE(pts.size() == 100);
    for (const Vec& x : pts) {
      const Vec va = a.eval(0.0, x), vb = b.eval(0.0, x);
      CHECK(va[0] == vb[0]);
      CHECK(va[1] == vb[1]);
    }
    double wmax = 0.0;
    for (const Vec& x : test_lattice(2)) wmax = std::max(wmax, (a.eval(0.0, x) - rot.eval(0.0, x)).norm());
    CHECK(wmax <= 0.05 * (1.0 + 1e-12));
    CHECK(wmax >= 0.05 * (1.0 - 1e-12));
    CHECK(a.sup_norm() <= rot.sup_norm() + 0.05 + 1e-15);

    spec.seed = 8;
    const VectorField c = make_perturbation(rot, spec);
    CHECK(c.eval(0.0, make_vec({0.3, 0.2}))[0] != a.eval(0.0, make_vec({0.3, 0.2}))[0]);
  }
  SUBCASE("smooth bump is bounded by epsilon") {
    PerturbationSpec spec;
    spec.mode = PerturbationMode::smooth_bump;
    spec.epsilon = 0.02;
    const VectorField b = make_perturbation(rot, spec);
    for (const Vec& x : test_lattice(2)) CHECK((b.eval(0.0, x) - rot.eval(0.0, x)).norm() <= 0.02 * (1 + 1e-12));
  }
  SUBCASE("unknown mode names are configuration errors") {
    try {
      parse_perturbation_mode("gaussian-noise");
      FAIL("expected an error");
    } catch (const LabError& e) {
      CHECK(e.code() == ErrorCode::configuration);
    }
  }
}

TEST_CASE("analytic gradients agree with centered differences to 10 h^2") {
  for (const VectorField& f : analytic_catalog()) {
    CAPTURE(f.id());
    double worst = 0.0;
    for (const Vec& x : test_lattice(2, 21, 2.0)) {
      const double h = default_gradient_step(x);
      const double err = (f.grad(0.0, x) - finite_difference_jacobian(f, 0.0, x, h)).cwiseAbs().maxCoeff();
      worst = std::max(worst, err / (h * h));
    }
    CHECK(worst <= 10.0);
  }
}

TEST_CASE("declared sup norms bound the sampled values") {
  for (const VectorField& f : analytic_catalog()) {
    CAPTURE(f.id());
    double worst = 0.0;
    for (const Vec& x : test_lattice(2, 81, 8.0)) worst = std::max(worst, f.eval(0.0, x).norm());
    CHECK(worst <= f.sup_norm() * (1.0 + 1e-12));
  }
}
