#include <doctest.h>

#include <cmath>
#include <sstream>

#include "rlf/error.hpp"
#include "rlf/grid.hpp"

using namespace rlf;

TEST_CASE("lattice layout") {
  const GridFunction g = GridFunction::zeros(Box::cube(2, 1.0), 0.25, 1);
  CHECK(g.counts() == std::vector<int>{9, 9});
  CHECK(g.node_count() == 81);
  const Vec x = g.node(10);  // (1, 1): last axis fastest
  CHECK(x[0] == doctest::Approx(-0.75));
  CHECK(x[1] == doctest::Approx(-0.75));
  int idx[2];
  g.unflatten(37, idx);
  CHECK(g.flatten(idx) == 37);
  CHECK(Box::cube(2, 1.0).contains_ball(make_vec({0.0, 0.0}), 1.0));
  CHECK_FALSE(Box::cube(2, 1.0).contains_ball(make_vec({0.1, 0.0}), 1.0));
}

TEST_CASE("multilinear interpolation reproduces affine functions") {
  const GridFunction g = GridFunction::sample(Box::cube(2, 1.0), 0.1, 1, [](const Vec& x, std::span<double> o) {
    o[0] = 2.0 * x[0] - 3.0 * x[1] + 0.5;
  });
  for (const Vec& p : {make_vec({0.123, -0.456}), make_vec({-0.99, 0.77}), make_vec({0.0, 0.05})}) {
    CHECK(g.interpolate(p) == doctest::Approx(2.0 * p[0] - 3.0 * p[1] + 0.5).epsilon(1e-13));
  }
  // Clamped outside the box.
  CHECK(g.interpolate(make_vec({5.0, 0.0})) == doctest::Approx(2.5));
}

TEST_CASE("finite-difference gradient of a quadratic") {
  const GridFunction g = GridFunction::sample(Box::cube(2, 1.0), 0.05, 1, [](const Vec& x, std::span<double> o) {
    o[0] = x[0] * x[0] + x[0] * x[1];
  });
  const GridFunction d = g.finite_difference_gradient();
  REQUIRE(d.dim_out() == 2);
  int idx[2] = {10, 30};
  const std::size_t k = g.flatten(idx);
  const Vec x = g.node(k);
  // Centered differences are exact for quadratics.
  CHECK(d.value(k, 0) == doctest::Approx(2.0 * x[0] + x[1]).epsilon(1e-12));
  CHECK(d.value(k, 1) == doctest::Approx(x[0]).epsilon(1e-12));
}

TEST_CASE("grid CSV round trip is bitwise") {
  SampledGrid grid;
  grid.times = {0.0, 0.5};
  for (double t : grid.times) {
    grid.slices.push_back(GridFunction::sample(Box::cube(2, 1.0), 0.25, 2, [t](const Vec& x, std::span<double> o) {
      o[0] = std::sin(x[0]) + t;
      o[1] = x[0] * x[1] / 3.0;
    }));
  }
  std::stringstream ss;
  write_grid_csv(ss, grid);
  const SampledGrid back = read_grid_csv(ss);
  REQUIRE(back.times.size() == 2);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto a = grid.slices[s].values();
    const auto b = back.slices[s].values();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
  }
}

TEST_CASE("grid CSV validation") {
  auto code_of = [](const std::string& text) {
    std::stringstream in(text);
    try {
      read_grid_csv(in);
    } catch (const LabError& e) {
      return e.code();
    }
    return ErrorCode::io;  // sentinel: no error
  };
  // Non-uniform spacing along x1.
  CHECK(code_of("t,x1,x2,b1,b2\n0,0,0,1,1\n0,0.1,0,1,1\n0,0.3,0,1,1\n0,0,0.1,1,1\n0,0.1,0.1,1,1\n0,0.3,0.1,1,1\n") ==
        ErrorCode::invalid_input);
  // Missing node.
  CHECK(code_of("t,x1,x2,b1,b2\n0,0,0,1,1\n0,0.1,0,1,1\n0,0,0.1,1,1\n") == ErrorCode::invalid_input);
  // Bad header.
  CHECK(code_of("time,x,y\n0,0,0\n") == ErrorCode::invalid_input);
  // Non-numeric entry.
  CHECK(code_of("t,x1,x2,b1,b2\n0,0,0,one,1\n") == ErrorCode::invalid_input);
}
