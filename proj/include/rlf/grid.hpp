#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rlf/types.hpp"

namespace rlf {

/// Axis-aligned box [lower, upper].
struct Box {
  Vec lower;
  Vec upper;

  int dim() const { return static_cast<int>(lower.size()); }
  static Box cube(int dim, double half_width);
  /// True when B_radius(center) lies inside the box.
  bool contains_ball(const Vec& center, double radius) const;
};

/// Scalar or vector samples on a uniform lattice with the same spacing on
/// every axis. Node (i_0, ..., i_{n-1}) sits at lower + h * i; the last
/// axis varies fastest and components are stored per node.
class GridFunction {
 public:
  GridFunction() = default;
  GridFunction(Vec lower, double spacing, std::vector<int> counts, int dim_out,
               std::vector<double> values);

  /// Node count per axis is round((upper - lower) / h) + 1.
  static GridFunction zeros(const Box& box, double spacing, int dim_out);

  template <class Fn>
  static GridFunction sample(const Box& box, double spacing, int dim_out, Fn&& fn) {
    GridFunction g = zeros(box, spacing, dim_out);
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      fn(g.node(k), g.node_values(k));
    }
    return g;
  }

  int dim() const { return static_cast<int>(counts_.size()); }
  int dim_out() const { return dim_out_; }
  double spacing() const { return h_; }
  const Vec& lower() const { return lower_; }
  Vec upper() const;
  Box box() const { return {lower_, upper()}; }
  const std::vector<int>& counts() const { return counts_; }
  std::size_t node_count() const { return node_count_; }

  Vec node(std::size_t flat) const;
  void unflatten(std::size_t flat, int* index) const;
  std::size_t flatten(const int* index) const;

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  std::span<double> node_values(std::size_t flat) {
    return {values_.data() + flat * dim_out_, static_cast<std::size_t>(dim_out_)};
  }
  std::span<const double> node_values(std::size_t flat) const {
    return {values_.data() + flat * dim_out_, static_cast<std::size_t>(dim_out_)};
  }
  double value(std::size_t flat, int component = 0) const {
    return values_[flat * dim_out_ + component];
  }
  /// Euclidean norm of the node's value.
  double magnitude(std::size_t flat) const;

  /// Multilinear interpolation; points outside the box are clamped onto it.
  double interpolate(const Vec& x, int component = 0) const;
  Vec interpolate_vector(const Vec& x) const;

  /// Nodal |f| (Euclidean norm over components).
  GridFunction magnitudes() const;

  /// Gradient by centered differences (one-sided on the boundary). For
  /// dim_out = m the result has m * n components, row-major (component, axis).
  GridFunction finite_difference_gradient() const;

 private:
  Vec lower_;
  double h_ = 0.0;
  std::vector<int> counts_;
  std::vector<std::size_t> strides_;
  std::size_t node_count_ = 0;
  int dim_out_ = 1;
  std::vector<double> values_;
};

/// Time slices of a vector field sampled on one lattice.
struct SampledGrid {
  std::vector<double> times;
  std::vector<GridFunction> slices;
};

/// CSV schema `t,x1,...,xn,b1,...,bm`, one row per (time, node); values are
/// printed with 17 significant digits.
void write_grid_csv(std::ostream& out, const SampledGrid& grid);
void write_grid_csv(std::ostream& out, const GridFunction& grid, double t = 0.0);

/// Reads the schema above. Rows may come in any order but must form a
/// complete uniform lattice (same spacing on every spatial axis, uniform
/// time steps); anything else is an invalid-input error.
SampledGrid read_grid_csv(std::istream& in);
SampledGrid read_grid_csv_file(const std::string& path);

}  // namespace rlf
