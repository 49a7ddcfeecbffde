#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "rlf/fields.hpp"
#include "rlf/params.hpp"
#include "rlf/types.hpp"

namespace rlf {

/// Midpoint-rule lattice over B_r(0): nodes of a `size`-per-axis lattice on
/// [-r, r]^n that fall inside the closed ball, each carrying its cell volume.
struct BallLattice {
  int dim = 2;
  double radius = 0.0;
  double spacing = 0.0;
  std::vector<double> points;  // N x dim, row-major
  std::vector<double> weights;

  std::size_t size() const { return weights.size(); }
  Vec point(std::size_t i) const;
  double total_weight() const;
};

BallLattice make_ball_lattice(int dim, double radius, int size);

/// Trajectories X(t_k, x_i) of a particle lattice.
struct FlowEnsemble {
  int dim = 2;
  std::vector<double> initial_points;  // N x dim
  std::vector<double> weights;         // N
  std::vector<double> times;           // K + 1, uniform, times[0] = 0
  std::vector<double> positions;       // (K + 1) x N x dim
  std::string field_id;
  Integrator integrator = Integrator::rk4;
  double dt = 0.0;
  double lattice_spacing = 0.0;  // 0 when the initial points are not a lattice
  double cell_origin = 0.0;      // lower cell edge of the lattice on every axis
  double radius = 0.0;           // initial points lie in B_radius(0)

  std::size_t particle_count() const { return weights.size(); }
  std::size_t time_count() const { return times.size(); }
  std::span<const double> snapshot(std::size_t k) const {
    const std::size_t stride = particle_count() * dim;
    return {positions.data() + k * stride, stride};
  }
  Vec position(std::size_t k, std::size_t i) const;
  Vec initial_point(std::size_t i) const;
};

/// Integrates every lattice point of B_r(0) from t = 0 to tau with the
/// settings' integrator. A non-finite state is an integration-diverged error
/// naming the particle and the step.
FlowEnsemble integrate_ensemble(const VectorField& field, const ExperimentParams& params);
FlowEnsemble integrate_ensemble(const VectorField& field, const BallLattice& lattice, double tau, double dt,
                                Integrator integrator);
/// Arbitrary initial points (unit weights); the lattice metadata stays zero.
FlowEnsemble integrate_points(const VectorField& field, std::span<const Vec> points, double tau, double dt,
                              Integrator integrator);

struct CompressibilityEstimate {
  double L_hat = 1.0;
  double histogram_resolution = 0.0;
  std::vector<double> per_time_max;  // raw maximal bin density at each t_k
  double mean_occupied_density = 0.0;  // max over k of (mass / occupied volume)
  bool ill_conditioned = false;
  std::string warning;
};

/// Pushforward density by depositing each particle's cell (side =
/// lattice spacing) onto bins of the given width, aligned with the lattice
/// cells. L_hat = max(1, max_k per_time_max[k]).
CompressibilityEstimate estimate_compressibility(const FlowEnsemble& ensemble, double bin_width);

/// True iff |X[k][i]| <= r + t_k * sup_norm + dt * sup_norm for all k, i.
bool check_trajectory_confinement(const FlowEnsemble& ensemble, double r, double sup_norm);

/// max_{k,i} |X[k][i]|.
double max_trajectory_radius(const FlowEnsemble& ensemble);

/// Rows `k,t,i,x1..xn` preceded by `# key=value` metadata lines.
void write_ensemble_csv(std::ostream& out, const FlowEnsemble& ensemble);
FlowEnsemble read_ensemble_csv(std::istream& in);

}  // namespace rlf
