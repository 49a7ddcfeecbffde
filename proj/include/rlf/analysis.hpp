#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rlf/flow.hpp"
#include "rlf/grid.hpp"
#include "rlf/types.hpp"

namespace rlf {

/// (sum_i w_i |v_i|^p)^(1/p) over all samples. p <= 1 is unsupported.
double lp_norm_weighted(std::span<const double> values, std::span<const double> weights, double p);

/// Midpoint-rule L^p norm over B_r(0): only lattice points with |x_i| <= r
/// contribute. `values` holds |v_i| per lattice point.
double lp_norm_ball(const BallLattice& lattice, std::span<const double> values, double p, double r);

/// M_lambda |f| at every node: the largest average of |f| over B_rho(x) cut
/// to the box, for rho in {lambda / 2^j : j >= 0, rho >= h}, and the node's
/// own value. lambda < h is a degenerate-radius error.
GridFunction local_maximal_function(const GridFunction& f, double lambda);
/// Same, restricted to the nodes of f that lie in `region`; averages still
/// use the whole of f.
GridFunction local_maximal_function(const GridFunction& f, double lambda, const Box& region);

/// Extremal sample of a lemma check.
struct WorstCase {
  std::vector<double> x;  // pair checks: first point
  std::vector<double> y;  // pair checks: second point
  double ratio = 0.0;
  double numerator = 0.0;
  double denominator = 0.0;
  std::int64_t index = -1;  // pair index, or sample index in a batch
};

struct LemmaReport {
  std::string lemma_id;  // "pointwise-bv" or "maximal-lp"
  double empirical_constant = 0.0;
  std::size_t sample_count = 0;
  WorstCase worst_case;
  std::vector<double> sample_constants;  // batch runs only
  std::vector<std::size_t> skipped;      // batch samples with zero norm
};

/// ||M_lambda f||_{L^p(B_rho)} / ||f||_{L^p(B_{rho+lambda})} by node quadrature.
/// The box must contain B_{rho+lambda}(0). A zero denominator gives an empty report.
LemmaReport check_maximal_lp_bound(const GridFunction& f, double lambda, double p, double rho);
/// Batch version: the constant is the maximum over samples; zero-norm samples
/// are skipped and listed.
LemmaReport check_maximal_lp_bound(std::span<const GridFunction> batch, double lambda, double p, double rho);

/// max over seeded pairs x, y in B_radius with |x - y| <= lambda of
/// |u(x) - u(y)| / (|x - y| (M_lambda|Du|(x) + M_lambda|Du|(y))).
/// |Du| is the Frobenius norm of the grid's centered-difference gradient.
/// Pairs with a zero denominator are skipped.
LemmaReport check_pointwise_bv(const GridFunction& u, double lambda, std::size_t pair_count, std::uint64_t seed,
                               double radius = 1.0);
/// Same with a caller-supplied |Du| grid on the same lattice as u.
LemmaReport check_pointwise_bv(const GridFunction& u, const GridFunction& grad_magnitude, double lambda,
                               std::size_t pair_count, std::uint64_t seed, double radius);

/// Throws incompatible-ensembles unless the two ensembles share initial
/// points and weights and have equal times at the given indices.
void require_compatible(const FlowEnsemble& X, const FlowEnsemble& Xt, std::size_t k, std::size_t kt);

/// g(t_k) = (sum_i w_i log(1 + |X - Xt| / delta)^p)^(1/p). `kt` defaults to k.
double log_functional_g(const FlowEnsemble& X, const FlowEnsemble& Xt, double delta, double p, std::size_t k,
                        std::optional<std::size_t> kt = {});

/// ||X(t_k) - Xt(t_k)||_{L^p(B_r)} over initial points in B_r.
double flow_lp_difference(const FlowEnsemble& X, const FlowEnsemble& Xt, double p, double r, std::size_t k,
                          std::optional<std::size_t> kt = {});

/// Uniform draws in [0, 1) from the top 53 bits of a 64-bit Mersenne twister.
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed);
  double next();
  /// Uniform point in B_radius(0) by rejection from the cube.
  Vec in_ball(int dim, double radius);

 private:
  std::mt19937_64 engine_;
};

}  // namespace rlf
