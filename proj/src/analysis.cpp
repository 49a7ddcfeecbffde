#include "rlf/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "rlf/error.hpp"
#include "rlf/params.hpp"
#include "rlf/parallel.hpp"

namespace rlf {

namespace {

inline double pow_p(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

double norm2(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int d = 0; d < n; ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

}  // namespace

double lp_norm_weighted(std::span<const double> values, std::span<const double> weights, double p) {
  require_exponent(p);
  if (values.size() != weights.size()) throw LabError(ErrorCode::invalid_input, "values and weights differ in length");
  double scale = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || !std::isfinite(weights[i]) || weights[i] < 0.0) {
      throw LabError(ErrorCode::invalid_input, fmt::format("non-finite or negative sample at index {}", i));
    }
    if (weights[i] > 0.0) scale = std::max(scale, std::abs(values[i]));
  }
  if (scale == 0.0) return 0.0;
  // Scaling by the largest magnitude keeps tiny differences out of the subnormal range.
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) sum += weights[i] * pow_p(std::abs(values[i]) / scale, p);
  return scale * std::pow(sum, 1.0 / p);
}

double lp_norm_ball(const BallLattice& lattice, std::span<const double> values, double p, double r) {
  if (values.size() != lattice.size()) {
    throw LabError(ErrorCode::invalid_input, "one value per lattice point is required");
  }
  const double r2 = r * r * (1.0 + 1e-12);
  std::vector<double> v, w;
  v.reserve(values.size());
  w.reserve(values.size());
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    double s = 0.0;
    for (int d = 0; d < lattice.dim; ++d) s += lattice.points[i * lattice.dim + d] * lattice.points[i * lattice.dim + d];
    if (s <= r2) {
      v.push_back(values[i]);
      w.push_back(lattice.weights[i]);
    }
  }
  return lp_norm_weighted(v, w, p);
}

// ---------------------------------------------------------------------------
// Local maximal function

namespace {

struct Stencil {
  std::vector<int> offsets;  // (n - 1) entries per row
  std::vector<int> half_widths;
};

Stencil make_stencil(int n, double radius_in_cells) {
  Stencil st;
  const double r2 = radius_in_cells * radius_in_cells;
  const int reach = static_cast<int>(std::floor(radius_in_cells + 1e-9));
  if (n == 1) {
    st.half_widths.push_back(reach);
    return st;
  }
  int o[kMaxDim] = {};
  const int m = n - 1;
  std::fill(o, o + m, -reach);
  while (true) {
    double s = 0.0;
    for (int d = 0; d < m; ++d) s += static_cast<double>(o[d]) * o[d];
    if (s <= r2 + 1e-9) {
      st.offsets.insert(st.offsets.end(), o, o + m);
      st.half_widths.push_back(static_cast<int>(std::floor(std::sqrt(std::max(0.0, r2 - s)) + 1e-9)));
    }
    int d = m - 1;
    while (d >= 0 && o[d] == reach) {
      o[d] = -reach;
      --d;
    }
    if (d < 0) break;
    ++o[d];
  }
  return st;
}

}  // namespace

GridFunction local_maximal_function(const GridFunction& f, double lambda) {
  return local_maximal_function(f, lambda, f.box());
}

GridFunction local_maximal_function(const GridFunction& f, double lambda, const Box& region) {
  const double h = f.spacing();
  if (!(lambda >= h) || !std::isfinite(lambda)) {
    throw LabError(ErrorCode::degenerate_radius,
                   fmt::format("maximal-function radius {} is below the grid spacing {}", lambda, h));
  }
  const int n = f.dim();
  if (region.dim() != n) throw LabError(ErrorCode::invalid_input, "region dimension differs from the grid");
  const auto& counts = f.counts();

  std::vector<double> a(f.node_count());
  for (std::size_t k = 0; k < a.size(); ++k) a[k] = f.dim_out() == 1 ? std::abs(f.value(k)) : f.magnitude(k);

  // Prefix sums along the last (contiguous) axis.
  const int len = counts[n - 1];
  const std::size_t rows = f.node_count() / len;
  std::vector<double> prefix(rows * (len + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    double* P = prefix.data() + r * (len + 1);
    P[0] = 0.0;
    for (int j = 0; j < len; ++j) P[j + 1] = P[j] + a[r * len + j];
  }

  std::vector<double> radii;
  for (double rho = lambda; rho >= h; rho *= 0.5) radii.push_back(rho);
  std::vector<Stencil> stencils;
  for (double rho : radii) stencils.push_back(make_stencil(n, rho / h));

  int lo[kMaxDim], hi[kMaxDim];
  std::vector<int> out_counts(n);
  Vec out_lower(n);
  for (int d = 0; d < n; ++d) {
    lo[d] = std::max(0, static_cast<int>(std::ceil((region.lower[d] - f.lower()[d]) / h - 1e-9)));
    hi[d] = std::min(counts[d] - 1, static_cast<int>(std::floor((region.upper[d] - f.lower()[d]) / h + 1e-9)));
    if (hi[d] < lo[d]) throw LabError(ErrorCode::invalid_input, "maximal-function region misses the grid");
    out_counts[d] = hi[d] - lo[d] + 1;
    out_lower[d] = f.lower()[d] + lo[d] * h;
  }
  std::size_t out_total = 1;
  for (int d = 0; d < n; ++d) out_total *= out_counts[d];
  std::vector<double> out(out_total);

  parallel_for(out_total, [&](std::size_t begin, std::size_t end) {
    int idx[kMaxDim], row_idx[kMaxDim];
    for (std::size_t q = begin; q < end; ++q) {
      std::size_t rem = q;
      for (int d = n - 1; d >= 0; --d) {
        idx[d] = lo[d] + static_cast<int>(rem % out_counts[d]);
        rem /= out_counts[d];
      }
      const std::size_t self = f.flatten(idx);
      double best = a[self];
      const int i_last = idx[n - 1];
      for (const Stencil& st : stencils) {
        double sum = 0.0;
        long count = 0;
        const std::size_t nrows = st.half_widths.size();
        for (std::size_t s = 0; s < nrows; ++s) {
          bool inside = true;
          for (int d = 0; d < n - 1; ++d) {
            row_idx[d] = idx[d] + st.offsets[s * (n - 1) + d];
            if (row_idx[d] < 0 || row_idx[d] >= counts[d]) {
              inside = false;
              break;
            }
          }
          if (!inside) continue;
          std::size_t row = 0;
          for (int d = 0; d < n - 1; ++d) row = row * counts[d] + row_idx[d];
          const int w = st.half_widths[s];
          const int j0 = std::max(0, i_last - w);
          const int j1 = std::min(len - 1, i_last + w);
          const double* P = prefix.data() + row * (len + 1);
          sum += P[j1 + 1] - P[j0];
          count += j1 - j0 + 1;
        }
        if (count > 0) best = std::max(best, sum / static_cast<double>(count));
      }
      out[q] = best;
    }
  });
  return GridFunction(out_lower, h, out_counts, 1, std::move(out));
}

// ---------------------------------------------------------------------------
// Maximal L^p bound

namespace {

double grid_ball_norm(const GridFunction& g, double radius, double p) {
  const double r2 = radius * radius * (1.0 + 1e-12);
  const double cell = std::pow(g.spacing(), g.dim());
  std::vector<double> v, w;
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const Vec x = g.node(k);
    if (x.squaredNorm() <= r2) {
      v.push_back(g.dim_out() == 1 ? std::abs(g.value(k)) : g.magnitude(k));
      w.push_back(cell);
    }
  }
  return lp_norm_weighted(v, w, p);
}

struct RatioSample {
  double ratio = 0.0, num = 0.0, den = 0.0;
  bool valid = false;
};

RatioSample maximal_ratio(const GridFunction& f, double lambda, double p, double rho) {
  require_exponent(p);
  if (!(rho > 0.0)) throw LabError(ErrorCode::configuration, "rho must be positive");
  if (!f.box().contains_ball(Vec::Zero(f.dim()), rho + lambda)) {
    throw LabError(ErrorCode::invalid_input,
                   fmt::format("grid box does not contain the ball of radius rho + lambda = {}", rho + lambda));
  }
  RatioSample s;
  s.den = grid_ball_norm(f, rho + lambda, p);
  if (s.den == 0.0) {
    // Still validate lambda so degenerate radii are reported for zero samples too.
    if (!(lambda >= f.spacing())) local_maximal_function(f, lambda, f.box());
    return s;
  }
  Vec rl = Vec::Constant(f.dim(), -rho);
  Vec ru = Vec::Constant(f.dim(), rho);
  const GridFunction M = local_maximal_function(f, lambda, Box{rl, ru});
  s.num = grid_ball_norm(M, rho, p);
  s.ratio = s.num / s.den;
  s.valid = true;
  return s;
}

}  // namespace

LemmaReport check_maximal_lp_bound(const GridFunction& f, double lambda, double p, double rho) {
  LemmaReport rep;
  rep.lemma_id = "maximal-lp";
  const RatioSample s = maximal_ratio(f, lambda, p, rho);
  if (s.valid) {
    rep.sample_count = 1;
    rep.empirical_constant = s.ratio;
    rep.worst_case = {{}, {}, s.ratio, s.num, s.den, 0};
    rep.sample_constants.push_back(s.ratio);
  } else {
    rep.skipped.push_back(0);
  }
  return rep;
}

LemmaReport check_maximal_lp_bound(std::span<const GridFunction> batch, double lambda, double p, double rho) {
  if (batch.empty()) throw LabError(ErrorCode::configuration, "lemma batch must hold at least one sample");
  LemmaReport rep;
  rep.lemma_id = "maximal-lp";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const RatioSample s = maximal_ratio(batch[i], lambda, p, rho);
    if (!s.valid) {
      rep.skipped.push_back(i);
      continue;
    }
    rep.sample_constants.push_back(s.ratio);
    ++rep.sample_count;
    if (rep.worst_case.index < 0 || s.ratio > rep.empirical_constant) {
      rep.empirical_constant = s.ratio;
      rep.worst_case = {{}, {}, s.ratio, s.num, s.den, static_cast<std::int64_t>(i)};
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Pointwise BV inequality

UniformSource::UniformSource(std::uint64_t seed) : engine_(seed) {}

double UniformSource::next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

Vec UniformSource::in_ball(int dim, double radius) {
  Vec x(dim);
  while (true) {
    for (int d = 0; d < dim; ++d) x[d] = radius * (2.0 * next() - 1.0);
    if (x.squaredNorm() <= radius * radius) return x;
  }
}

LemmaReport check_pointwise_bv(const GridFunction& u, double lambda, std::size_t pair_count, std::uint64_t seed,
                               double radius) {
  const GridFunction grad = u.finite_difference_gradient().magnitudes();
  return check_pointwise_bv(u, grad, lambda, pair_count, seed, radius);
}

LemmaReport check_pointwise_bv(const GridFunction& u, const GridFunction& grad_magnitude, double lambda,
                               std::size_t pair_count, std::uint64_t seed, double radius) {
  const int n = u.dim();
  if (grad_magnitude.counts() != u.counts() || grad_magnitude.spacing() != u.spacing() ||
      grad_magnitude.dim_out() != 1) {
    throw LabError(ErrorCode::invalid_input, "gradient grid must be scalar and share the lattice of u");
  }
  if (!(radius > 0.0)) throw LabError(ErrorCode::configuration, "pair radius must be positive");
  if (pair_count == 0) throw LabError(ErrorCode::configuration, "pair_count must be positive");
  if (!u.box().contains_ball(Vec::Zero(n), radius)) {
    throw LabError(ErrorCode::invalid_input, fmt::format("grid box does not contain B_{}(0)", radius));
  }
  const double pad = u.spacing();
  const GridFunction M = local_maximal_function(
      grad_magnitude, lambda, Box{Vec::Constant(n, -radius - pad), Vec::Constant(n, radius + pad)});

  LemmaReport rep;
  rep.lemma_id = "pointwise-bv";
  UniformSource rng(seed);
  const std::size_t max_attempts = 1000 * pair_count + 1000;
  std::size_t accepted = 0, attempts = 0;
  const int m = u.dim_out();
  while (accepted < pair_count) {
    if (++attempts > max_attempts) {
      throw LabError(ErrorCode::configuration, "pair sampling failed: lambda is too small relative to the radius");
    }
    const Vec x = rng.in_ball(n, radius);
    const Vec y = rng.in_ball(n, radius);
    const double dist = (x - y).norm();
    if (dist > lambda) continue;
    const std::int64_t index = static_cast<std::int64_t>(accepted++);
    double diff = 0.0;
    for (int c = 0; c < m; ++c) {
      const double dc = u.interpolate(x, c) - u.interpolate(y, c);
      diff += dc * dc;
    }
    diff = std::sqrt(diff);
    const double denom = dist * (M.interpolate(x) + M.interpolate(y));
    if (!(denom > 0.0)) continue;
    const double ratio = diff / denom;
    ++rep.sample_count;
    if (rep.worst_case.index < 0 || ratio > rep.empirical_constant) {
      rep.empirical_constant = ratio;
      rep.worst_case = {std::vector<double>(x.data(), x.data() + n), std::vector<double>(y.data(), y.data() + n),
                        ratio, diff, denom, index};
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Ensemble functionals

void require_compatible(const FlowEnsemble& X, const FlowEnsemble& Xt, std::size_t k, std::size_t kt) {
  if (X.dim != Xt.dim || X.particle_count() != Xt.particle_count()) {
    throw LabError(ErrorCode::incompatible_ensembles, "ensembles differ in dimension or particle count");
  }
  if (X.initial_points != Xt.initial_points || X.weights != Xt.weights) {
    throw LabError(ErrorCode::incompatible_ensembles, "ensembles do not share initial points and weights");
  }
  if (k >= X.time_count() || kt >= Xt.time_count()) {
    throw LabError(ErrorCode::incompatible_ensembles, fmt::format("time index {} / {} out of range", k, kt));
  }
  const double t = X.times[k];
  if (std::abs(t - Xt.times[kt]) > 1e-12 * (1.0 + std::abs(t))) {
    throw LabError(ErrorCode::incompatible_ensembles,
                   fmt::format("time mismatch: {} versus {}", t, Xt.times[kt]));
  }
}

double log_functional_g(const FlowEnsemble& X, const FlowEnsemble& Xt, double delta, double p, std::size_t k,
                        std::optional<std::size_t> kt) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw LabError(ErrorCode::invalid_delta, fmt::format("delta must be positive and finite, got {}", delta));
  }
  require_exponent(p);
  const std::size_t k2 = kt.value_or(k);
  require_compatible(X, Xt, k, k2);
  const std::size_t N = X.particle_count();
  const int n = X.dim;
  const double* a = X.positions.data() + k * N * n;
  const double* b = Xt.positions.data() + k2 * N * n;
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) sum += X.weights[i] * pow_p(std::log1p(norm2(a + i * n, b + i * n, n) / delta), p);
  return std::pow(sum, 1.0 / p);
}

double flow_lp_difference(const FlowEnsemble& X, const FlowEnsemble& Xt, double p, double r, std::size_t k,
                          std::optional<std::size_t> kt) {
  const std::size_t k2 = kt.value_or(k);
  require_compatible(X, Xt, k, k2);
  const std::size_t N = X.particle_count();
  const int n = X.dim;
  const double* a = X.positions.data() + k * N * n;
  const double* b = Xt.positions.data() + k2 * N * n;
  const double r2 = r * r * (1.0 + 1e-12);
  std::vector<double> v, w;
  v.reserve(N);
  w.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += X.initial_points[i * n + d] * X.initial_points[i * n + d];
    if (s <= r2) {
      v.push_back(norm2(a + i * n, b + i * n, n));
      w.push_back(X.weights[i]);
    }
  }
  return lp_norm_weighted(v, w, p);
}

}  // namespace rlf
