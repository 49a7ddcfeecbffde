#include "rlf/stability.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include <fmt/format.h>

#include "rlf/error.hpp"
#include "rlf/parallel.hpp"

namespace rlf {

namespace {

inline double pow_p(double x, double p) { return p == 2.0 ? x * x : std::pow(x, p); }

std::vector<double> step_times(const ExperimentParams& params) {
  const int K = params.steps();
  std::vector<double> t(K + 1);
  for (int k = 0; k <= K; ++k) t[k] = k * params.step();
  t[K] = params.settings().tau;
  return t;
}

// Evaluates value(t_k) for k = 0..K, once when the integrand does not depend on time.
template <class Fn>
std::vector<double> time_series(const std::vector<double>& times, bool autonomous, Fn&& value) {
  std::vector<double> out(times.size());
  if (autonomous) {
    std::fill(out.begin(), out.end(), value(times.front()));
    return out;
  }
  parallel_for(times.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) out[k] = value(times[k]);
  });
  return out;
}

double ulp_distance(double a, double b) {
  if (a == b) return 0.0;
  if (!(a > 0.0) || !(b > 0.0)) return std::numeric_limits<double>::infinity();
  const auto ia = std::bit_cast<std::int64_t>(a);
  const auto ib = std::bit_cast<std::int64_t>(b);
  return static_cast<double>(ia > ib ? ia - ib : ib - ia);
}

void require_delta_below_one(double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw LabError(ErrorCode::invalid_delta, fmt::format("delta must be positive and finite, got {}", delta));
  }
  if (delta >= 1.0) {
    throw LabError(ErrorCode::log_sign,
                   fmt::format("delta = {} is not below 1, so |log delta| does not shrink with delta; reduce epsilon",
                               delta));
  }
}

}  // namespace

std::vector<double> difference_norm_series(const VectorField& b, const VectorField& bt, const ExperimentParams& params) {
  const auto& s = params.settings();
  const BallLattice lattice = make_ball_lattice(s.dim, params.radii().R, s.norm_lattice_size);
  const auto times = step_times(params);
  return time_series(times, b.autonomous() && bt.autonomous(), [&](double t) {
    std::vector<double> v(lattice.size());
    Vec x(s.dim), vb(s.dim), vbt(s.dim);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      x = lattice.point(i);
      b.eval_into(t, x, vb);
      bt.eval_into(t, x, vbt);
      v[i] = (vb - vbt).norm();
    }
    return lp_norm_ball(lattice, v, s.p, lattice.radius);
  });
}

std::vector<double> gradient_norm_series(const VectorField& b, const ExperimentParams& params) {
  const auto& s = params.settings();
  const BallLattice lattice = make_ball_lattice(s.dim, params.radii().R_prime, s.norm_lattice_size);
  const auto times = step_times(params);
  return time_series(times, b.autonomous(), [&](double t) {
    std::vector<double> v(lattice.size());
    Mat J(s.dim, s.dim);
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      b.grad_into(t, lattice.point(i), J);
      v[i] = J.norm();
    }
    return lp_norm_ball(lattice, v, s.p, lattice.radius);
  });
}

double compute_delta(const VectorField& b, const VectorField& bt, const ExperimentParams& params) {
  const auto norms = difference_norm_series(b, bt, params);
  double delta = 0.0;
  for (int k = 0; k < params.steps(); ++k) delta += params.step() * norms[k];
  return delta;
}

// ---------------------------------------------------------------------------
// Gronwall chain

namespace {

GridFunction sample_field_grid(const VectorField& b, double t, const Box& box, double h) {
  const int n = b.dim();
  return GridFunction::sample(box, h, n, [&](const Vec& x, std::span<double> out) {
    Vec v(n);
    b.eval_into(t, x, v);
    for (int d = 0; d < n; ++d) out[d] = v[d];
  });
}

GridFunction sample_gradient_magnitude(const VectorField& b, double t, const Box& box, double h) {
  const int n = b.dim();
  return GridFunction::sample(box, h, 1, [&](const Vec& x, std::span<double> out) {
    Mat J(n, n);
    b.grad_into(t, x, J);
    out[0] = J.norm();
  });
}

}  // namespace

GronwallReport gronwall_chain_report(const FlowEnsemble& X, const FlowEnsemble& Xt, const VectorField& b,
                                     const VectorField& bt, double delta, const ExperimentParams& params) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw LabError(ErrorCode::invalid_delta, fmt::format("the chain needs delta > 0, got {}", delta));
  }
  const auto& s = params.settings();
  const auto& radii = params.radii();
  const int n = s.dim;
  const double p = s.p;
  const int K = params.steps();
  const double dt = params.step();
  if (X.time_count() != static_cast<std::size_t>(K + 1) || Xt.time_count() != X.time_count()) {
    throw LabError(ErrorCode::incompatible_ensembles, "ensembles do not match the experiment's time grid");
  }
  require_compatible(X, Xt, K, K);
  if (X.dim != n || b.dim() != n || bt.dim() != n) {
    throw LabError(ErrorCode::incompatible_ensembles, "ensemble and field dimensions differ");
  }

  GronwallReport rep;
  rep.compress_X = estimate_compressibility(X, s.bin_width);
  rep.compress_Xt = estimate_compressibility(Xt, s.bin_width);
  const double L = rep.compress_X.L_hat;
  const double Lt = rep.compress_Xt.L_hat;

  const auto diff_norms = difference_norm_series(b, bt, params);
  const auto grad_norms = gradient_norm_series(b, params);

  // Lemma constants from the data grid at t = 0.
  const double h = s.grid_spacing;
  const double half = std::ceil((radii.R_prime + radii.R_tilde) / h - 1e-9) * h;
  const Box box = Box::cube(n, half);
  rep.lambda = std::max(radii.lambda, h);
  const double max_sup = std::max(params.sup_b(), params.sup_bt());
  const double rho = s.r + s.T * max_sup;
  const GridFunction b_grid = sample_field_grid(b, 0.0, box, h);
  GridFunction db_grid = sample_gradient_magnitude(b, 0.0, box, h);
  rep.pointwise = check_pointwise_bv(b_grid, db_grid, rep.lambda, static_cast<std::size_t>(s.pair_count), s.seed, rho);
  rep.maximal = check_maximal_lp_bound(db_grid, rep.lambda, p, rho);
  rep.c_n = 2.0 * rep.pointwise.empirical_constant;
  rep.c_pn = 2.0 * rep.maximal.empirical_constant;

  const double reach = rho + dt * max_sup + 2.0 * h;
  const Box region{Vec::Constant(n, -reach), Vec::Constant(n, reach)};
  const double L_root = std::pow(L, 1.0 / p);
  const double Lt_root = std::pow(Lt, 1.0 / p);
  const std::size_t N = X.particle_count();

  rep.steps.resize(K + 1);
  auto evaluate_step = [&](std::size_t k, const GridFunction& M) {
    GronwallStep& st = rep.steps[k];
    const double t = X.times[k];
    st.t = t;
    Vec x(n), xt(n), bx(n), bxt(n), btxt(n);
    double S1 = 0.0, S2 = 0.0, S3 = 0.0, S4 = 0.0, Sg = 0.0, Sd = 0.0;
    const double* a = X.positions.data() + k * N * n;
    const double* c = Xt.positions.data() + k * N * n;
    for (std::size_t i = 0; i < N; ++i) {
      for (int d = 0; d < n; ++d) {
        x[d] = a[i * n + d];
        xt[d] = c[i * n + d];
      }
      const double w = X.weights[i];
      const Vec diff = x - xt;
      const double D = diff.norm();
      const double u = std::log1p(D / delta);
      const double u_pm1 = p == 2.0 ? u : std::pow(u, p - 1.0);
      b.eval_into(t, x, bx);
      b.eval_into(t, xt, bxt);
      bt.eval_into(t, xt, btxt);
      const double kernel = w * u_pm1 / (delta + D);
      S1 += kernel * (bx - bxt).norm();
      S2 += kernel * (bxt - btxt).norm();
      if (rep.c_n > 0.0) {
        S3 += w * u_pm1 * M.interpolate(x);
        S4 += w * u_pm1 * M.interpolate(xt);
      }
      Sg += w * u_pm1 * u;
      if (D > 0.0) Sd += kernel * diff.dot(bx - btxt) / D;
    }
    st.g = std::pow(Sg, 1.0 / p);
    if (st.g > 1e-12) {
      const double factor = std::pow(st.g, 1.0 - p);
      st.term1 = factor * S1;
      st.term2 = factor * S2;
      st.term3 = rep.c_n * factor * S3;
      st.term4 = rep.c_n * factor * S4;
      st.g_prime = factor * Sd;
    }
    st.holder2 = Lt_root * diff_norms[k] / delta;
    st.holder3 = rep.c_n * rep.c_pn * L_root * grad_norms[k];
    st.holder4 = rep.c_n * rep.c_pn * Lt_root * grad_norms[k];
    st.rhs = st.holder2 + st.holder3 + st.holder4;
    st.lhs = flow_lp_difference(X, Xt, p, s.r, k);
  };

  if (b.autonomous()) {
    const GridFunction M = local_maximal_function(db_grid, rep.lambda, region);
    parallel_for(static_cast<std::size_t>(K + 1), [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) evaluate_step(k, M);
    });
  } else {
    for (int k = 0; k <= K; ++k) {
      if (k > 0) db_grid = sample_gradient_magnitude(b, X.times[k], box, h);
      const GridFunction M = local_maximal_function(db_grid, rep.lambda, region);
      evaluate_step(k, M);
    }
  }

  const double slack = 1.0 + kQuadratureSlack;
  double C = 0.0;
  for (int k = 0; k < K; ++k) C += dt * rep.steps[k].rhs;
  rep.C_integrated = C;
  for (int k = 0; k <= K; ++k) {
    GronwallStep& st = rep.steps[k];
    if (k < K) {
      const GronwallStep& next = rep.steps[k + 1];
      st.slope = (next.g - st.g) / (X.times[k + 1] - X.times[k]);
      // The forward difference averages g' over the step, so compare with the larger endpoint bound.
      const double bound = std::max(st.term1 + st.term2, next.term1 + next.term2);
      st.slope_ok = st.slope <= bound * slack;
      if (!st.slope_ok) ++rep.slope_violations;
    }
    st.chain_ok = st.term1 <= (st.term3 + st.term4) * slack && st.term2 <= st.holder2 * slack &&
                  st.term3 <= st.holder3 * slack && st.term4 <= st.holder4 * slack;
    if (!st.chain_ok) ++rep.chain_violations;
    if (st.g > C * slack) rep.g_bounded = false;
  }
  rep.slope_pass_fraction = K > 0 ? 1.0 - static_cast<double>(rep.slope_violations) / K : 1.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Chebyshev step

ChebyshevResult chebyshev_truncation(std::span<const double> log_powers, std::span<const double> weights, double C,
                                     double delta, double p, int dim, double r, double S) {
  require_delta_below_one(delta);
  require_exponent(p);
  if (!(C > 0.0) || !std::isfinite(C)) throw LabError(ErrorCode::invalid_input, fmt::format("C must be positive, got {}", C));
  if (log_powers.size() != weights.size()) throw LabError(ErrorCode::invalid_input, "log powers and weights differ in length");

  ChebyshevResult res;
  const double abs_log = std::abs(std::log(delta));
  res.eta = std::pow(2.0, p) * std::pow(C, p) * std::pow(abs_log, -p);
  res.threshold = std::pow(C, p) / res.eta;

  double total = 0.0, integral = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += weights[i];
    integral += weights[i] * log_powers[i];
    if (log_powers[i] > res.threshold) res.bad_mass += weights[i];
  }
  res.g = std::pow(integral, 1.0 / p);
  res.markov_bound = integral / res.threshold;
  res.within_eta = res.bad_mass <= res.eta;
  res.within_markov = res.bad_mass <= res.markov_bound;
  res.kept_fraction = total > 0.0 ? 1.0 - res.bad_mass / total : 1.0;

  // Extended precision keeps the exponent's rounding error below one ulp of the result.
  const long double pl = p;
  const long double eta_l = std::pow(2.0L, pl) * std::pow(static_cast<long double>(C), pl) *
                            std::pow(std::abs(std::log(static_cast<long double>(delta))), -pl);
  res.exp_factor = static_cast<double>(std::exp(pl * C / std::pow(eta_l, 1.0L / pl)));
  res.target = std::pow(delta, -p / 2.0);
  res.identity_ulps = ulp_distance(res.exp_factor, res.target);
  res.pointwise_cap = std::pow(delta, p) * res.exp_factor;
  res.lhs_bound = std::pow(res.eta * std::pow(S, p) + ball_volume(dim, r) * std::pow(delta, p / 2.0), 1.0 / p);
  return res;
}

// ---------------------------------------------------------------------------
// Main estimate

bool small_delta(double delta) {
  if (delta <= 0.0) return true;
  if (delta >= 1.0) return false;
  return 1.0 / std::abs(std::log(delta)) >= 10.0 * std::sqrt(delta);
}

StabilityReport verify_main_estimate(const VectorField& b, const PerturbationSpec& spec,
                                     const ExperimentSettings& settings) {
  if (settings.dim != b.dim()) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("experiment dimension {} differs from field dimension {}", settings.dim, b.dim()));
  }
  const ExperimentParams base = ExperimentParams::derive(settings, b.sup_norm(), b.sup_norm());
  const FlowEnsemble X = integrate_ensemble(b, base);
  return verify_main_estimate(b, X, spec, settings);
}

StabilityReport verify_main_estimate(const VectorField& b, const FlowEnsemble& X, const PerturbationSpec& spec,
                                     const ExperimentSettings& settings) {
  const VectorField bt = make_perturbation(b, spec);
  const ExperimentParams params = ExperimentParams::derive(settings, b.sup_norm(), bt.sup_norm());
  const auto& s = params.settings();
  const int K = params.steps();
  if (X.dim != s.dim || X.time_count() != static_cast<std::size_t>(K + 1) || X.field_id != b.id() ||
      X.integrator != s.integrator || std::abs(X.times.back() - s.tau) > 0.0) {
    throw LabError(ErrorCode::incompatible_ensembles, "the supplied ensemble was not integrated with these settings");
  }

  StabilityReport rep;
  rep.field_id = b.id();
  rep.perturbed_id = bt.id();
  rep.perturbation = spec;
  rep.params = params;

  const FlowEnsemble Xt = integrate_ensemble(bt, params);
  require_compatible(X, Xt, K, K);
  const auto norms = difference_norm_series(b, bt, params);
  for (int k = 0; k < K; ++k) rep.delta += params.step() * norms[k];
  rep.small_delta_ok = small_delta(rep.delta);

  if (rep.delta == 0.0) {
    rep.exact_equality = true;
    rep.steps.resize(K + 1);
    for (int k = 0; k <= K; ++k) {
      rep.steps[k].t = X.times[k];
      rep.steps[k].lhs = flow_lp_difference(X, Xt, s.p, s.r, k);
      rep.lhs_sup = std::max(rep.lhs_sup, rep.steps[k].lhs);
    }
    rep.rhs_bound = 0.0;
    rep.main_estimate_holds = rep.lhs_sup <= rep.rhs_bound;
    rep.warnings.push_back("delta = 0: the fields agree on every quadrature node (exact equality)");
    return rep;
  }
  require_delta_below_one(rep.delta);
  if (!rep.small_delta_ok) {
    rep.warnings.push_back(fmt::format("delta = {:.6g} is not small: 1/|log delta| < 10 sqrt(delta)", rep.delta));
  }

  GronwallReport chain = gronwall_chain_report(X, Xt, b, bt, rep.delta, params);
  rep.L_hat = chain.compress_X.L_hat;
  rep.L_tilde_hat = chain.compress_Xt.L_hat;
  for (const auto* c : {&chain.compress_X, &chain.compress_Xt}) {
    if (c->ill_conditioned) rep.warnings.push_back(c->warning);
  }
  if (params.radii().lambda < s.grid_spacing) {
    rep.warnings.push_back("maximal-function radius is below the grid spacing; using one grid cell");
  }
  rep.c_n = chain.c_n;
  rep.c_pn = chain.c_pn;
  rep.C_integrated = chain.C_integrated;
  rep.slope_violations = chain.slope_violations;
  rep.slope_pass_fraction = chain.slope_pass_fraction;
  rep.chain_violations = chain.chain_violations;
  rep.g_bounded = chain.g_bounded;
  rep.pointwise = std::move(chain.pointwise);
  rep.maximal = std::move(chain.maximal);
  rep.steps = std::move(chain.steps);

  rep.S = max_trajectory_radius(X) + max_trajectory_radius(Xt);
  const std::size_t N = X.particle_count();
  const int n = s.dim;
  std::vector<ChebyshevResult> cheb(K + 1);
  parallel_for(static_cast<std::size_t>(K + 1), [&](std::size_t begin, std::size_t end) {
    std::vector<double> logs(N);
    for (std::size_t k = begin; k < end; ++k) {
      const double* a = X.positions.data() + k * N * n;
      const double* c = Xt.positions.data() + k * N * n;
      for (std::size_t i = 0; i < N; ++i) {
        double d2 = 0.0;
        for (int d = 0; d < n; ++d) d2 += (a[i * n + d] - c[i * n + d]) * (a[i * n + d] - c[i * n + d]);
        logs[i] = pow_p(std::log1p(std::sqrt(d2) / rep.delta), s.p);
      }
      cheb[k] = chebyshev_truncation(logs, X.weights, rep.C_integrated, rep.delta, s.p, n, s.r, rep.S);
    }
  });
  for (int k = 0; k <= K; ++k) {
    rep.steps[k].bad_mass = cheb[k].bad_mass;
    rep.steps[k].kept_fraction = cheb[k].kept_fraction;
    rep.max_bad_mass = std::max(rep.max_bad_mass, cheb[k].bad_mass);
    rep.chebyshev_ok = rep.chebyshev_ok && cheb[k].within_eta;
    rep.lhs_sup = std::max(rep.lhs_sup, rep.steps[k].lhs);
  }
  rep.eta = cheb[0].eta;
  rep.threshold = cheb[0].threshold;
  rep.exp_factor = cheb[0].exp_factor;
  rep.identity_ulps = cheb[0].identity_ulps;
  rep.pointwise_cap = cheb[0].pointwise_cap;
  rep.rhs_bound = cheb[0].lhs_bound;
  rep.main_estimate_holds = rep.lhs_sup <= rep.rhs_bound;
  return rep;
}

// ---------------------------------------------------------------------------
// Sweep

SweepResult sweep_epsilon(const VectorField& b, const PerturbationSpec& base, std::span<const double> eps_list,
                          const ExperimentSettings& settings) {
  if (eps_list.empty()) throw LabError(ErrorCode::configuration, "eps_list must not be empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] >= 0.0) || !std::isfinite(eps_list[i])) {
      throw LabError(ErrorCode::configuration, fmt::format("eps_list[{}] = {} is not a nonnegative number", i, eps_list[i]));
    }
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) {
      throw LabError(ErrorCode::configuration, "eps_list must be strictly decreasing");
    }
  }
  if (settings.dim != b.dim()) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("experiment dimension {} differs from field dimension {}", settings.dim, b.dim()));
  }
  const ExperimentParams params = ExperimentParams::derive(settings, b.sup_norm(), b.sup_norm());
  const FlowEnsemble X = integrate_ensemble(b, params);

  SweepResult out;
  for (double eps : eps_list) {
    if (eps == 0.0) {
      out.warnings.push_back("epsilon = 0 dropped: exact equality, no logarithmic scaling to measure");
      continue;
    }
    PerturbationSpec spec = base;
    spec.epsilon = eps;
    StabilityReport rep;
    try {
      rep = verify_main_estimate(b, X, spec, settings);
    } catch (const LabError& e) {
      if (e.code() != ErrorCode::log_sign) throw;
      out.warnings.push_back(fmt::format("epsilon = {:.6g} dropped: {}", eps, e.what()));
      continue;
    }
    SweepRow row;
    row.epsilon = eps;
    row.delta = rep.delta;
    row.lhs_sup = rep.lhs_sup;
    row.inv_log_delta = 1.0 / std::abs(std::log(rep.delta));
    row.ratio = rep.lhs_sup * std::abs(std::log(rep.delta));
    row.main_estimate_holds = rep.main_estimate_holds;
    row.small_delta_ok = rep.small_delta_ok;
    out.rows.push_back(row);
  }
  double lo = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.rows.size(); ++i) {
    const SweepRow& row = out.rows[i];
    out.ratio_max = std::max(out.ratio_max, row.ratio);
    lo = std::min(lo, row.ratio);
    if (i > 0 && !(row.lhs_sup < out.rows[i - 1].lhs_sup)) out.strictly_decreasing = false;
    out.all_pass = out.all_pass && row.main_estimate_holds;
  }
  out.ratio_band = out.rows.empty() ? 0.0 : (lo > 0.0 ? out.ratio_max / lo : std::numeric_limits<double>::infinity());
  return out;
}

}  // namespace rlf
