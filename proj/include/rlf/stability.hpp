#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "rlf/analysis.hpp"
#include "rlf/fields.hpp"
#include "rlf/flow.hpp"
#include "rlf/params.hpp"

namespace rlf {

/// Relative slack applied to every discretized inequality of the chain.
inline constexpr double kQuadratureSlack = 0.05;

/// ||(b - bt)(t_k, .)||_{L^p(B_R)} for k = 0..K on a ball lattice of
/// norm_lattice_size nodes per axis. Autonomous pairs are evaluated once.
std::vector<double> difference_norm_series(const VectorField& b, const VectorField& bt, const ExperimentParams& params);
/// ||Db(t_k, .)||_{L^p(B_R')} (Frobenius norm) for k = 0..K.
std::vector<double> gradient_norm_series(const VectorField& b, const ExperimentParams& params);

/// delta = sum_{k<K} dt ||(b - bt)(t_k, .)||_{L^p(B_R)} (left endpoints).
double compute_delta(const VectorField& b, const VectorField& bt, const ExperimentParams& params);

/// One time sample of the chain. term1..term4 are the circled terms, holder*
/// their collapsed bounds, slope the forward difference of g on [t_k, t_k+1].
struct GronwallStep {
  double t = 0.0;
  double g = 0.0;
  double g_prime = 0.0;  // exact derivative from the chain rule
  double slope = 0.0;    // 0 at the last sample
  double term1 = 0.0, term2 = 0.0, term3 = 0.0, term4 = 0.0;
  double holder2 = 0.0, holder3 = 0.0, holder4 = 0.0;
  double rhs = 0.0;  // holder2 + holder3 + holder4
  double lhs = 0.0;  // ||X - Xt||_{L^p(B_r)}
  bool slope_ok = true;
  bool chain_ok = true;
  double bad_mass = 0.0;
  double kept_fraction = 1.0;
};

struct GronwallReport {
  std::vector<GronwallStep> steps;  // K + 1 samples
  double C_integrated = 0.0;
  double c_n = 0.0;   // 2 x empirical pointwise constant
  double c_pn = 0.0;  // 2 x empirical maximal constant
  LemmaReport pointwise;
  LemmaReport maximal;
  CompressibilityEstimate compress_X;
  CompressibilityEstimate compress_Xt;
  double lambda = 0.0;
  std::size_t slope_violations = 0;
  double slope_pass_fraction = 1.0;
  std::size_t chain_violations = 0;
  bool g_bounded = true;
};

/// Replays the g' inequality along two aligned ensembles.
GronwallReport gronwall_chain_report(const FlowEnsemble& X, const FlowEnsemble& Xt, const VectorField& b,
                                     const VectorField& bt, double delta, const ExperimentParams& params);

struct ChebyshevResult {
  double eta = 0.0;
  double threshold = 0.0;     // C^p / eta
  double g = 0.0;
  double bad_mass = 0.0;      // mass where log(1 + |X - Xt| / delta)^p > threshold
  double markov_bound = 0.0;  // g^p / threshold
  bool within_eta = true;     // bad_mass <= eta
  bool within_markov = true;  // bad_mass <= markov_bound
  double kept_fraction = 1.0;
  double exp_factor = 0.0;    // exp(p C / eta^(1/p))
  double target = 0.0;        // delta^(-p/2)
  double identity_ulps = 0.0;
  double pointwise_cap = 0.0; // delta^p exp(p C / eta^(1/p)) = delta^(p/2)
  double lhs_bound = 0.0;     // (eta S^p + omega_n r^n delta^(p/2))^(1/p)
};

/// Chebyshev truncation for one time sample. `log_powers` holds
/// log(1 + |X - Xt| / delta)^p per particle; S = ||X||_inf + ||Xt||_inf.
/// delta >= 1 is a log-sign error, delta <= 0 an invalid-delta error.
ChebyshevResult chebyshev_truncation(std::span<const double> log_powers, std::span<const double> weights, double C,
                                     double delta, double p, int dim, double r, double S);

struct StabilityReport {
  std::string field_id;
  std::string perturbed_id;
  PerturbationSpec perturbation;
  ExperimentParams params;
  double delta = 0.0;
  bool exact_equality = false;
  double L_hat = 1.0;
  double L_tilde_hat = 1.0;
  double c_n = 0.0;
  double c_pn = 0.0;
  std::vector<GronwallStep> steps;
  double C_integrated = 0.0;
  double eta = 0.0;
  double threshold = 0.0;
  double pointwise_cap = 0.0;
  double exp_factor = 0.0;
  double identity_ulps = 0.0;
  double S = 0.0;
  double max_bad_mass = 0.0;
  bool chebyshev_ok = true;
  double lhs_sup = 0.0;
  double rhs_bound = 0.0;
  bool main_estimate_holds = false;
  bool small_delta_ok = false;
  std::size_t slope_violations = 0;
  double slope_pass_fraction = 1.0;
  std::size_t chain_violations = 0;
  bool g_bounded = true;
  LemmaReport pointwise;
  LemmaReport maximal;
  std::vector<std::string> warnings;
};

/// small_delta_ok: 1 / |log delta| >= 10 sqrt(delta).
bool small_delta(double delta);

/// Full experiment: perturbs b, integrates both flows, computes delta,
/// replays the chain and compares sup_k ||X - Xt||_{L^p(B_r)} with the
/// final bound. delta = 0 yields an exact-equality report.
StabilityReport verify_main_estimate(const VectorField& b, const PerturbationSpec& spec,
                                     const ExperimentSettings& settings);
/// Same, reusing an ensemble of b integrated with these settings.
StabilityReport verify_main_estimate(const VectorField& b, const FlowEnsemble& X, const PerturbationSpec& spec,
                                     const ExperimentSettings& settings);

struct SweepRow {
  double epsilon = 0.0;
  double delta = 0.0;
  double lhs_sup = 0.0;
  double inv_log_delta = 0.0;
  double ratio = 0.0;  // lhs_sup |log delta|
  bool main_estimate_holds = false;
  bool small_delta_ok = false;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;  // dropped rows
  double ratio_max = 0.0;
  double ratio_band = 0.0;  // max / min ratio over retained rows
  bool strictly_decreasing = true;
  bool all_pass = true;
};

/// Runs verify_main_estimate for each epsilon (strictly decreasing list),
/// reusing one ensemble of b. Zero epsilon and delta >= 1 rows are dropped.
SweepResult sweep_epsilon(const VectorField& b, const PerturbationSpec& base, std::span<const double> eps_list,
                          const ExperimentSettings& settings);

}  // namespace rlf
