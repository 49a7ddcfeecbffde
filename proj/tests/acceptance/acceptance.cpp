// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "rlf/analysis.hpp"
#include "rlf/commands.hpp"
#include "rlf/config.hpp"
#include "rlf/error.hpp"
#include "rlf/fields.hpp"
#include "rlf/flow.hpp"
#include "rlf/stability.hpp"

using namespace rlf;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  fmt::print("[{}] {} {}: {}\n", pass ? "PASS" : "FAIL", id, what, detail);
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class Fn>
void criterion(int id, const std::string& what, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  std::string detail;
  bool pass = false;
  try {
    pass = fn(detail);
  } catch (const std::exception& e) {
    detail += fmt::format(" exception: {}", e.what());
    pass = false;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report(id, pass, what, fmt::format("{} ({:.1f} s)", detail, secs));
}

Vec endpoint(const VectorField& f, const Vec& x, double tau, double dt) {
  const Vec pts[] = {x};
  const FlowEnsemble e = integrate_points(f, pts, tau, dt, Integrator::rk4);
  return e.position(e.time_count() - 1, 0);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return "<missing " + p.string() + ">";
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string config(const char* name) { return (fs::path(RLF_CONFIG_DIR) / name).string(); }

struct CatalogRun {
  std::string field;
  double epsilon;
  StabilityReport rep;
};

std::vector<CatalogRun> catalog_runs;

void run_catalog() {
  const std::vector<VectorField> catalog{make_constant_field(make_vec({1.0, 0.0})), make_rotation_field(),
                                         make_contraction_field(2), make_shear_field(0.1)};
  const ExperimentSettings settings;
  for (const VectorField& b : catalog) {
    const FlowEnsemble X = integrate_ensemble(b, ExperimentParams::derive(settings, b.sup_norm(), b.sup_norm()));
    for (double eps : {1e-4, 1e-5}) {
      PerturbationSpec spec;
      spec.epsilon = eps;
      catalog_runs.push_back({b.id(), eps, verify_main_estimate(b, X, spec, settings)});
    }
  }
}

}  // namespace

int main() {
  criterion(1, "flow oracles", [](std::string& d) {
    const double rot = (endpoint(make_rotation_field(), make_vec({1.0, 0.0}), std::numbers::pi / 2, 1e-3) -
                        make_vec({0.0, 1.0}))
                           .norm();
    const double con = (endpoint(make_contraction_field(2), make_vec({2.0, 0.0}), 1.0, 1e-3) -
                        make_vec({2.0 * std::exp(-1.0), 0.0}))
                           .norm();
    const Vec exact = make_vec({std::cos(2.0), std::sin(2.0)});
    std::vector<double> errs;
    for (double dt : {0.1, 0.05, 0.025}) errs.push_back((endpoint(make_rotation_field(), make_vec({1.0, 0.0}), 2.0, dt) - exact).norm());
    const double order = std::min(std::log2(errs[0] / errs[1]), std::log2(errs[1] / errs[2]));
    d = fmt::format("rotation err {:.2e} (<= 1e-9), contraction err {:.2e} (<= 1e-9), rk4 order {:.3f} (>= 3.6)", rot,
                    con, order);
    return rot <= 1e-9 && con <= 1e-9 && order >= 3.6;
  });

  criterion(2, "compressibility", [](std::string& d) {
    const ExperimentSettings s;
    auto L = [&](const VectorField& f) {
      return estimate_compressibility(integrate_ensemble(f, ExperimentParams::derive(s, f.sup_norm(), f.sup_norm())),
                                      s.bin_width)
          .L_hat;
    };
    bool ok = true;
    for (const VectorField& f : {make_constant_field(make_vec({1.0, 0.0})), make_rotation_field(), make_shear_field(0.5),
                                 make_shear_field(0.1)}) {
      const double v = L(f);
      ok = ok && v >= 0.85 && v <= 1.15;
      d += fmt::format("{} {:.4f}, ", f.id(), v);
    }
    const double c = L(make_contraction_field(2));
    const double rel = std::abs(c / std::exp(2.0) - 1.0);
    d += fmt::format("contraction {:.4f} (rel. err {:.3f} <= 0.15)", c, rel);
    return ok && rel <= 0.15;
  });

  criterion(3, "lemma suite", [](std::string& d) {
    const RunConfig cfg = load_config(config("lemmas.yaml"));
    const auto batch = make_lemma_batch(cfg.lemmas, 2, cfg.seed);
    std::size_t bad = 0, nodes = 0;
    const double lam = cfg.lemmas.lambda;
    for (std::size_t i = 0; i < 5; ++i) {
      const GridFunction& f = batch[i].magnitude;
      GridFunction scaled = f, half = f;
      for (double& v : scaled.values()) v *= -2.0;
      for (double& v : half.values()) v *= 0.5;
      const GridFunction m1 = local_maximal_function(f, lam / 4), m2 = local_maximal_function(f, lam / 2),
                         m4 = local_maximal_function(f, lam);
      const GridFunction ms = local_maximal_function(scaled, lam / 2), mh = local_maximal_function(half, lam / 2);
      for (std::size_t k = 0; k < f.node_count(); ++k, ++nodes) {
        const bool ok = m1.value(k) <= m2.value(k) && m2.value(k) <= m4.value(k) && m1.value(k) >= std::abs(f.value(k)) &&
                        ms.value(k) == 2.0 * m2.value(k) && mh.value(k) == 0.5 * m2.value(k);
        if (!ok) ++bad;
      }
    }
    const LemmaBatchResult r = run_lemma_batch(cfg.lemmas, 2, cfg.seed);
    const GridFunction lin = GridFunction::sample(Box::cube(2, 1.5), 0.05, 1, [](const Vec& x, std::span<double> o) {
      o[0] = 0.6 * x[0] + 0.8 * x[1];
    });
    const LemmaReport pw = check_pointwise_bv(lin, 0.5, 20000, 9);
    d = fmt::format(
        "nodewise violations {}/{}; batch c_pn {:.4f} over {} fields, max/median {:.3f} (< 10); linear pointwise "
        "{:.9f} (|.-0.5| <= 1e-6)",
        bad, nodes, r.maximal.empirical_constant, r.maximal.sample_count, r.maximal_spread,
        pw.empirical_constant);
    return bad == 0 && std::isfinite(r.maximal.empirical_constant) && r.maximal.sample_count == 50 &&
           r.maximal_spread < 10.0 && std::abs(pw.empirical_constant - 0.5) <= 1e-6;
  });

  criterion(4, "proof-chain replay", [](std::string& d) {
    run_catalog();
    bool ok = true;
    for (const CatalogRun& c : catalog_runs) {
      const bool pass = c.rep.slope_pass_fraction >= 0.99 && c.rep.g_bounded;
      ok = ok && pass;
      d += fmt::format("{} eps={:g}: slope {:.3f}, g<=1.05C {}; ", c.field, c.epsilon, c.rep.slope_pass_fraction,
                       c.rep.g_bounded ? "yes" : "no");
    }
    return ok && catalog_runs.size() == 8;
  });

  criterion(5, "Chebyshev and eta algebra", [](std::string& d) {
    bool ok = !catalog_runs.empty();
    double worst = 0.0;
    for (const CatalogRun& c : catalog_runs) {
      ok = ok && c.rep.chebyshev_ok && c.rep.max_bad_mass <= c.rep.eta;
      worst = std::max(worst, c.rep.identity_ulps);
    }
    const BallLattice lat = make_ball_lattice(2, 1.0, 21);
    const std::vector<double> zeros(lat.size(), 0.0);
    for (double p : {1.1, 1.5, 2.0, 3.0, 4.0}) {
      for (double C : {1e-3, 0.5, 1.0, 7.0, 53.0, 1e4}) {
        for (int e = 1; e <= 14; ++e) {
          const double delta = 0.7 * std::pow(10.0, -e);
          worst = std::max(worst, chebyshev_truncation(zeros, lat.weights, C, delta, p, 2, 1.0, 1.0).identity_ulps);
        }
      }
    }
    d = fmt::format("bad mass <= eta on all {} runs: {}; max identity error {} ulps (<= 4)", catalog_runs.size(),
                    ok ? "yes" : "no", worst);
    return ok && worst <= 4.0;
  });

  criterion(6, "main estimate", [](std::string& d) {
    std::size_t small = 0, held = 0;
    for (const CatalogRun& c : catalog_runs) {
      if (!c.rep.small_delta_ok) continue;
      ++small;
      if (c.rep.main_estimate_holds) ++held;
      d += fmt::format("{} eps={:g}: lhs {:.3e} <= rhs {:.3e}; ", c.field, c.epsilon, c.rep.lhs_sup, c.rep.rhs_bound);
    }
    d += fmt::format("{}/{} small-delta runs hold", held, small);
    return small > 0 && held == small;
  });

  criterion(7, "scaling sweep", [](std::string& d) {
    const RunConfig cfg = load_config(config("sweep.yaml"));
    const SweepResult r = sweep_epsilon(build_field(cfg), cfg.perturbation, cfg.eps_list, cfg.experiment);
    for (const SweepRow& row : r.rows) d += fmt::format("eps={:g} lhs={:.3e} ratio={:.3e}; ", row.epsilon, row.lhs_sup, row.ratio);
    d += fmt::format("strictly decreasing {}, ratio band {:.1f} (< 50)", r.strictly_decreasing ? "yes" : "no",
                     r.ratio_band);
    return r.rows.size() == cfg.eps_list.size() && r.strictly_decreasing && r.ratio_band < 50.0;
  });

  criterion(8, "reproducibility", [](std::string& d) {
    const fs::path root = fs::temp_directory_path() / "rlf_acceptance_repro";
    fs::remove_all(root);
    std::ostringstream sink;
    bool ok = true;
    for (const char* dir : {"a", "b"}) {
      CliOverrides ov;
      ov.seed = 5;
      ov.svg = true;
      ov.out_dir = (root / "run" / dir).string();
      ok = ok && cmd_run(config("rotation.yaml"), ov, sink, sink) == 0;
      ov.out_dir = (root / "lemmas" / dir).string();
      ok = ok && cmd_check_lemmas(config("lemmas.yaml"), ov, sink, sink) == 0;
    }
    std::size_t same = 0, total = 0;
    for (const auto& [sub, file] : std::vector<std::pair<const char*, const char*>>{
             {"run", "report.json"}, {"run", "report.csv"}, {"run", "g_series.svg"}, {"lemmas", "lemma_reports.json"}}) {
      ++total;
      if (slurp(root / sub / "a" / file) == slurp(root / sub / "b" / file)) ++same;
    }
    fs::remove_all(root);
    d = fmt::format("{}/{} report files bitwise identical across two runs", same, total);
    return ok && same == total;
  });

  fmt::print("{} of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
