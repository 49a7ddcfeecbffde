#include "rlf/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "rlf/error.hpp"
#include "rlf/report_io.hpp"
#include "rlf/stability.hpp"

namespace rlf {

namespace fs = std::filesystem;

namespace {

RunConfig prepare(const std::string& path, const CliOverrides& overrides) {
  RunConfig cfg = load_config(path);
  if (overrides.seed) apply_seed(cfg, *overrides.seed);
  if (overrides.out_dir) cfg.out_dir = *overrides.out_dir;
  if (overrides.svg) cfg.emit_svg = true;
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw LabError(ErrorCode::io, fmt::format("cannot create output directory '{}': {}", cfg.out_dir, ec.message()));
  return cfg;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double spread(const std::vector<double>& v) {
  if (v.empty()) return 1.0;
  const double med = median(v);
  const double hi = *std::max_element(v.begin(), v.end());
  if (hi == 0.0) return 1.0;
  return med > 0.0 ? hi / med : std::numeric_limits<double>::infinity();
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const LabError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Lemma batches

std::vector<LemmaSample> make_lemma_batch(const LemmaConfig& c, int dim, std::uint64_t seed) {
  require_dimension(dim);
  const Box box = Box::cube(dim, c.half_width);
  std::vector<LemmaSample> batch;
  batch.reserve(c.batch_size);
  UniformSource centres(seed);
  for (int i = 0; i < c.batch_size; ++i) {
    LemmaSample s;
    if (c.kind == "constant") {
      s.magnitude = GridFunction::sample(box, c.grid_spacing, 1, [](const Vec&, std::span<double> o) { o[0] = 1.0; });
      s.scalar = s.magnitude;
    } else if (c.kind == "gaussian") {
      const Vec centre = centres.in_ball(dim, 0.25);
      const double two_s2 = 2.0 * c.sigma * c.sigma;
      s.magnitude = GridFunction::sample(box, c.grid_spacing, 1, [&](const Vec& x, std::span<double> o) {
        o[0] = std::exp(-(x - centre).squaredNorm() / two_s2);
      });
      s.scalar = s.magnitude;
    } else {
      PerturbationSpec spec;
      spec.mode = PerturbationMode::seeded_random_trig;
      spec.epsilon = 1.0;
      spec.seed = seed + static_cast<std::uint64_t>(i);
      const VectorField w = make_perturbation(make_constant_field(Vec::Zero(dim)), spec);
      const GridFunction values = GridFunction::sample(box, c.grid_spacing, dim, [&](const Vec& x, std::span<double> o) {
        const Vec v = w.eval(0.0, x);
        for (int d = 0; d < dim; ++d) o[d] = v[d];
      });
      s.magnitude = values.magnitudes();
      std::vector<double> first(values.node_count());
      for (std::size_t k = 0; k < first.size(); ++k) first[k] = values.value(k, 0);
      s.scalar = GridFunction(values.lower(), values.spacing(), values.counts(), 1, std::move(first));
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

LemmaBatchResult run_lemma_batch(const LemmaConfig& c, int dim, std::uint64_t seed) {
  const auto batch = make_lemma_batch(c, dim, seed);
  std::vector<GridFunction> mags;
  for (const auto& s : batch) mags.push_back(s.magnitude);

  LemmaBatchResult res;
  res.maximal = check_maximal_lp_bound(mags, c.lambda, c.p, c.rho);
  res.reference_ratio = std::pow(c.rho / (c.rho + c.lambda), dim / c.p);

  res.pointwise.lemma_id = "pointwise-bv";
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const LemmaReport r = check_pointwise_bv(batch[i].scalar, c.lambda, static_cast<std::size_t>(c.pair_count),
                                             seed + 1000003ULL * (i + 1), c.rho);
    res.pointwise.sample_count += r.sample_count;
    if (r.sample_count == 0) {
      res.pointwise.skipped.push_back(i);
      continue;
    }
    res.pointwise_constants.push_back(r.empirical_constant);
    if (res.pointwise.worst_case.index < 0 || r.empirical_constant > res.pointwise.empirical_constant) {
      res.pointwise.empirical_constant = r.empirical_constant;
      res.pointwise.worst_case = r.worst_case;
      res.pointwise.worst_case.index = static_cast<std::int64_t>(i);
    }
  }
  res.pointwise.sample_constants = res.pointwise_constants;

  res.maximal_spread = spread(res.maximal.sample_constants);
  res.pointwise_spread = spread(res.pointwise_constants);
  bool finite = std::isfinite(res.maximal.empirical_constant) && std::isfinite(res.pointwise.empirical_constant);
  for (double v : res.maximal.sample_constants) finite = finite && std::isfinite(v);
  res.stable = finite && res.maximal_spread < 10.0 && res.pointwise_spread < 10.0;
  return res;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = prepare(config_path, overrides);
    const VectorField b = build_field(cfg);
    const StabilityReport rep = verify_main_estimate(b, cfg.perturbation, cfg.experiment);

    write_text_file(join(cfg.out_dir, "report.json"), to_json(rep).dump(2) + "\n");
    std::ostringstream csv;
    write_steps_csv(csv, rep);
    write_text_file(join(cfg.out_dir, "report.csv"), csv.str());
    if (cfg.emit_svg) {
      Series g{"g(t)", {}, {}}, bound{"integrated bound", {}, {}};
      double acc = 0.0;
      for (std::size_t k = 0; k < rep.steps.size(); ++k) {
        g.x.push_back(rep.steps[k].t);
        g.y.push_back(rep.steps[k].g);
        bound.x.push_back(rep.steps[k].t);
        bound.y.push_back(acc);
        if (k + 1 < rep.steps.size()) acc += (rep.steps[k + 1].t - rep.steps[k].t) * rep.steps[k].rhs;
      }
      std::vector<Series> series{g};
      if (!rep.exact_equality) series.push_back(bound);
      write_text_file(join(cfg.out_dir, "g_series.svg"), svg_line_chart("log-distance functional g(t)", "t", "g", series));
    }
    for (const auto& w : rep.warnings) err << "warning: " << w << '\n';

    if (rep.exact_equality) {
      out << fmt::format("exact equality: delta = 0, lhs_sup = {:.6g}\n", rep.lhs_sup);
      return rep.main_estimate_holds ? 0 : 2;
    }
    out << fmt::format("delta = {:.6g}  lhs_sup = {:.6g}  rhs_bound = {:.6g}  C = {:.6g}  small_delta_ok = {}\n",
                       rep.delta, rep.lhs_sup, rep.rhs_bound, rep.C_integrated, rep.small_delta_ok);
    out << (rep.main_estimate_holds ? "main estimate holds\n" : "main estimate FAILS\n");
    return rep.main_estimate_holds ? 0 : 2;
  });
}

int cmd_sweep(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = prepare(config_path, overrides);
    if (!cfg.sweep_present) throw LabError(ErrorCode::configuration, "the config has no 'sweep' section");
    const VectorField b = build_field(cfg);
    const SweepResult sw = sweep_epsilon(b, cfg.perturbation, cfg.eps_list, cfg.experiment);
    for (const auto& w : sw.warnings) err << "warning: " << w << '\n';

    std::ostringstream csv;
    write_sweep_csv(csv, sw);
    write_text_file(join(cfg.out_dir, "sweep.csv"), csv.str());
    if (cfg.emit_svg) {
      Series ratio{"lhs_sup |log delta|", {}, {}}, lhs{"lhs_sup", {}, {}};
      for (const auto& row : sw.rows) {
        ratio.x.push_back(row.epsilon);
        ratio.y.push_back(row.ratio);
        lhs.x.push_back(row.epsilon);
        lhs.y.push_back(row.lhs_sup);
      }
      write_text_file(join(cfg.out_dir, "ratio.svg"),
                      svg_line_chart("sweep over epsilon", "epsilon", "value", {ratio, lhs}, true, true));
    }
    for (const auto& row : sw.rows) {
      out << fmt::format("eps = {:.3g}  delta = {:.6g}  lhs_sup = {:.6g}  ratio = {:.6g}  holds = {}\n", row.epsilon,
                         row.delta, row.lhs_sup, row.ratio, row.main_estimate_holds);
    }
    out << fmt::format("ratio band (max/min) = {:.6g}, lhs strictly decreasing = {}\n", sw.ratio_band,
                       sw.strictly_decreasing);
    if (sw.rows.empty()) err << "warning: no rows were retained\n";
    return sw.all_pass ? 0 : 2;
  });
}

int cmd_check_lemmas(const std::string& config_path, const CliOverrides& overrides, std::ostream& out,
                     std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig cfg = prepare(config_path, overrides);
    const LemmaBatchResult res = run_lemma_batch(cfg.lemmas, cfg.experiment.dim, cfg.seed);

    nlohmann::ordered_json j;
    j["kind"] = cfg.lemmas.kind;
    j["batch_size"] = cfg.lemmas.batch_size;
    j["dim"] = cfg.experiment.dim;
    j["lambda"] = cfg.lemmas.lambda;
    j["p"] = cfg.lemmas.p;
    j["rho"] = cfg.lemmas.rho;
    j["grid_spacing"] = cfg.lemmas.grid_spacing;
    j["seed"] = cfg.seed;
    j["ball_volume_ratio"] = res.reference_ratio;
    j["reports"] = nlohmann::ordered_json::array({to_json(res.maximal), to_json(res.pointwise)});
    j["maximal_spread"] = std::isfinite(res.maximal_spread) ? nlohmann::ordered_json(res.maximal_spread) : nullptr;
    j["pointwise_spread"] =
        std::isfinite(res.pointwise_spread) ? nlohmann::ordered_json(res.pointwise_spread) : nullptr;
    j["stable"] = res.stable;
    write_text_file(join(cfg.out_dir, "lemma_reports.json"), j.dump(2) + "\n");

    out << fmt::format("maximal-lp: constant = {:.6g} over {} samples (max/median = {:.4g})\n",
                       res.maximal.empirical_constant, res.maximal.sample_count, res.maximal_spread);
    out << fmt::format("pointwise-bv: constant = {:.6g} over {} pairs (max/median = {:.4g})\n",
                       res.pointwise.empirical_constant, res.pointwise.sample_count, res.pointwise_spread);
    return res.stable ? 0 : 2;
  });
}

}  // namespace rlf
