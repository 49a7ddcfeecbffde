#include "rlf/report_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <fmt/format.h>

#include "rlf/error.hpp"

namespace rlf {

using ojson = nlohmann::ordered_json;

namespace {

// JSON has no non-finite numbers; they become null.
ojson num(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }

ojson num_array(const std::vector<double>& v) {
  ojson a = ojson::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::string g17(double v) { return fmt::format("{:.17g}", v); }

}  // namespace

ojson to_json(const LemmaReport& r) {
  ojson j;
  j["lemma_id"] = r.lemma_id;
  j["empirical_constant"] = num(r.empirical_constant);
  j["sample_count"] = r.sample_count;
  ojson w;
  w["index"] = r.worst_case.index;
  w["ratio"] = num(r.worst_case.ratio);
  w["numerator"] = num(r.worst_case.numerator);
  w["denominator"] = num(r.worst_case.denominator);
  if (!r.worst_case.x.empty()) w["x"] = num_array(r.worst_case.x);
  if (!r.worst_case.y.empty()) w["y"] = num_array(r.worst_case.y);
  j["worst_case"] = w;
  if (!r.sample_constants.empty() || !r.skipped.empty()) {
    j["sample_constants"] = num_array(r.sample_constants);
    j["skipped"] = r.skipped;
  }
  return j;
}

ojson to_json(const CompressibilityEstimate& c) {
  ojson j;
  j["L_hat"] = num(c.L_hat);
  j["kind"] = "estimate";
  j["histogram_resolution"] = num(c.histogram_resolution);
  double raw = 0.0;
  for (double v : c.per_time_max) raw = std::max(raw, v);
  j["max_bin_density"] = num(raw);
  j["mean_occupied_density"] = num(c.mean_occupied_density);
  j["ill_conditioned"] = c.ill_conditioned;
  if (!c.warning.empty()) j["warning"] = c.warning;
  return j;
}

ojson to_json(const ExperimentParams& params) {
  const auto& s = params.settings();
  const auto& r = params.radii();
  ojson j;
  j["dim"] = s.dim;
  j["p"] = num(s.p);
  j["r"] = num(s.r);
  j["T"] = num(s.T);
  j["tau"] = num(s.tau);
  j["dt"] = num(s.dt);
  j["steps"] = params.steps();
  j["step"] = num(params.step());
  j["integrator"] = std::string(to_string(s.integrator));
  j["lattice_size"] = s.lattice_size;
  j["bin_width"] = num(s.bin_width);
  j["grid_spacing"] = num(s.grid_spacing);
  j["norm_lattice_size"] = s.norm_lattice_size;
  j["pair_count"] = s.pair_count;
  j["seed"] = s.seed;
  j["sup_b"] = num(params.sup_b());
  j["sup_b_tilde"] = num(params.sup_bt());
  j["R"] = num(r.R);
  j["R_tilde"] = num(r.R_tilde);
  j["R_prime"] = num(r.R_prime);
  j["lambda"] = num(r.lambda);
  j["grid_half_width"] = num(r.grid_half_width);
  return j;
}

ojson to_json(const StabilityReport& r) {
  ojson j;
  j["field_id"] = r.field_id;
  j["perturbed_id"] = r.perturbed_id;
  ojson pert;
  pert["mode"] = std::string(to_string(r.perturbation.mode));
  pert["epsilon"] = num(r.perturbation.epsilon);
  pert["seed"] = r.perturbation.seed;
  if (r.perturbation.direction) {
    const Vec& d = *r.perturbation.direction;
    pert["direction"] = num_array(std::vector<double>(d.data(), d.data() + d.size()));
  }
  j["perturbation"] = pert;
  j["params"] = to_json(r.params);
  j["delta"] = num(r.delta);
  j["exact_equality"] = r.exact_equality;
  j["small_delta_ok"] = r.small_delta_ok;
  j["lhs_sup"] = num(r.lhs_sup);
  j["rhs_bound"] = num(r.rhs_bound);
  j["main_estimate_holds"] = r.main_estimate_holds;
  j["C_integrated"] = num(r.C_integrated);
  j["eta"] = num(r.eta);
  j["chebyshev_threshold"] = num(r.threshold);
  j["max_bad_mass"] = num(r.max_bad_mass);
  j["chebyshev_ok"] = r.chebyshev_ok;
  j["exp_factor"] = num(r.exp_factor);
  j["identity_ulps"] = num(r.identity_ulps);
  j["pointwise_cap"] = num(r.pointwise_cap);
  j["trajectory_sup_sum"] = num(r.S);
  ojson comp;
  comp["kind"] = "histogram estimate";
  comp["L_hat"] = num(r.L_hat);
  comp["L_tilde_hat"] = num(r.L_tilde_hat);
  j["compressibility"] = comp;
  j["c_n"] = num(r.c_n);
  j["c_pn"] = num(r.c_pn);
  ojson lem = ojson::array();
  if (!r.pointwise.lemma_id.empty()) lem.push_back(to_json(r.pointwise));
  if (!r.maximal.lemma_id.empty()) lem.push_back(to_json(r.maximal));
  j["lemma_reports"] = lem;
  ojson chain;
  chain["slope_violations"] = r.slope_violations;
  chain["slope_pass_fraction"] = num(r.slope_pass_fraction);
  chain["chain_violations"] = r.chain_violations;
  chain["g_bounded"] = r.g_bounded;
  j["chain"] = chain;

  std::vector<double> t, g, gp, slope, t1, t2, t3, t4, h2, h3, h4, rhs, lhs;
  for (const auto& s : r.steps) {
    t.push_back(s.t);
    g.push_back(s.g);
    gp.push_back(s.g_prime);
    slope.push_back(s.slope);
    t1.push_back(s.term1);
    t2.push_back(s.term2);
    t3.push_back(s.term3);
    t4.push_back(s.term4);
    h2.push_back(s.holder2);
    h3.push_back(s.holder3);
    h4.push_back(s.holder4);
    rhs.push_back(s.rhs);
    lhs.push_back(s.lhs);
  }
  j["times"] = num_array(t);
  j["g_series"] = num_array(g);
  j["lhs_series"] = num_array(lhs);
  ojson terms;
  terms["g_prime"] = num_array(gp);
  terms["slope"] = num_array(slope);
  terms["term1"] = num_array(t1);
  terms["term2"] = num_array(t2);
  terms["term3"] = num_array(t3);
  terms["term4"] = num_array(t4);
  terms["holder2"] = num_array(h2);
  terms["holder3"] = num_array(h3);
  terms["holder4"] = num_array(h4);
  terms["rhs"] = num_array(rhs);
  j["gronwall_terms"] = terms;
  j["warnings"] = r.warnings;
  return j;
}

ojson to_json(const SweepResult& sw) {
  ojson j;
  ojson rows = ojson::array();
  for (const auto& row : sw.rows) {
    ojson o;
    o["epsilon"] = num(row.epsilon);
    o["delta"] = num(row.delta);
    o["lhs_sup"] = num(row.lhs_sup);
    o["inv_log_delta"] = num(row.inv_log_delta);
    o["ratio"] = num(row.ratio);
    o["main_estimate_holds"] = row.main_estimate_holds;
    o["small_delta_ok"] = row.small_delta_ok;
    rows.push_back(o);
  }
  j["rows"] = rows;
  j["ratio_max"] = num(sw.ratio_max);
  j["ratio_band"] = num(sw.ratio_band);
  j["strictly_decreasing"] = sw.strictly_decreasing;
  j["all_pass"] = sw.all_pass;
  j["warnings"] = sw.warnings;
  return j;
}

void write_steps_csv(std::ostream& out, const StabilityReport& r) {
  out << "k,t,g,g_prime,slope,term1,term2,term3,term4,holder2,holder3,holder4,rhs,lhs,bad_mass,kept_fraction,"
         "slope_ok,chain_ok\n";
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const auto& s = r.steps[k];
    out << k;
    for (double v : {s.t, s.g, s.g_prime, s.slope, s.term1, s.term2, s.term3, s.term4, s.holder2, s.holder3,
                     s.holder4, s.rhs, s.lhs, s.bad_mass, s.kept_fraction}) {
      out << ',' << g17(v);
    }
    out << ',' << (s.slope_ok ? "true" : "false") << ',' << (s.chain_ok ? "true" : "false") << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sw) {
  out << "epsilon,delta,lhs_sup,inv_log_delta,ratio,main_estimate_holds,small_delta_ok\n";
  for (const auto& row : sw.rows) {
    out << g17(row.epsilon) << ',' << g17(row.delta) << ',' << g17(row.lhs_sup) << ',' << g17(row.inv_log_delta)
        << ',' << g17(row.ratio) << ',' << (row.main_estimate_holds ? "true" : "false") << ','
        << (row.small_delta_ok ? "true" : "false") << '\n';
  }
}

namespace {

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, bool log_x, bool log_y) {
  constexpr double W = 800, H = 500, left = 80, right = 20, top = 40, bottom = 60;
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  auto tx = [&](double v) { return log_x ? (v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN()) : v; };
  auto ty = [&](double v) { return log_y ? (v > 0 ? std::log10(v) : std::numeric_limits<double>::quiet_NaN()) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double a = tx(s.x[i]), b = ty(s.y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      x0 = std::min(x0, a);
      x1 = std::max(x1, a);
      y0 = std::min(y0, b);
      y1 = std::max(y1, b);
    }
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double a) { return left + (a - x0) / (x1 - x0) * pw; };
  auto py = [&](double b) { return top + (1.0 - (b - y0) / (y1 - y0)) * ph; };

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" width=\"{}\" height=\"{}\">\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n"
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
      W, H, W, H, W / 2, escape_xml(title), left, top, pw, ph);
  for (int i = 0; i <= 4; ++i) {
    const double a = x0 + (x1 - x0) * i / 4.0, b = y0 + (y1 - y0) * i / 4.0;
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"middle\">{}{:.3g}</text>\n",
                       px(a), H - bottom + 16, log_x ? "1e" : "", a);
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"11\" text-anchor=\"end\">{}{:.3g}</text>\n",
                       left - 6, py(b) + 4, log_y ? "1e" : "", b);
  }
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n", left + pw / 2,
                     H - 18, escape_xml(x_label));
  svg += fmt::format(
      "<text x=\"18\" y=\"{}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
      top + ph / 2, top + ph / 2, escape_xml(y_label));
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
      const double a = tx(series[s].x[i]), b = ty(series[s].y[i]);
      if (!std::isfinite(a) || !std::isfinite(b)) continue;
      pts += fmt::format("{:.2f},{:.2f} ", px(a), py(b));
    }
    const char* color = colors[s % 5];
    svg += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
    svg += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"12\" fill=\"{}\">{}</text>\n", left + 10,
                       top + 16 + 16 * s, color, escape_xml(series[s].label));
  }
  svg += "</svg>\n";
  return svg;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LabError(ErrorCode::io, fmt::format("cannot open '{}' for writing", path));
  out << content;
  if (!out) throw LabError(ErrorCode::io, fmt::format("failed to write '{}'", path));
}

}  // namespace rlf
