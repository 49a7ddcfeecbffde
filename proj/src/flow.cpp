#include "rlf/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "rlf/error.hpp"
#include "rlf/parallel.hpp"

namespace rlf {

Vec BallLattice::point(std::size_t i) const {
  return Eigen::Map<const Vec>(points.data() + i * dim, dim);
}

double BallLattice::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

BallLattice make_ball_lattice(int dim, double radius, int size) {
  require_dimension(dim);
  if (!(radius > 0.0)) throw LabError(ErrorCode::configuration, "ball radius must be positive");
  if (size < 2) throw LabError(ErrorCode::configuration, "ball lattice needs at least 2 nodes per axis");
  BallLattice lat;
  lat.dim = dim;
  lat.radius = radius;
  lat.spacing = 2.0 * radius / (size - 1);
  const double cell = std::pow(lat.spacing, dim);
  const double r2 = radius * radius * (1.0 + 1e-12);
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= static_cast<std::size_t>(size);
  double x[kMaxDim];
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t rem = k;
    double norm2 = 0.0;
    for (int d = dim - 1; d >= 0; --d) {
      x[d] = -radius + lat.spacing * static_cast<double>(rem % size);
      rem /= size;
      norm2 += x[d] * x[d];
    }
    if (norm2 <= r2) {
      lat.points.insert(lat.points.end(), x, x + dim);
      lat.weights.push_back(cell);
    }
  }
  return lat;
}

Vec FlowEnsemble::position(std::size_t k, std::size_t i) const {
  return Eigen::Map<const Vec>(positions.data() + (k * particle_count() + i) * dim, dim);
}

Vec FlowEnsemble::initial_point(std::size_t i) const {
  return Eigen::Map<const Vec>(initial_points.data() + i * dim, dim);
}

namespace {

FlowEnsemble integrate_impl(const VectorField& field, std::vector<double> initial, std::vector<double> weights,
                            double tau, double dt_max, Integrator integrator) {
  const int n = field.dim();
  const int steps = step_count(tau, dt_max);
  const double dt = tau / steps;
  FlowEnsemble ens;
  ens.dim = n;
  ens.initial_points = std::move(initial);
  ens.weights = std::move(weights);
  ens.field_id = field.id();
  ens.integrator = integrator;
  ens.dt = dt;
  ens.times.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) ens.times[k] = k * dt;
  ens.times[steps] = tau;

  const std::size_t count = ens.particle_count();
  ens.positions.assign(static_cast<std::size_t>(steps + 1) * count * n, 0.0);
  std::copy(ens.initial_points.begin(), ens.initial_points.end(), ens.positions.begin());

  parallel_for(count, [&](std::size_t begin, std::size_t end) {
    Vec x(n), k1(n), k2(n), k3(n), k4(n), tmp(n);
    for (std::size_t i = begin; i < end; ++i) {
      for (int d = 0; d < n; ++d) x[d] = ens.initial_points[i * n + d];
      for (int k = 0; k < steps; ++k) {
        const double t = ens.times[k];
        if (integrator == Integrator::euler) {
          field.eval_into(t, x, k1);
          x += dt * k1;
        } else {
          field.eval_into(t, x, k1);
          tmp = x + (0.5 * dt) * k1;
          field.eval_into(t + 0.5 * dt, tmp, k2);
          tmp = x + (0.5 * dt) * k2;
          field.eval_into(t + 0.5 * dt, tmp, k3);
          tmp = x + dt * k3;
          field.eval_into(t + dt, tmp, k4);
          x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (!x.allFinite()) {
          throw LabError(ErrorCode::integration_diverged,
                         fmt::format("particle {} became non-finite at step {} (t = {})", i, k + 1, t + dt));
        }
        double* dst = ens.positions.data() + ((static_cast<std::size_t>(k) + 1) * count + i) * n;
        for (int d = 0; d < n; ++d) dst[d] = x[d];
      }
    }
  });
  return ens;
}

}  // namespace

FlowEnsemble integrate_ensemble(const VectorField& field, const BallLattice& lattice, double tau, double dt,
                                Integrator integrator) {
  if (lattice.dim != field.dim()) {
    throw LabError(ErrorCode::configuration, "lattice and field dimensions differ");
  }
  FlowEnsemble ens = integrate_impl(field, lattice.points, lattice.weights, tau, dt, integrator);
  ens.lattice_spacing = lattice.spacing;
  ens.cell_origin = -lattice.radius - 0.5 * lattice.spacing;
  ens.radius = lattice.radius;
  return ens;
}

FlowEnsemble integrate_ensemble(const VectorField& field, const ExperimentParams& params) {
  const auto& s = params.settings();
  if (s.dim != field.dim()) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("experiment dimension {} differs from field dimension {}", s.dim, field.dim()));
  }
  const BallLattice lattice = make_ball_lattice(s.dim, s.r, s.lattice_size);
  return integrate_ensemble(field, lattice, s.tau, s.dt, s.integrator);
}

FlowEnsemble integrate_points(const VectorField& field, std::span<const Vec> points, double tau, double dt,
                              Integrator integrator) {
  const int n = field.dim();
  std::vector<double> initial;
  double radius = 0.0;
  for (const Vec& p : points) {
    if (p.size() != n) throw LabError(ErrorCode::invalid_input, "initial point dimension differs from the field");
    if (!p.allFinite()) throw LabError(ErrorCode::invalid_input, "non-finite initial point");
    initial.insert(initial.end(), p.data(), p.data() + n);
    radius = std::max(radius, p.norm());
  }
  FlowEnsemble ens = integrate_impl(field, std::move(initial), std::vector<double>(points.size(), 1.0), tau, dt,
                                    integrator);
  ens.radius = radius;
  return ens;
}

// ---------------------------------------------------------------------------
// Compressibility

namespace {

struct SliceDensity {
  double max_density = 0.0;
  double mean_occupied = 0.0;
};

SliceDensity deposit_slice(const FlowEnsemble& ens, std::size_t k, double bw, double cell, double origin) {
  const int n = ens.dim;
  const std::size_t count = ens.particle_count();
  const auto snap = ens.snapshot(k);

  // Per-axis bin ranges and overlap fractions of each particle's cell.
  struct Span1 {
    long first;
    int len;
    double frac[8];
  };
  auto axis_span = [&](double c) {
    Span1 s{};
    if (cell <= 0.0) {
      s.first = static_cast<long>(std::floor((c - origin) / bw));
      s.len = 1;
      s.frac[0] = 1.0;
      return s;
    }
    const double lo = c - 0.5 * cell;
    const double hi = c + 0.5 * cell;
    const long m0 = static_cast<long>(std::floor((lo - origin) / bw));
    const long m1 = static_cast<long>(std::floor((hi - origin) / bw));
    s.first = m0;
    s.len = static_cast<int>(std::min<long>(m1 - m0 + 1, 8));
    for (int j = 0; j < s.len; ++j) {
      const double e0 = origin + (m0 + j) * bw;
      const double e1 = e0 + bw;
      s.frac[j] = std::max(0.0, std::min(hi, e1) - std::max(lo, e0)) / cell;
    }
    return s;
  };

  long lo_idx[kMaxDim];
  long hi_idx[kMaxDim];
  std::fill(lo_idx, lo_idx + n, std::numeric_limits<long>::max());
  std::fill(hi_idx, hi_idx + n, std::numeric_limits<long>::min());
  std::vector<Span1> spans(count * n);
  for (std::size_t i = 0; i < count; ++i) {
    for (int d = 0; d < n; ++d) {
      Span1 s = axis_span(snap[i * n + d]);
      lo_idx[d] = std::min(lo_idx[d], s.first);
      hi_idx[d] = std::max(hi_idx[d], s.first + s.len - 1);
      spans[i * n + d] = s;
    }
  }
  double dense_size = 1.0;
  long extent[kMaxDim];
  for (int d = 0; d < n; ++d) {
    extent[d] = hi_idx[d] - lo_idx[d] + 1;
    dense_size *= static_cast<double>(extent[d]);
  }

  const double bin_volume = std::pow(bw, n);
  auto accumulate = [&](auto& store) {
    for (std::size_t i = 0; i < count; ++i) {
      const Span1* s = &spans[i * n];
      int combos = 1;
      for (int d = 0; d < n; ++d) combos *= s[d].len;
      for (int c = 0; c < combos; ++c) {
        int rem = c;
        int jj[kMaxDim];
        for (int d = n - 1; d >= 0; --d) {
          jj[d] = rem % s[d].len;
          rem /= s[d].len;
        }
        double w = ens.weights[i];
        std::size_t key = 0;
        for (int d = 0; d < n; ++d) {
          w *= s[d].frac[jj[d]];
          key = key * static_cast<std::size_t>(extent[d]) + static_cast<std::size_t>(s[d].first + jj[d] - lo_idx[d]);
        }
        if (w > 0.0) store[key] += w;
      }
    }
  };

  SliceDensity out;
  double total = 0.0;
  std::size_t occupied = 0;
  if (dense_size <= 4.0e6) {
    std::vector<double> bins(static_cast<std::size_t>(dense_size), 0.0);
    accumulate(bins);
    for (double m : bins) {
      if (m > 0.0) {
        ++occupied;
        total += m;
        out.max_density = std::max(out.max_density, m / bin_volume);
      }
    }
  } else {
    std::map<std::size_t, double> bins;
    accumulate(bins);
    for (const auto& [key, m] : bins) {
      if (m > 0.0) {
        ++occupied;
        total += m;
        out.max_density = std::max(out.max_density, m / bin_volume);
      }
    }
  }
  out.mean_occupied = occupied ? total / (occupied * bin_volume) : 0.0;
  return out;
}

}  // namespace

CompressibilityEstimate estimate_compressibility(const FlowEnsemble& ensemble, double bin_width) {
  if (!(bin_width > 0.0)) throw LabError(ErrorCode::configuration, "bin width must be positive");
  if (ensemble.particle_count() == 0 || ensemble.time_count() == 0) {
    throw LabError(ErrorCode::invalid_input, "cannot estimate compressibility of an empty ensemble");
  }
  CompressibilityEstimate est;
  est.histogram_resolution = bin_width;
  const double cell = ensemble.lattice_spacing;
  double typical_spacing = cell;
  if (cell <= 0.0) {
    double mass = 0.0;
    for (double w : ensemble.weights) mass += w;
    typical_spacing = std::pow(mass / ensemble.particle_count(), 1.0 / ensemble.dim);
  }
  if (bin_width < typical_spacing) {
    est.ill_conditioned = true;
    est.warning = fmt::format("bin width {} is below the typical inter-particle spacing {}; the estimate is noisy",
                              bin_width, typical_spacing);
  }
  const double origin = cell > 0.0 ? ensemble.cell_origin : 0.0;
  const std::size_t K = ensemble.time_count();
  std::vector<SliceDensity> slices(K);
  parallel_for(K, [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) slices[k] = deposit_slice(ensemble, k, bin_width, cell, origin);
  });
  est.per_time_max.resize(K);
  double peak = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    est.per_time_max[k] = slices[k].max_density;
    peak = std::max(peak, slices[k].max_density);
    est.mean_occupied_density = std::max(est.mean_occupied_density, slices[k].mean_occupied);
  }
  est.L_hat = std::max(1.0, peak);
  return est;
}

bool check_trajectory_confinement(const FlowEnsemble& ensemble, double r, double sup_norm) {
  const std::size_t N = ensemble.particle_count();
  for (std::size_t k = 0; k < ensemble.time_count(); ++k) {
    const double bound = r + ensemble.times[k] * sup_norm + ensemble.dt * sup_norm;
    const double bound2 = bound * bound * (1.0 + 1e-12);
    const auto snap = ensemble.snapshot(k);
    for (std::size_t i = 0; i < N; ++i) {
      double s = 0.0;
      for (int d = 0; d < ensemble.dim; ++d) s += snap[i * ensemble.dim + d] * snap[i * ensemble.dim + d];
      if (!(s <= bound2)) return false;
    }
  }
  return true;
}

double max_trajectory_radius(const FlowEnsemble& ensemble) {
  double best = 0.0;
  const int n = ensemble.dim;
  for (std::size_t j = 0; j < ensemble.positions.size(); j += n) {
    double s = 0.0;
    for (int d = 0; d < n; ++d) s += ensemble.positions[j + d] * ensemble.positions[j + d];
    best = std::max(best, s);
  }
  return std::sqrt(best);
}

// ---------------------------------------------------------------------------
// CSV

void write_ensemble_csv(std::ostream& out, const FlowEnsemble& ens) {
  out << "# field_id=" << ens.field_id << '\n';
  out << "# dim=" << ens.dim << '\n';
  out << "# integrator=" << to_string(ens.integrator) << '\n';
  out << fmt::format("# dt={:.17g}\n", ens.dt);
  out << fmt::format("# lattice_spacing={:.17g}\n", ens.lattice_spacing);
  out << fmt::format("# cell_origin={:.17g}\n", ens.cell_origin);
  out << fmt::format("# radius={:.17g}\n", ens.radius);
  const bool uniform = std::all_of(ens.weights.begin(), ens.weights.end(),
                                   [&](double w) { return w == ens.weights.front(); });
  if (uniform && !ens.weights.empty()) {
    out << fmt::format("# weight={:.17g}\n", ens.weights.front());
  } else {
    out << "# weights=";
    for (std::size_t i = 0; i < ens.weights.size(); ++i) out << fmt::format("{}{:.17g}", i ? ";" : "", ens.weights[i]);
    out << '\n';
  }
  std::string header = "k,t,i";
  for (int d = 0; d < ens.dim; ++d) header += fmt::format(",x{}", d + 1);
  out << header << '\n';
  const std::size_t N = ens.particle_count();
  std::string row;
  for (std::size_t k = 0; k < ens.time_count(); ++k) {
    for (std::size_t i = 0; i < N; ++i) {
      row = fmt::format("{},{:.17g},{}", k, ens.times[k], i);
      for (int d = 0; d < ens.dim; ++d) row += fmt::format(",{:.17g}", ens.positions[(k * N + i) * ens.dim + d]);
      row += '\n';
      out << row;
    }
  }
}

namespace {

double to_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw LabError(ErrorCode::invalid_input, fmt::format("ensemble CSV line {}: bad number '{}'", line_no, s));
  }
  return v;
}

std::size_t to_index(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw LabError(ErrorCode::invalid_input, fmt::format("ensemble CSV line {}: bad index '{}'", line_no, s));
  }
  return v;
}

}  // namespace

FlowEnsemble read_ensemble_csv(std::istream& in) {
  FlowEnsemble ens;
  std::string line;
  std::size_t line_no = 0;
  std::unordered_map<std::string, std::string> meta;
  bool header_seen = false;
  struct Row {
    std::size_t k, i;
    double t;
    std::vector<double> x;
  };
  std::vector<Row> rows;
  std::size_t max_k = 0, max_i = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      const auto body = line.substr(1);
      const auto eq = body.find('=');
      if (eq != std::string::npos) {
        std::string key = body.substr(0, eq);
        key.erase(0, key.find_first_not_of(' '));
        meta[key] = body.substr(eq + 1);
      }
      continue;
    }
    if (!header_seen) {
      header_seen = true;
      int n = 0;
      std::size_t pos = 0;
      std::vector<std::string> cols;
      while (true) {
        const auto c = line.find(',', pos);
        cols.push_back(line.substr(pos, c - pos));
        if (c == std::string::npos) break;
        pos = c + 1;
      }
      if (cols.size() < 4 || cols[0] != "k" || cols[1] != "t" || cols[2] != "i") {
        throw LabError(ErrorCode::invalid_input, fmt::format("ensemble CSV line {}: bad header", line_no));
      }
      for (std::size_t c = 3; c < cols.size(); ++c) {
        if (cols[c] != fmt::format("x{}", ++n)) {
          throw LabError(ErrorCode::invalid_input, fmt::format("ensemble CSV line {}: bad header", line_no));
        }
      }
      require_dimension(n);
      ens.dim = n;
      continue;
    }
    std::vector<std::string_view> parts;
    std::string_view sv(line);
    std::size_t pos = 0;
    while (true) {
      const auto c = sv.find(',', pos);
      parts.push_back(sv.substr(pos, c - pos));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (parts.size() != static_cast<std::size_t>(3 + ens.dim)) {
      throw LabError(ErrorCode::invalid_input, fmt::format("ensemble CSV line {}: wrong column count", line_no));
    }
    Row r{to_index(parts[0], line_no), to_index(parts[2], line_no), to_double(parts[1], line_no), {}};
    for (int d = 0; d < ens.dim; ++d) r.x.push_back(to_double(parts[3 + d], line_no));
    max_k = std::max(max_k, r.k);
    max_i = std::max(max_i, r.i);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw LabError(ErrorCode::invalid_input, "ensemble CSV has no rows");
  const std::size_t K = max_k + 1;
  const std::size_t N = max_i + 1;
  if (rows.size() != K * N) throw LabError(ErrorCode::invalid_input, "ensemble CSV is not a complete k x i table");
  ens.times.assign(K, 0.0);
  ens.positions.assign(K * N * ens.dim, 0.0);
  std::vector<char> seen(K * N, 0);
  for (const Row& r : rows) {
    if (seen[r.k * N + r.i]) throw LabError(ErrorCode::invalid_input, "ensemble CSV has duplicate rows");
    seen[r.k * N + r.i] = 1;
    ens.times[r.k] = r.t;
    std::copy(r.x.begin(), r.x.end(), ens.positions.begin() + (r.k * N + r.i) * ens.dim);
  }
  ens.initial_points.assign(ens.positions.begin(), ens.positions.begin() + N * ens.dim);

  auto get = [&](const char* key) -> std::string { auto it = meta.find(key); return it == meta.end() ? "" : it->second; };
  ens.field_id = get("field_id");
  if (auto v = get("integrator"); !v.empty()) ens.integrator = parse_integrator(v);
  if (auto v = get("dt"); !v.empty()) ens.dt = to_double(v, 0);
  if (auto v = get("lattice_spacing"); !v.empty()) ens.lattice_spacing = to_double(v, 0);
  if (auto v = get("cell_origin"); !v.empty()) ens.cell_origin = to_double(v, 0);
  if (auto v = get("radius"); !v.empty()) ens.radius = to_double(v, 0);
  if (auto v = get("weight"); !v.empty()) {
    ens.weights.assign(N, to_double(v, 0));
  } else if (auto v = get("weights"); !v.empty()) {
    std::string_view sv(v);
    std::size_t pos = 0;
    while (true) {
      const auto c = sv.find(';', pos);
      ens.weights.push_back(to_double(sv.substr(pos, c - pos), 0));
      if (c == std::string_view::npos) break;
      pos = c + 1;
    }
    if (ens.weights.size() != N) throw LabError(ErrorCode::invalid_input, "ensemble CSV weight count mismatch");
  } else {
    ens.weights.assign(N, 1.0);
  }
  return ens;
}

}  // namespace rlf
