#include "rlf/grid.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include <fmt/format.h>

#include "rlf/error.hpp"

namespace rlf {

Box Box::cube(int dim, double half_width) {
  require_dimension(dim);
  return {Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
}

bool Box::contains_ball(const Vec& center, double radius) const {
  for (int d = 0; d < dim(); ++d) {
    if (center[d] - radius < lower[d] - 1e-12 || center[d] + radius > upper[d] + 1e-12) return false;
  }
  return true;
}

GridFunction::GridFunction(Vec lower, double spacing, std::vector<int> counts, int dim_out,
                           std::vector<double> values)
    : lower_(std::move(lower)), h_(spacing), counts_(std::move(counts)), dim_out_(dim_out),
      values_(std::move(values)) {
  require_dimension(static_cast<int>(counts_.size()));
  if (lower_.size() != static_cast<Eigen::Index>(counts_.size())) {
    throw LabError(ErrorCode::invalid_input, "grid lower corner and counts disagree in dimension");
  }
  if (!(h_ > 0.0) || !std::isfinite(h_)) {
    throw LabError(ErrorCode::configuration, fmt::format("grid spacing must be positive, got {}", h_));
  }
  if (dim_out_ < 1) throw LabError(ErrorCode::invalid_input, "grid dim_out must be >= 1");
  strides_.assign(counts_.size(), 1);
  node_count_ = 1;
  for (int d = dim() - 1; d >= 0; --d) {
    if (counts_[d] < 1) throw LabError(ErrorCode::invalid_input, "grid axis with no nodes");
    strides_[d] = node_count_;
    node_count_ *= static_cast<std::size_t>(counts_[d]);
  }
  if (values_.size() != node_count_ * dim_out_) {
    throw LabError(ErrorCode::invalid_input,
                   fmt::format("grid expects {} values, got {}", node_count_ * dim_out_, values_.size()));
  }
}

GridFunction GridFunction::zeros(const Box& box, double spacing, int dim_out) {
  if (!(spacing > 0.0)) {
    throw LabError(ErrorCode::configuration, fmt::format("grid spacing must be positive, got {}", spacing));
  }
  std::vector<int> counts(box.dim());
  std::size_t total = 1;
  for (int d = 0; d < box.dim(); ++d) {
    const double extent = box.upper[d] - box.lower[d];
    if (extent < 0.0) throw LabError(ErrorCode::configuration, "grid box has negative extent");
    counts[d] = static_cast<int>(std::lround(extent / spacing)) + 1;
    total *= static_cast<std::size_t>(counts[d]);
  }
  return GridFunction(box.lower, spacing, std::move(counts), dim_out, std::vector<double>(total * dim_out, 0.0));
}

Vec GridFunction::upper() const {
  Vec u = lower_;
  for (int d = 0; d < dim(); ++d) u[d] += h_ * (counts_[d] - 1);
  return u;
}

void GridFunction::unflatten(std::size_t flat, int* index) const {
  for (int d = 0; d < dim(); ++d) {
    index[d] = static_cast<int>(flat / strides_[d]);
    flat %= strides_[d];
  }
}

std::size_t GridFunction::flatten(const int* index) const {
  std::size_t flat = 0;
  for (int d = 0; d < dim(); ++d) flat += static_cast<std::size_t>(index[d]) * strides_[d];
  return flat;
}

Vec GridFunction::node(std::size_t flat) const {
  int idx[kMaxDim];
  unflatten(flat, idx);
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) x[d] = lower_[d] + h_ * idx[d];
  return x;
}

double GridFunction::magnitude(std::size_t flat) const {
  if (dim_out_ == 1) return std::abs(values_[flat]);
  double s = 0.0;
  for (int c = 0; c < dim_out_; ++c) {
    const double v = values_[flat * dim_out_ + c];
    s += v * v;
  }
  return std::sqrt(s);
}

namespace {

struct Stencil {
  int base[kMaxDim];
  double frac[kMaxDim];
};

Stencil locate(const GridFunction& g, const Vec& x) {
  Stencil s{};
  for (int d = 0; d < g.dim(); ++d) {
    const int n = g.counts()[d];
    double u = (x[d] - g.lower()[d]) / g.spacing();
    u = std::clamp(u, 0.0, static_cast<double>(n - 1));
    int i = static_cast<int>(std::floor(u));
    if (i > n - 2) i = std::max(0, n - 2);
    s.base[d] = i;
    s.frac[d] = (n == 1) ? 0.0 : u - i;
  }
  return s;
}

}  // namespace

double GridFunction::interpolate(const Vec& x, int component) const {
  const Stencil s = locate(*this, x);
  const int n = dim();
  double result = 0.0;
  int idx[kMaxDim];
  for (int corner = 0; corner < (1 << n); ++corner) {
    double w = 1.0;
    bool valid = true;
    for (int d = 0; d < n; ++d) {
      const int bit = (corner >> d) & 1;
      w *= bit ? s.frac[d] : 1.0 - s.frac[d];
      idx[d] = s.base[d] + bit;
      if (idx[d] >= counts_[d]) valid = false;
    }
    if (!valid || w == 0.0) continue;
    result += w * value(flatten(idx), component);
  }
  return result;
}

Vec GridFunction::interpolate_vector(const Vec& x) const {
  Vec out(dim_out_);
  for (int c = 0; c < dim_out_; ++c) out[c] = interpolate(x, c);
  return out;
}

GridFunction GridFunction::magnitudes() const {
  std::vector<double> mags(node_count_);
  for (std::size_t k = 0; k < node_count_; ++k) mags[k] = magnitude(k);
  return GridFunction(lower_, h_, counts_, 1, std::move(mags));
}

GridFunction GridFunction::finite_difference_gradient() const {
  const int n = dim();
  const int out_dim = dim_out_ * n;
  std::vector<double> grad(node_count_ * out_dim, 0.0);
  int idx[kMaxDim];
  for (std::size_t k = 0; k < node_count_; ++k) {
    unflatten(k, idx);
    for (int d = 0; d < n; ++d) {
      if (counts_[d] < 2) continue;
      int lo = idx[d] - 1;
      int hi = idx[d] + 1;
      if (lo < 0) lo = 0;
      if (hi >= counts_[d]) hi = counts_[d] - 1;
      const double span = h_ * (hi - lo);
      const std::size_t klo = k - static_cast<std::size_t>(idx[d] - lo) * strides_[d];
      const std::size_t khi = k + static_cast<std::size_t>(hi - idx[d]) * strides_[d];
      for (int c = 0; c < dim_out_; ++c) {
        grad[k * out_dim + c * n + d] = (value(khi, c) - value(klo, c)) / span;
      }
    }
  }
  return GridFunction(lower_, h_, counts_, out_dim, std::move(grad));
}

// ---------------------------------------------------------------------------
// CSV

void write_grid_csv(std::ostream& out, const SampledGrid& grid) {
  if (grid.slices.empty()) throw LabError(ErrorCode::invalid_input, "sampled grid has no time slices");
  const GridFunction& first = grid.slices.front();
  std::string header = "t";
  for (int d = 0; d < first.dim(); ++d) header += fmt::format(",x{}", d + 1);
  for (int c = 0; c < first.dim_out(); ++c) header += fmt::format(",b{}", c + 1);
  out << header << '\n';
  for (std::size_t s = 0; s < grid.slices.size(); ++s) {
    const GridFunction& g = grid.slices[s];
    for (std::size_t k = 0; k < g.node_count(); ++k) {
      std::string row = fmt::format("{:.17g}", grid.times[s]);
      const Vec x = g.node(k);
      for (int d = 0; d < g.dim(); ++d) row += fmt::format(",{:.17g}", x[d]);
      for (double v : g.node_values(k)) row += fmt::format(",{:.17g}", v);
      out << row << '\n';
    }
  }
}

void write_grid_csv(std::ostream& out, const GridFunction& grid, double t) {
  write_grid_csv(out, SampledGrid{{t}, {grid}});
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    parts.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

double parse_number(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  if (!s.empty() && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw LabError(ErrorCode::invalid_input, fmt::format("line {}: cannot parse number '{}'", line_no, s));
  }
  return v;
}

struct AxisLattice {
  double lower = 0.0;
  double step = 0.0;
  int count = 1;
};

// Distinct coordinates along one axis, merged within a relative tolerance.
std::vector<double> distinct(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const double span = values.back() - values.front();
  const double tol = 1e-9 * std::max(1.0, span);
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || v - out.back() > tol) out.push_back(v);
  }
  return out;
}

AxisLattice fit_axis(const std::vector<double>& coords, const char* what) {
  const std::vector<double> u = distinct(coords);
  AxisLattice ax;
  ax.lower = u.front();
  ax.count = static_cast<int>(u.size());
  if (u.size() == 1) return ax;
  ax.step = (u.back() - u.front()) / (u.size() - 1);
  for (std::size_t i = 1; i < u.size(); ++i) {
    if (std::abs((u[i] - u[i - 1]) - ax.step) > 1e-6 * ax.step) {
      throw LabError(ErrorCode::invalid_input,
                     fmt::format("{} coordinates are not uniformly spaced near {}", what, u[i]));
    }
  }
  return ax;
}

}  // namespace

SampledGrid read_grid_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string_view> header;
  std::string header_line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    header_line = std::string(t);
    header = split(header_line);
    break;
  }
  if (header.empty()) throw LabError(ErrorCode::invalid_input, "grid CSV is empty");
  if (header[0] != "t") {
    throw LabError(ErrorCode::invalid_input, fmt::format("line {}: header must start with 't'", line_no));
  }
  int n = 0;
  int m = 0;
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (header[c] == fmt::format("x{}", n + 1) && m == 0) {
      ++n;
    } else if (header[c] == fmt::format("b{}", m + 1)) {
      ++m;
    } else {
      throw LabError(ErrorCode::invalid_input,
                     fmt::format("line {}: unexpected header column '{}'", line_no, header[c]));
    }
  }
  if (n < 1 || m < 1) {
    throw LabError(ErrorCode::invalid_input, "grid CSV header needs at least one x and one b column");
  }
  require_dimension(n);

  const std::size_t cols = 1 + n + m;
  std::vector<double> rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto parts = split(t);
    if (parts.size() != cols) {
      throw LabError(ErrorCode::invalid_input,
                     fmt::format("line {}: expected {} columns, got {}", line_no, cols, parts.size()));
    }
    for (auto p : parts) rows.push_back(parse_number(p, line_no));
    row_lines.push_back(line_no);
  }
  const std::size_t nrows = row_lines.size();
  if (nrows == 0) throw LabError(ErrorCode::invalid_input, "grid CSV has no data rows");

  auto column = [&](std::size_t c) {
    std::vector<double> v(nrows);
    for (std::size_t r = 0; r < nrows; ++r) v[r] = rows[r * cols + c];
    return v;
  };

  const AxisLattice time_axis = fit_axis(column(0), "time");
  std::vector<AxisLattice> axes;
  double h = 0.0;
  for (int d = 0; d < n; ++d) {
    axes.push_back(fit_axis(column(1 + d), "spatial"));
    if (axes.back().count > 1) {
      if (h == 0.0) {
        h = axes.back().step;
      } else if (std::abs(axes.back().step - h) > 1e-6 * h) {
        throw LabError(ErrorCode::invalid_input, "grid spacing differs between axes");
      }
    }
  }
  if (h == 0.0) throw LabError(ErrorCode::invalid_input, "grid needs at least two nodes along some axis");
  for (auto& ax : axes) ax.step = h;

  std::vector<int> counts(n);
  Vec lower(n);
  std::size_t per_slice = 1;
  for (int d = 0; d < n; ++d) {
    counts[d] = axes[d].count;
    lower[d] = axes[d].lower;
    per_slice *= counts[d];
  }
  if (nrows != per_slice * time_axis.count) {
    throw LabError(ErrorCode::invalid_input,
                   fmt::format("grid CSV has {} rows but the lattice needs {}", nrows, per_slice * time_axis.count));
  }

  SampledGrid grid;
  std::vector<std::vector<double>> values(time_axis.count, std::vector<double>(per_slice * m, 0.0));
  std::vector<char> seen(per_slice * time_axis.count, 0);
  GridFunction shape(lower, h, counts, 1, std::vector<double>(per_slice, 0.0));
  for (std::size_t r = 0; r < nrows; ++r) {
    const double* row = &rows[r * cols];
    int ti = 0;
    if (time_axis.count > 1) {
      ti = static_cast<int>(std::lround((row[0] - time_axis.lower) / time_axis.step));
    }
    int idx[kMaxDim];
    for (int d = 0; d < n; ++d) {
      const double u = (row[1 + d] - lower[d]) / h;
      idx[d] = static_cast<int>(std::lround(u));
      if (std::abs(u - idx[d]) > 1e-6 || idx[d] < 0 || idx[d] >= counts[d]) {
        throw LabError(ErrorCode::invalid_input, fmt::format("line {}: point is off the lattice", row_lines[r]));
      }
    }
    const std::size_t flat = shape.flatten(idx);
    char& mark = seen[ti * per_slice + flat];
    if (mark) {
      throw LabError(ErrorCode::invalid_input, fmt::format("line {}: duplicate lattice point", row_lines[r]));
    }
    mark = 1;
    for (int c = 0; c < m; ++c) values[ti][flat * m + c] = row[1 + n + c];
  }
  for (int s = 0; s < time_axis.count; ++s) {
    grid.times.push_back(time_axis.lower + s * time_axis.step);
    grid.slices.emplace_back(lower, h, counts, m, std::move(values[s]));
  }
  return grid;
}

SampledGrid read_grid_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorCode::io, fmt::format("cannot open '{}'", path));
  return read_grid_csv(in);
}

}  // namespace rlf
