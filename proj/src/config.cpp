#include "rlf/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "rlf/error.hpp"

namespace rlf {

namespace {

[[noreturn]] void fail(const YAML::Node& node, const std::string& message) {
  const int line = node.Mark().is_null() ? 0 : node.Mark().line + 1;
  throw LabError(ErrorCode::configuration, fmt::format("line {}: {}", line, message));
}

void check_keys(const YAML::Node& map, const std::string& section, const std::set<std::string>& allowed) {
  if (!map.IsMap()) fail(map, fmt::format("section '{}' must be a mapping", section));
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (key == "R" || key == "R_tilde" || key == "R_prime" || (section == "experiment" && key == "lambda")) {
      fail(kv.first, fmt::format("'{}' is derived from the sup norms and cannot be set", key));
    }
    if (!allowed.count(key)) {
      fail(kv.first, section.empty() ? fmt::format("unknown key '{}'", key)
                                     : fmt::format("unknown key '{}' in section '{}'", key, section));
    }
  }
}

template <class T>
T get(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail(node, fmt::format("'{}' must be a scalar", key));
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(node, fmt::format("'{}' has an invalid value '{}'", key, node.Scalar()));
  }
}

std::vector<double> get_list(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) fail(node, fmt::format("'{}' must be a list of numbers", key));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(get<double>(item, key));
  return out;
}

}  // namespace

RunConfig parse_config(const std::string& text, const std::string& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw LabError(ErrorCode::configuration, fmt::format("line {}: {}", e.mark.line + 1, e.msg));
  }
  RunConfig cfg;
  cfg.base_dir = base_dir;
  if (root.IsNull()) return cfg;
  check_keys(root, "", {"seed", "field", "perturbation", "experiment", "sweep", "lemmas", "output"});

  if (auto n = root["seed"]) cfg.seed = get<std::uint64_t>(n, "seed");
  cfg.experiment.seed = cfg.seed;

  if (auto f = root["field"]) {
    check_keys(f, "field", {"kind", "value", "rate", "width", "cutoff_radius", "path", "gradient_step"});
    if (auto n = f["kind"]) cfg.field.kind = get<std::string>(n, "kind");
    static const std::set<std::string> kinds{"constant", "rotation", "contraction", "shear", "sampled-grid"};
    if (!kinds.count(cfg.field.kind)) fail(f["kind"], fmt::format("unknown field kind '{}'", cfg.field.kind));
    if (auto n = f["value"]) cfg.field.value = get_list(n, "value");
    if (auto n = f["rate"]) cfg.field.rate = get<double>(n, "rate");
    if (auto n = f["width"]) cfg.field.width = get<double>(n, "width");
    if (auto n = f["cutoff_radius"]) cfg.field.cutoff_radius = get<double>(n, "cutoff_radius");
    if (auto n = f["path"]) cfg.field.path = get<std::string>(n, "path");
    if (auto n = f["gradient_step"]) cfg.field.gradient_step = get<double>(n, "gradient_step");
    if (cfg.field.kind == "constant" && cfg.field.value.empty()) fail(f, "a constant field needs 'value'");
    if (cfg.field.kind == "sampled-grid" && cfg.field.path.empty()) fail(f, "a sampled-grid field needs 'path'");
  }

  if (auto s = root["perturbation"]) {
    check_keys(s, "perturbation", {"mode", "epsilon", "seed", "direction", "bump_radius"});
    if (auto n = s["mode"]) {
      try {
        cfg.perturbation.mode = parse_perturbation_mode(get<std::string>(n, "mode"));
      } catch (const LabError& e) {
        fail(n, e.message());
      }
    }
    if (auto n = s["epsilon"]) cfg.perturbation.epsilon = get<double>(n, "epsilon");
    if (!(cfg.perturbation.epsilon >= 0.0)) fail(s["epsilon"], "epsilon must be nonnegative");
    if (auto n = s["seed"]) {
      cfg.perturbation.seed = get<std::uint64_t>(n, "seed");
      cfg.perturbation_seed_set = true;
    }
    if (auto n = s["direction"]) {
      const auto d = get_list(n, "direction");
      if (d.empty() || d.size() > static_cast<std::size_t>(kMaxDim)) fail(n, "direction must have 1 to 3 entries");
      Vec v(static_cast<Eigen::Index>(d.size()));
      for (std::size_t i = 0; i < d.size(); ++i) v[i] = d[i];
      cfg.perturbation.direction = v;
    }
    if (auto n = s["bump_radius"]) cfg.perturbation.bump_radius = get<double>(n, "bump_radius");
  }
  if (!cfg.perturbation_seed_set) cfg.perturbation.seed = cfg.seed;

  bool dim_set = false;
  if (auto e = root["experiment"]) {
    check_keys(e, "experiment", {"dim", "p", "r", "T", "tau", "dt", "integrator", "lattice_size", "bin_width",
                                 "grid_spacing", "norm_lattice_size", "pair_count"});
    auto& x = cfg.experiment;
    if (auto n = e["dim"]) {
      x.dim = get<int>(n, "dim");
      dim_set = true;
    }
    if (auto n = e["p"]) x.p = get<double>(n, "p");
    if (auto n = e["r"]) x.r = get<double>(n, "r");
    if (auto n = e["T"]) x.T = get<double>(n, "T");
    if (auto n = e["tau"]) x.tau = get<double>(n, "tau");
    if (auto n = e["dt"]) x.dt = get<double>(n, "dt");
    if (auto n = e["integrator"]) {
      try {
        x.integrator = parse_integrator(get<std::string>(n, "integrator"));
      } catch (const LabError& err) {
        fail(n, err.message());
      }
    }
    if (auto n = e["lattice_size"]) x.lattice_size = get<int>(n, "lattice_size");
    if (auto n = e["bin_width"]) x.bin_width = get<double>(n, "bin_width");
    if (auto n = e["grid_spacing"]) x.grid_spacing = get<double>(n, "grid_spacing");
    if (auto n = e["norm_lattice_size"]) x.norm_lattice_size = get<int>(n, "norm_lattice_size");
    if (auto n = e["pair_count"]) x.pair_count = get<int>(n, "pair_count");
    // Validate the experiment's own rules with the line of the section.
    try {
      ExperimentParams::derive(x, 0.0, 0.0);
    } catch (const LabError& err) {
      const int line = e.Mark().line + 1;
      throw LabError(err.code(), fmt::format("line {}: {}", line, err.message()));
    }
  }
  if (!dim_set && cfg.field.kind == "constant") cfg.experiment.dim = static_cast<int>(cfg.field.value.size());
  if (cfg.field.kind == "constant" && static_cast<int>(cfg.field.value.size()) != cfg.experiment.dim) {
    fail(root["field"], "constant field value length differs from experiment dim");
  }

  if (auto s = root["sweep"]) {
    check_keys(s, "sweep", {"eps_list"});
    cfg.sweep_present = true;
    if (auto n = s["eps_list"]) cfg.eps_list = get_list(n, "eps_list");
    if (cfg.eps_list.empty()) fail(s, "sweep.eps_list must hold at least one epsilon");
    for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
      if (!(cfg.eps_list[i] >= 0.0)) fail(s["eps_list"], "epsilons must be nonnegative");
      if (i > 0 && !(cfg.eps_list[i] < cfg.eps_list[i - 1])) fail(s["eps_list"], "eps_list must be strictly decreasing");
    }
  }

  if (auto l = root["lemmas"]) {
    check_keys(l, "lemmas", {"kind", "batch_size", "lambda", "p", "rho", "half_width", "grid_spacing", "sigma",
                             "pair_count"});
    auto& c = cfg.lemmas;
    if (auto n = l["kind"]) c.kind = get<std::string>(n, "kind");
    if (c.kind != "random-trig" && c.kind != "constant" && c.kind != "gaussian") {
      fail(l["kind"], fmt::format("unknown lemma batch kind '{}'", c.kind));
    }
    if (auto n = l["batch_size"]) c.batch_size = get<int>(n, "batch_size");
    if (auto n = l["lambda"]) c.lambda = get<double>(n, "lambda");
    if (auto n = l["p"]) c.p = get<double>(n, "p");
    if (auto n = l["rho"]) c.rho = get<double>(n, "rho");
    if (auto n = l["half_width"]) c.half_width = get<double>(n, "half_width");
    if (auto n = l["grid_spacing"]) c.grid_spacing = get<double>(n, "grid_spacing");
    if (auto n = l["sigma"]) c.sigma = get<double>(n, "sigma");
    if (auto n = l["pair_count"]) c.pair_count = get<int>(n, "pair_count");
    if (c.batch_size < 1) fail(l, "lemmas.batch_size must be at least 1");
    if (!(c.grid_spacing > 0.0)) fail(l, "lemmas.grid_spacing must be positive");
    if (!(c.lambda > 0.0)) fail(l, "lemmas.lambda must be positive");
    if (!(c.rho > 0.0)) fail(l, "lemmas.rho must be positive");
    if (!(c.sigma > 0.0)) fail(l, "lemmas.sigma must be positive");
    if (c.pair_count < 1) fail(l, "lemmas.pair_count must be at least 1");
    try {
      require_exponent(c.p);
    } catch (const LabError& err) {
      throw LabError(err.code(), fmt::format("line {}: {}", l.Mark().line + 1, err.message()));
    }
  }

  if (auto o = root["output"]) {
    check_keys(o, "output", {"dir", "svg"});
    if (auto n = o["dir"]) cfg.out_dir = get<std::string>(n, "dir");
    if (auto n = o["svg"]) cfg.emit_svg = get<bool>(n, "svg");
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LabError(ErrorCode::configuration, fmt::format("cannot read config '{}'", path));
  std::stringstream ss;
  ss << in.rdbuf();
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(ss.str(), parent.empty() ? "." : parent.string());
}

void apply_seed(RunConfig& config, std::uint64_t seed) {
  config.seed = seed;
  config.experiment.seed = seed;
  if (!config.perturbation_seed_set) config.perturbation.seed = seed;
}

VectorField build_field(const RunConfig& config) {
  const FieldConfig& f = config.field;
  const int dim = config.experiment.dim;
  VectorField field = [&] {
    if (f.kind == "constant") {
      Vec v(static_cast<Eigen::Index>(f.value.size()));
      for (std::size_t i = 0; i < f.value.size(); ++i) v[i] = f.value[i];
      return make_constant_field(v);
    }
    if (f.kind == "rotation") return make_rotation_field(f.cutoff_radius);
    if (f.kind == "contraction") return make_contraction_field(dim, f.rate, f.cutoff_radius);
    if (f.kind == "shear") return make_shear_field(f.width, f.cutoff_radius);
    std::filesystem::path p(f.path);
    if (p.is_relative()) p = std::filesystem::path(config.base_dir) / p;
    return load_sampled_field(p.string(), f.gradient_step);
  }();
  if (field.dim() != dim) {
    throw LabError(ErrorCode::configuration,
                   fmt::format("field '{}' has dimension {} but the experiment uses dim = {}", field.id(), field.dim(), dim));
  }
  return field;
}

}  // namespace rlf
