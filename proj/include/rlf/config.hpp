#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlf/fields.hpp"
#include "rlf/params.hpp"

namespace rlf {

struct FieldConfig {
  std::string kind = "rotation";  // constant | rotation | contraction | shear | sampled-grid
  std::vector<double> value;      // constant
  double rate = 1.0;              // contraction (negative: expansion)
  double width = 0.5;             // shear
  double cutoff_radius = kDefaultCutoffRadius;
  std::string path;               // sampled-grid CSV, relative to the config file
  std::optional<double> gradient_step;
};

struct LemmaConfig {
  std::string kind = "random-trig";  // random-trig | constant | gaussian
  int batch_size = 50;
  double lambda = 0.5;
  double p = 2.0;
  double rho = 1.0;
  double half_width = 1.5;
  double grid_spacing = 0.015;
  double sigma = 0.05;
  int pair_count = 1000;
};

/// A parsed YAML run configuration. Radii are derived later, never read.
struct RunConfig {
  FieldConfig field;
  PerturbationSpec perturbation;
  bool perturbation_seed_set = false;
  ExperimentSettings experiment;
  std::vector<double> eps_list;
  bool sweep_present = false;
  LemmaConfig lemmas;
  std::string out_dir = "rlf_out";
  bool emit_svg = false;
  std::uint64_t seed = 1;
  std::string base_dir;  // directory of the config file
};

/// Strict parser: unknown keys, wrong types and radius keys are
/// configuration errors whose message starts with "line N:".
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

/// Applies a seed to the experiment and, unless set explicitly, the perturbation.
void apply_seed(RunConfig& config, std::uint64_t seed);

VectorField build_field(const RunConfig& config);

}  // namespace rlf
