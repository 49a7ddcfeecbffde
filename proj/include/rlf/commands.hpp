#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rlf/analysis.hpp"
#include "rlf/config.hpp"
#include "rlf/grid.hpp"

namespace rlf {

struct CliOverrides {
  std::optional<std::string> out_dir;
  bool svg = false;
  std::optional<std::uint64_t> seed;
};

/// Scalar test functions for the lemma checks: |w| for the maximal bound and
/// w_1 for the pointwise bound, one pair per batch member.
struct LemmaSample {
  GridFunction magnitude;
  GridFunction scalar;
};
std::vector<LemmaSample> make_lemma_batch(const LemmaConfig& config, int dim, std::uint64_t seed);

struct LemmaBatchResult {
  LemmaReport maximal;
  LemmaReport pointwise;
  std::vector<double> pointwise_constants;  // per sample; empty reports are left out
  double maximal_spread = 0.0;              // max / median
  double pointwise_spread = 0.0;
  double reference_ratio = 0.0;             // (rho / (rho + lambda))^(n/p)
  bool stable = false;
};
LemmaBatchResult run_lemma_batch(const LemmaConfig& config, int dim, std::uint64_t seed);

/// Exit codes: 0 pass, 2 estimate failure, 1 usage or configuration error.
int cmd_run(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_sweep(const std::string& config_path, const CliOverrides& overrides, std::ostream& out, std::ostream& err);
int cmd_check_lemmas(const std::string& config_path, const CliOverrides& overrides, std::ostream& out,
                     std::ostream& err);

}  // namespace rlf
