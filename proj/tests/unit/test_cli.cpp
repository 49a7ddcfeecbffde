#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "rlf/commands.hpp"
#include "rlf/config.hpp"
#include "rlf/error.hpp"

using namespace rlf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("rlf_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

std::string config_error(const std::string& text) {
  try {
    parse_config(text);
  } catch (const LabError& e) {
    CHECK(e.code() == ErrorCode::configuration);
    return e.what();
  }
  return "";
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

const char* kExact = R"(field:
  kind: rotation
perturbation:
  epsilon: 0
experiment:
  lattice_size: 21
  dt: 1.0e-2
)";

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig cfg = parse_config(R"(seed: 4
field:
  kind: shear
  width: 0.1
perturbation:
  mode: seeded-random-trig
  epsilon: 1.0e-5
experiment:
  p: 3
  dt: 2.0e-3
  integrator: euler
output:
  dir: somewhere
  svg: true
)");
  CHECK(cfg.field.kind == "shear");
  CHECK(cfg.field.width == 0.1);
  CHECK(cfg.perturbation.mode == PerturbationMode::seeded_random_trig);
  CHECK(cfg.perturbation.epsilon == 1e-5);
  CHECK(cfg.experiment.p == 3.0);
  CHECK(cfg.experiment.integrator == Integrator::euler);
  CHECK(cfg.seed == 4);
  CHECK(cfg.out_dir == "somewhere");
  CHECK(cfg.emit_svg);
  CHECK(build_field(cfg).kind() == FieldKind::shear);
}

TEST_CASE("config errors carry line numbers") {
  const std::string unknown = config_error("field:\n  kind: rotation\n  colour: red\n");
  CHECK(contains(unknown, "line 3"));
  CHECK(contains(unknown, "colour"));
  CHECK(contains(config_error("field:\n  kind: rotation\nexperiment:\n  R: 2\n"), "line 4"));
  CHECK(contains(config_error("experiment:\n  R_prime: 2\n"), "line 2"));
  CHECK(contains(config_error("experiment:\n  lambda: 0.3\n"), "line 2"));
  CHECK(contains(config_error("experiment:\n  dt: fast\n"), "line 2"));
  CHECK(contains(config_error("field:\n  kind: vortex\n"), "line 2"));
  CHECK(contains(config_error("perturbation:\n  mode: gaussian-noise\n"), "line 2"));
  CHECK_FALSE(config_error("sweep:\n  eps_list: []\n").empty());
  CHECK_FALSE(config_error("sweep:\n  eps_list: [1.0e-4, 1.0e-3]\n").empty());
  CHECK_FALSE(config_error("field: [1, 2\n").empty());
  try {
    parse_config("experiment:\n  p: 1\n");
    FAIL("expected an error");
  } catch (const LabError& e) {
    CHECK(contains(e.what(), "line"));
  }
  CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), LabError);
}

TEST_CASE("seed overrides") {
  RunConfig cfg = parse_config("perturbation:\n  mode: seeded-random-trig\n  epsilon: 1.0e-3\n");
  apply_seed(cfg, 42);
  CHECK(cfg.experiment.seed == 42);
  CHECK(cfg.perturbation.seed == 42);
  RunConfig fixed = parse_config("perturbation:\n  mode: seeded-random-trig\n  epsilon: 1.0e-3\n  seed: 5\n");
  apply_seed(fixed, 42);
  CHECK(fixed.perturbation.seed == 5);
}

TEST_CASE("run command exit codes and outputs") {
  TempDir tmp;
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out_dir = (tmp.path / "exact").string();
  ov.svg = true;
  CHECK(cmd_run(tmp.write("exact.yaml", kExact), ov, out, err) == 0);
  CHECK(fs::exists(tmp.path / "exact" / "report.json"));
  CHECK(fs::exists(tmp.path / "exact" / "report.csv"));
  CHECK(fs::exists(tmp.path / "exact" / "g_series.svg"));

  ov.out_dir = (tmp.path / "bad").string();
  std::ostringstream err2;
  CHECK(cmd_run(tmp.write("p1.yaml", "experiment:\n  p: 1\n"), ov, out, err2) == 1);
  CHECK(contains(err2.str(), "exponent"));
  CHECK(cmd_run((tmp.path / "missing.yaml").string(), ov, out, err) == 1);
}

TEST_CASE("sweep command") {
  TempDir tmp;
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out_dir = (tmp.path / "sweep").string();
  CHECK(cmd_sweep(tmp.write("empty.yaml", "sweep:\n  eps_list: []\n"), ov, out, err) == 1);
  CHECK(cmd_sweep(tmp.write("none.yaml", "field:\n  kind: rotation\n"), ov, out, err) == 1);

  std::ostringstream err2;
  const std::string cfg = std::string(kExact) + "sweep:\n  eps_list: [1.0e-4, 0]\n";
  CHECK(cmd_sweep(tmp.write("zero.yaml", cfg), ov, out, err2) == 0);
  CHECK(contains(err2.str(), "warning"));
  std::ifstream in(tmp.path / "sweep" / "sweep.csv");
  std::string header, row, extra;
  std::getline(in, header);
  CHECK(header == "epsilon,delta,lhs_sup,inv_log_delta,ratio,main_estimate_holds,small_delta_ok");
  CHECK(static_cast<bool>(std::getline(in, row)));
  CHECK_FALSE(static_cast<bool>(std::getline(in, extra)));
}

TEST_CASE("check-lemmas command") {
  TempDir tmp;
  std::ostringstream out, err;
  CliOverrides ov;
  ov.out_dir = (tmp.path / "lem").string();
  const std::string constant = "lemmas:\n  kind: constant\n  batch_size: 3\n  grid_spacing: 0.05\n  pair_count: 50\n";
  CHECK(cmd_check_lemmas(tmp.write("c.yaml", constant), ov, out, err) == 0);
  CHECK(fs::exists(tmp.path / "lem" / "lemma_reports.json"));

  const LemmaBatchResult r = run_lemma_batch(parse_config(constant).lemmas, 2, 1);
  CHECK(r.maximal.empirical_constant == doctest::Approx(r.reference_ratio).epsilon(0.02));
  CHECK(r.pointwise.sample_count == 0);
  CHECK(r.stable);

  std::ostringstream err2;
  const std::string degenerate = "lemmas:\n  batch_size: 2\n  lambda: 0.01\n  grid_spacing: 0.05\n";
  CHECK(cmd_check_lemmas(tmp.write("d.yaml", degenerate), ov, out, err2) == 1);
  CHECK(contains(err2.str(), "degenerate"));
}
