#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlf/analysis.hpp"
#include "rlf/flow.hpp"
#include "rlf/stability.hpp"

namespace rlf {

nlohmann::ordered_json to_json(const LemmaReport& report);
nlohmann::ordered_json to_json(const CompressibilityEstimate& estimate);
nlohmann::ordered_json to_json(const ExperimentParams& params);
nlohmann::ordered_json to_json(const StabilityReport& report);
nlohmann::ordered_json to_json(const SweepResult& sweep);

/// Per-step table of a stability report.
void write_steps_csv(std::ostream& out, const StabilityReport& report);
/// Schema: epsilon,delta,lhs_sup,inv_log_delta,ratio,main_estimate_holds,small_delta_ok
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Minimal line chart on an 800 x 500 viewBox. Log axes take log10 of
/// positive values and drop the rest.
std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                           const std::vector<Series>& series, bool log_x = false, bool log_y = false);

/// Writes the whole string or throws an io error naming the path.
void write_text_file(const std::string& path, const std::string& content);

}  // namespace rlf
