#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wellprobe/measure.hpp"

namespace wellprobe {

inline constexpr const char* kOutputDirEnv = "WELLPROBE_OUTPUT_DIR";

// Pipelines in the order run() executes them.
inline const std::vector<std::string> kPipelineOrder{"spectrum", "eigen", "agmon", "measure", "husimi", "bounds", "report"};

struct ExperimentConfig {
  // [potential]
  std::string V = "(x-1)^2";
  double L = 2.0;
  std::string q;  // empty: no perturbation

  // [schedule] eps = list, or eps_max / ratio / count
  std::vector<double> schedule{0.1, 0.05, 0.025, 0.0125};

  // [run]
  std::vector<std::string> pipelines{"spectrum", "eigen", "agmon", "measure", "bounds"};
  std::string regime_text = "ground";
  RegimeTarget regime;  // also carries [measure] high_factor and [grid] policy
  std::string output = "wellprobe-out";
  std::uint64_t seed = 1;
  unsigned threads = 0;  // 0: hardware concurrency

  // [spectrum]
  double spectrum_eps = 0.0;  // 0: smallest schedule eps
  int spectrum_count = 10;
  std::optional<std::pair<double, double>> spectrum_window;
  bool spectrum_oracle = true;
  double oracle_rel = 1e-6;

  // [eigen]
  std::optional<int> eigen_index;  // default: the regime mode

  // [agmon]
  std::optional<double> agmon_energy;  // default: E of the regime mode
  int agmon_points = 257;

  // [measure]
  std::vector<std::string> phi{"one", "x", "x2", "sin"};
  double indicator_width = 0.025;
  double moment_tol = 0.02;
  double trace_rel = 0.05;
  double trace_zero = 1e-4;

  // [husimi]
  double husimi_eps = 0.0;  // 0: smallest schedule eps
  int husimi_nx = 161;
  int husimi_nxi = 161;
  double xi_max = 0.0;
  double tube_const = 5.0;

  // [bounds] window and boundary replace each other; neither means boundary 0
  std::optional<std::pair<double, double>> window;
  std::optional<std::string> boundary;  // "0" or "L"
  double alpha = 0.3;

  // Every accepted entry as section.key = value, in the order applied.
  std::vector<std::pair<std::string, std::string>> echo;
};

// Applies one entry. `where` (e.g. "run.cfg:12" or "flag --eps") prefixes
// diagnostics. Throws ConfigError.
void apply_entry(ExperimentConfig& config, const std::string& section, const std::string& key,
                 const std::string& value, const std::string& where);

// Flat key = value text with [section] headers and # comments.
void apply_config_text(ExperimentConfig& config, const std::string& text, const std::string& source);
void apply_config_file(ExperimentConfig& config, const std::string& path);

// Strictly decreasing positive schedule; grid rule at every eps in use
// (h <= eps / 2 for a fixed n, the node cap for the auto policy); pipeline
// names; window sanity. Throws ConfigError naming the offending value.
void validate(const ExperimentConfig& config);

RegimeTarget parse_regime(const std::string& text);

// Smallest schedule eps, or the explicit override when positive.
double eps_or_smallest(const ExperimentConfig& config, double override_eps);

// E_max - E0 for the spectrum pipeline: the window top, or an upper bound on
// the count-th level.
double spectrum_energy_span(const ExperimentConfig& config, const Well& well, double eps);

}  // namespace wellprobe
