#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/clustering.hpp"
#include "shiftcp/domains.hpp"

namespace shiftcp {

// Settings shared by every CLI command. Loaded from a `key = value` document
// (one per line, '#' comments) and then overridden by command-line flags.
struct RunConfig {
  std::vector<double> alphas{0.1};
  CalibrationMode mode = CalibrationMode::ar;
  BalanceStrategy balance = BalanceStrategy::none;
  WeightFormula weight_formula = WeightFormula::density_ratio;
  double cluster_threshold = kDefaultClusterThreshold;
  ScoreMode score_mode = ScoreMode::frequency_minus_ne;
  double no_match_score = kDefaultNoMatchScore;
  MatchMode match_mode = MatchMode::exact;
  std::size_t grid_points = 20;
  std::optional<std::size_t> resample_target;  // empty: calibration size ("auto")
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  std::string calibration_path;
  std::string cluster_split_path;
  std::string test_path;
  std::string artifact_path;
  std::string output_path;
  std::string predictions_path;
  std::string scenario_path;

  // Sets one key; throws ConfigError for unknown keys or bad values.
  void set(std::string_view key, std::string_view value);

  CalibrationConfig calibration_config(double alpha) const;
};

std::vector<std::string_view> run_config_keys();

RunConfig parse_run_config(std::string_view text, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

void validate(const RunConfig& config);

std::string to_text(const RunConfig& config);

}  // namespace shiftcp
