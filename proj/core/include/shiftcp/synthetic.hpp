#pragma once

// Synthetic multi-domain QA data with exactly recoverable answer clusters, and
// a Monte Carlo driver that runs the full pipeline per trial.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/domains.hpp"
#include "shiftcp/records.hpp"

namespace shiftcp {

struct SyntheticDomainSpec {
  DomainId id;
  std::vector<double> centroid_mean;
  double spread = 0.1;           // isotropic gaussian noise scale
  double answerable_rate = 1.0;
  // Ground-truth cluster size is 1 + Binomial(M - 1, 1 - difficulty * u) with
  // u ~ U(0, 1); higher difficulty means a smaller expected share.
  double difficulty = 0.3;
  std::size_t m = 10;
  // Leftover samples are spread uniformly over 1..max_distractors slots;
  // 0 means "up to M".
  std::size_t max_distractors = 0;
};

void validate(const SyntheticDomainSpec& spec);

struct GeneratedDataset {
  Dataset dataset;
  std::vector<std::vector<std::size_t>> intended_sizes;  // cluster sizes per record, first-appearance order
  std::vector<bool> answerable;
  std::vector<double> true_counts;  // per spec, in spec order
};

// mix[k] questions from specs[k]. Records keep their true domain label; ids are
// "<prefix>-<domain>-<n>".
GeneratedDataset generate_dataset(const std::vector<SyntheticDomainSpec>& specs, const std::vector<std::size_t>& mix,
                                  std::uint64_t seed, const std::string& prefix = "q",
                                  DatasetRole role = DatasetRole::calibration);

struct ScenarioConfig {
  std::vector<SyntheticDomainSpec> domains;
  std::vector<std::size_t> cluster_mix;  // empty: same as calibration_mix
  std::vector<std::size_t> calibration_mix;
  std::vector<std::size_t> test_mix;
  std::vector<double> alphas{0.1};
  std::vector<CalibrationMode> modes{CalibrationMode::bad};
  std::vector<BalanceStrategy> balances{BalanceStrategy::none};
  std::size_t trials = 10;
  std::uint64_t seed = 0;
  std::size_t resample_target = 0;  // 0: calibration size
  WeightFormula weight_formula = WeightFormula::density_ratio;
  double cluster_threshold = kDefaultClusterThreshold;
  ScoreMode score_mode = ScoreMode::frequency_minus_ne;
  double no_match_score = kDefaultNoMatchScore;
  std::size_t grid_points = 20;
  std::size_t workers = 1;
};

void validate(const ScenarioConfig& scenario);

ScenarioConfig scenario_from_json(std::string_view text);
ScenarioConfig load_scenario(const std::string& path);

struct TrialStatRow {
  double alpha = 0.0;
  CalibrationMode mode = CalibrationMode::bad;
  BalanceStrategy balance = BalanceStrategy::none;
  std::size_t trials = 0;
  double mean_coverage = 0.0;
  double coverage_se = 0.0;
  double mean_efficiency = 0.0;
  double efficiency_se = 0.0;
  std::optional<double> mean_unanswerable_efficiency;
  double mean_rejection_rate = 0.0;
  double mean_delta = 0.0;
  double mean_calibration_size = 0.0;
  double mean_baseline_size = 0.0;
  std::size_t dominance_violations = 0;  // calibration runs with optimum > baseline
};

struct TrialStats {
  std::vector<TrialStatRow> rows;  // ordered by (balance, alpha, mode)
  std::vector<DomainId> domains;
  std::vector<double> mean_delta_per_domain;  // over trials
  double mean_delta = 0.0;
  double mean_assignment_accuracy = 0.0;      // test records assigned to their true domain

  const TrialStatRow* find(double alpha, CalibrationMode mode, BalanceStrategy balance) const;
};

TrialStats run_trials(const ScenarioConfig& scenario);

void write_trial_stats_csv(std::ostream& out, const TrialStats& stats);

// K orthogonal domain means e_1..e_K scaled by `norm` in dimension d >= K.
std::vector<SyntheticDomainSpec> orthogonal_domains(std::size_t k, std::size_t d, double spread, double norm = 1.0);

// Like orthogonal_domains, but the second mean is tilted towards the first by
// `overlap` in [0, 1) so the two are confusable.
std::vector<SyntheticDomainSpec> confusable_domains(std::size_t k, std::size_t d, double spread, double overlap);

}  // namespace shiftcp
