#pragma once

// Conformal calibration: split-conformal and weighted quantiles, the
// label-conditional rejection quantiles, the recomputed answer quantile, and
// the grid search over (alpha0, alpha1) that minimizes calibration set size.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftcp/clustering.hpp"
#include "shiftcp/domains.hpp"
#include "shiftcp/records.hpp"

namespace shiftcp {

// Quantile value meaning "admit every score".
inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// (n+1)(1-alpha) is compared against integers with this slack so that values
// such as 10 * 0.9 do not round up to the next order statistic.
inline constexpr double kLevelTolerance = 1e-9;

// ceil((n+1)(1-alpha))-th smallest score; +inf once that rank exceeds n and
// -inf when it falls below 1 (alpha = 1).
double conformal_quantile(std::span<const double> scores, double alpha);

// Smallest q whose normalized weight mass {s <= q} reaches (n+1)(1-alpha)/n,
// with the same +inf / -inf saturation as conformal_quantile.
double weighted_quantile(std::span<const double> scores, std::span<const double> weights, double alpha);

// alpha1 = (1 - r)(alpha - alpha0) / (r (1 - alpha)).
double alpha1_from_alpha0(double alpha, double alpha0, double answerable_rate);

enum class CalibrationMode { bad, basic, ar };

std::string_view to_string(CalibrationMode mode);
CalibrationMode parse_calibration_mode(std::string_view text);

struct ScoredCalibrationItem {
  RecordId id;
  double ne = 0.0;
  double p0 = 0.0;
  double p1 = 1.0;
  bool answerable = false;
  double nonconformity = 0.0;
  double weight = 1.0;
  std::optional<DomainId> domain;
  std::vector<double> cluster_scores;  // nonconformity of every cluster, for set-size accounting
};

struct ConformalQuantiles {
  double alpha = 0.1;
  double alpha0 = 0.1;
  double alpha1 = 0.0;
  double q0 = kUnbounded;
  double q1 = kUnbounded;
  double q_text = kUnbounded;
  double answerable_rate = 0.0;

  friend bool operator==(const ConformalQuantiles&, const ConformalQuantiles&) = default;
};

struct CalibrationConfig {
  CalibrationMode mode = CalibrationMode::ar;
  double alpha = 0.1;
  double cluster_threshold = kDefaultClusterThreshold;
  ScoreMode score_mode = ScoreMode::frequency_minus_ne;
  double no_match_score = kDefaultNoMatchScore;
  MatchMode match_mode = MatchMode::exact;
  std::size_t grid_points = 20;
  std::uint64_t seed = 0;
  std::size_t workers = 1;

  friend bool operator==(const CalibrationConfig&, const CalibrationConfig&) = default;
};

void validate(const CalibrationConfig& config);

// Clusters and scores each record. Weights, when given, are aligned with the
// dataset records.
std::vector<ScoredCalibrationItem> score_calibration(const Dataset& calibration, const CalibrationConfig& config,
                                                     std::span<const double> weights = {});

// q0 over the unanswerable items' p0 at alpha0, q1 over the answerable items'
// p1 at alpha1; an empty partition yields +inf.
std::pair<double, double> reject_quantiles(std::span<const ScoredCalibrationItem> items, double alpha0, double alpha1,
                                           bool weighted);

// Quantile of the nonconformity of answerable items with p1 < q1.
double answer_quantile(std::span<const ScoredCalibrationItem> items, double q1, double alpha, bool weighted);

// Mean calibration prediction-set size (weighted mean when weighted) under the
// given quantiles: rejection counts 0, the "can't answer" label counts 1.
double mean_set_size(std::span<const ScoredCalibrationItem> items, const ConformalQuantiles& quantiles,
                     CalibrationMode mode, bool weighted);

struct GridPoint {
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double mean_size = 0.0;
};

struct GridSearchResult {
  ConformalQuantiles quantiles;
  double mean_size = 0.0;           // objective at the chosen pair
  double baseline_mean_size = 0.0;  // objective at (alpha0 = alpha, alpha1 = 0)
  std::vector<GridPoint> evaluated;
};

double answerable_rate(std::span<const ScoredCalibrationItem> items, bool weighted);

ConformalQuantiles quantiles_for(std::span<const ScoredCalibrationItem> items, double alpha, double alpha0,
                                 double alpha1, bool weighted);

// Evaluates alpha0 in {0, alpha/G, ..., alpha}; ties go to the larger alpha0.
GridSearchResult grid_search(std::span<const ScoredCalibrationItem> items, double alpha, std::size_t grid_points,
                             bool weighted);

struct BalanceSummary {
  BalanceStrategy strategy = BalanceStrategy::none;
  WeightFormula weight_formula = WeightFormula::density_ratio;
  std::size_t calibration_size = 0;  // after resampling
  std::map<DomainId, double> target_shares;
  std::map<DomainId, double> domain_weights;

  friend bool operator==(const BalanceSummary&, const BalanceSummary&) = default;
};

inline constexpr const char* kArtifactVersion = "shiftcp-artifact/1";

struct CalibrationArtifact {
  std::string version = kArtifactVersion;
  CalibrationConfig config;
  ConformalQuantiles quantiles;
  BalanceSummary balance;
  std::size_t m = 0;
  std::size_t n_calibration = 0;
  std::size_t n_answerable = 0;
  double calibration_mean_size = 0.0;
  double baseline_mean_size = 0.0;

  CalibrationMode mode() const noexcept { return config.mode; }
  friend bool operator==(const CalibrationArtifact&, const CalibrationArtifact&) = default;
};

// Applies a balance plan to scored items: resample duplicates the drawn items
// (ids suffixed "#draw"), reweight attaches the plan weights.
std::vector<ScoredCalibrationItem> balance_items(std::span<const ScoredCalibrationItem> items, const BalancePlan& plan);

// Quantiles for an already scored (and balanced) calibration set.
CalibrationArtifact calibrate_items(std::span<const ScoredCalibrationItem> items, const CalibrationConfig& config,
                                    const BalanceSummary& balance, std::size_t m);

BalanceSummary summarize(const BalancePlan& plan, WeightFormula weight_formula = WeightFormula::density_ratio);

// Scores the calibration set, applies the balance plan, and calibrates.
CalibrationArtifact calibrate(const Dataset& calibration, const CalibrationConfig& config, const BalancePlan& balance,
                              WeightFormula weight_formula = WeightFormula::density_ratio);

std::string artifact_to_json(const CalibrationArtifact& artifact);
CalibrationArtifact artifact_from_json(std::string_view text);
void save_artifact(const std::string& path, const CalibrationArtifact& artifact);
CalibrationArtifact load_artifact(const std::string& path);

}  // namespace shiftcp
