#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/clustering.hpp"
#include "shiftcp/records.hpp"

namespace shiftcp {

enum class OutcomeKind { rejected, set };

std::string_view to_string(OutcomeKind kind);

// Result of the case table for one question, before it is attached to cluster
// representatives.
struct Decision {
  OutcomeKind kind = OutcomeKind::set;
  bool includes_cant_answer = false;
  std::vector<std::size_t> included;  // cluster indices with score < q_text

  std::size_t set_size() const noexcept {
    return kind == OutcomeKind::rejected ? 0 : included.size() + (includes_cant_answer ? 1 : 0);
  }
};

// ar:    p0 < q0 && p1 > q1  -> rejected
//        p0 < q0 && p1 <= q1 -> "can't answer" label plus clusters
//        p0 >= q0            -> clusters only
// basic: label iff p0 < q0, plus clusters
// bad:   clusters only
Decision decide(CalibrationMode mode, const ConformalQuantiles& quantiles, double p0, double p1,
                std::span<const double> cluster_scores);

struct PredictionOutcome {
  RecordId id;
  OutcomeKind kind = OutcomeKind::set;
  std::vector<std::size_t> cluster_indices;
  std::vector<std::string> clusters;  // representatives of included clusters
  bool includes_cant_answer = false;
  double p0 = 0.0;
  double p1 = 1.0;
  std::vector<double> scores;  // every cluster's nonconformity

  std::size_t set_size() const noexcept {
    return kind == OutcomeKind::rejected ? 0 : clusters.size() + (includes_cant_answer ? 1 : 0);
  }
};

// Throws ConfigError when `clustered` was built with a different threshold or
// sample count than the artifact.
PredictionOutcome predict(const ClusteredAnswers& clustered, const CalibrationArtifact& artifact);

PredictionOutcome predict_record(const QuestionRecord& record, const CalibrationArtifact& artifact);

std::vector<PredictionOutcome> predict_dataset(const Dataset& test, const CalibrationArtifact& artifact,
                                               std::size_t workers = 1);

std::string outcome_to_json(const PredictionOutcome& outcome);
PredictionOutcome outcome_from_json(std::string_view line);

}  // namespace shiftcp
