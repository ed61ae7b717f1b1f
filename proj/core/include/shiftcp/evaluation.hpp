#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "shiftcp/clustering.hpp"
#include "shiftcp/domains.hpp"
#include "shiftcp/prediction.hpp"
#include "shiftcp/records.hpp"

namespace shiftcp {

// Unanswerable: covered iff rejected or the "can't answer" label is present.
// Answerable: covered iff not rejected and an included cluster has a member
// matching a reference answer.
bool is_covered(const PredictionOutcome& outcome, const QuestionRecord& record, const AnswerabilityLabel& label,
                const ClusteredAnswers& clustered, MatchMode match_mode = MatchMode::exact);

struct DomainBreakdown {
  std::size_t n = 0;
  double coverage = 0.0;
  double efficiency = 0.0;
};

struct EvalReport {
  double coverage = 0.0;
  double efficiency = 0.0;
  std::optional<double> unanswerable_efficiency;  // absent without unanswerable questions
  double rejection_rate = 0.0;
  std::map<DomainId, DomainBreakdown> per_domain;
  std::size_t n_evaluated = 0;
};

// Outcomes and records are aligned by id; the cluster threshold and match mode
// must match the ones used for calibration.
EvalReport evaluate(std::span<const PredictionOutcome> outcomes, const Dataset& records, double cluster_threshold,
                    MatchMode match_mode = MatchMode::exact);

// Same as evaluate, with every input aligned by position and the clustering
// and answerability of each record precomputed.
EvalReport evaluate_prepared(std::span<const PredictionOutcome> outcomes, std::span<const QuestionRecord> records,
                             std::span<const ClusteredAnswers> clustered, std::span<const AnswerabilityLabel> labels,
                             MatchMode match_mode = MatchMode::exact);

struct DomainErrorReport {
  std::map<DomainId, double> per_domain;  // |n - n_hat| / n
  double mean = 0.0;
};

DomainErrorReport domain_count_error(std::span<const double> true_counts, const DomainCountEstimate& estimate);

}  // namespace shiftcp
