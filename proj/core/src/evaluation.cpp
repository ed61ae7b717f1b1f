#include "shiftcp/evaluation.hpp"

#include <cmath>
#include <unordered_map>

#include "shiftcp/errors.hpp"

namespace shiftcp {

bool is_covered(const PredictionOutcome& outcome, const QuestionRecord& record, const AnswerabilityLabel& label,
                const ClusteredAnswers& clustered, MatchMode match_mode) {
  if (!label.answerable) return outcome.kind == OutcomeKind::rejected || outcome.includes_cant_answer;
  if (outcome.kind == OutcomeKind::rejected) return false;
  const AnswerMatcher matcher(record.ground_truths, match_mode);
  for (auto c : outcome.cluster_indices) {
    if (c < clustered.clusters.size() && cluster_matches(clustered.clusters[c], record.samples, matcher)) return true;
  }
  return false;
}

EvalReport evaluate_prepared(std::span<const PredictionOutcome> outcomes, std::span<const QuestionRecord> records,
                             std::span<const ClusteredAnswers> clustered, std::span<const AnswerabilityLabel> labels,
                             MatchMode match_mode) {
  if (outcomes.size() != records.size() || clustered.size() != records.size() || labels.size() != records.size()) {
    throw DataError("evaluate: " + std::to_string(outcomes.size()) + " predictions for " +
                    std::to_string(records.size()) + " records");
  }
  EvalReport rep;
  rep.n_evaluated = outcomes.size();
  if (outcomes.empty()) return rep;

  double covered = 0.0, size = 0.0, rejected = 0.0, unans_size = 0.0;
  std::size_t n_unans = 0;
  std::map<DomainId, std::pair<double, double>> domain_sums;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& o = outcomes[i];
    const auto& rec = records[i];
    if (o.id != rec.id) throw DataError("evaluate: prediction id '" + o.id + "' does not match record '" + rec.id + "'");
    const bool cov = is_covered(o, rec, labels[i], clustered[i], match_mode);
    const auto s = static_cast<double>(o.set_size());
    covered += cov ? 1.0 : 0.0;
    size += s;
    if (o.kind == OutcomeKind::rejected) rejected += 1.0;
    if (!labels[i].answerable) {
      unans_size += s;
      ++n_unans;
    }
    if (rec.domain) {
      ++rep.per_domain[*rec.domain].n;
      auto& sums = domain_sums[*rec.domain];
      sums.first += cov ? 1.0 : 0.0;
      sums.second += s;
    }
  }
  const auto n = static_cast<double>(outcomes.size());
  rep.coverage = covered / n;
  rep.efficiency = size / n;
  rep.rejection_rate = rejected / n;
  if (n_unans > 0) rep.unanswerable_efficiency = unans_size / static_cast<double>(n_unans);
  for (auto& [domain, d] : rep.per_domain) {
    const auto& sums = domain_sums[domain];
    d.coverage = sums.first / static_cast<double>(d.n);
    d.efficiency = sums.second / static_cast<double>(d.n);
  }
  return rep;
}

EvalReport evaluate(std::span<const PredictionOutcome> outcomes, const Dataset& records, double cluster_threshold,
                    MatchMode match_mode) {
  if (outcomes.size() != records.size()) {
    throw DataError("evaluate: " + std::to_string(outcomes.size()) + " predictions for " +
                    std::to_string(records.size()) + " records");
  }
  std::unordered_map<std::string_view, std::size_t> index;
  index.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) index.emplace(records[i].id, i);

  std::vector<QuestionRecord> aligned;
  std::vector<ClusteredAnswers> clustered;
  std::vector<AnswerabilityLabel> labels;
  aligned.reserve(outcomes.size());
  clustered.reserve(outcomes.size());
  labels.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    auto it = index.find(o.id);
    if (it == index.end()) throw DataError("evaluate: prediction id '" + o.id + "' has no matching record");
    const auto& rec = records[it->second];
    aligned.push_back(rec);
    clustered.push_back(cluster_answers(rec.samples, cluster_threshold));
    labels.push_back(answerability(clustered.back(), rec.samples, rec.ground_truths, match_mode));
  }
  return evaluate_prepared(outcomes, aligned, clustered, labels, match_mode);
}

DomainErrorReport domain_count_error(std::span<const double> true_counts, const DomainCountEstimate& estimate) {
  if (true_counts.size() != estimate.estimated.size()) {
    throw DataError("domain_count_error: true counts and estimate differ in length");
  }
  DomainErrorReport rep;
  for (std::size_t k = 0; k < true_counts.size(); ++k) {
    if (!(true_counts[k] > 0.0)) {
      throw DataError("domain_count_error: true count of domain '" + estimate.domains[k] + "' is zero");
    }
    const double delta = std::abs(true_counts[k] - estimate.estimated[k]) / true_counts[k];
    rep.per_domain[estimate.domains[k]] = delta;
    rep.mean += delta;
  }
  if (!true_counts.empty()) rep.mean /= static_cast<double>(true_counts.size());
  return rep;
}

}  // namespace shiftcp
