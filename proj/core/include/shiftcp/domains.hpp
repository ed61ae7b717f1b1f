#pragma once

// Domain-shift estimation: nearest-centroid domain assignment, the
// true-domain -> assigned-domain transition matrix, count inversion, and the
// resampling / reweighting plans that rebalance calibration data.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shiftcp/records.hpp"

namespace shiftcp {

struct DomainCentroid {
  DomainId domain;
  std::vector<double> vector;  // unit l2 norm
};

// Per-domain mean embedding, l2-normalized. Domains are ordered by id.
std::vector<DomainCentroid> compute_centroids(const Dataset& cluster_split);

// Cosine argmax over centroids; ties resolve to the earliest centroid.
std::size_t assign_domain_index(std::span<const double> embedding, std::span<const DomainCentroid> centroids);
const DomainId& assign_domain(std::span<const double> embedding, std::span<const DomainCentroid> centroids);

struct TransitionMatrix {
  std::vector<DomainId> domains;
  // p[i][j]: fraction of true-domain-i calibration records assigned to domain j.
  std::vector<std::vector<double>> p;

  std::size_t size() const noexcept { return domains.size(); }
};

TransitionMatrix estimate_transition(const Dataset& calibration, std::span<const DomainCentroid> centroids);

// Histogram of assigned domains over the test set, in centroid order.
std::vector<double> count_test_clusters(const Dataset& test, std::span<const DomainCentroid> centroids);

inline constexpr double kMaxConditionNumber = 1e6;

struct DomainCountEstimate {
  std::vector<DomainId> domains;
  std::vector<double> observed;   // assigned counts
  std::vector<double> estimated;  // recovered true counts, non-negative
  double conditioning = 1.0;      // 2-norm condition number of P^T
  bool fallback_used = false;
};

// Solves P^T n = observed. Negative entries or an excessive condition number
// trigger clip-and-rescale; a failed solve returns the observed counts.
DomainCountEstimate invert_counts(const TransitionMatrix& transition, std::span<const double> observed);

enum class BalanceStrategy { none, resample, reweight };

std::string_view to_string(BalanceStrategy strategy);
BalanceStrategy parse_balance_strategy(std::string_view text);

// density_ratio: (test share) / (calibration share), so no shift gives weight 1.
// paper_literal: test share alone.
enum class WeightFormula { density_ratio, paper_literal };

std::string_view to_string(WeightFormula formula);
WeightFormula parse_weight_formula(std::string_view text);

struct BalancePlan {
  BalanceStrategy strategy = BalanceStrategy::none;
  std::vector<RecordId> resample_ids;          // multiset, resample only
  std::map<RecordId, double> weights;          // reweight only
  std::map<DomainId, double> domain_weights;   // per-domain weight (reweight)
  std::map<DomainId, double> target_shares;    // estimated test shares
};

BalancePlan build_balance_plan(const DomainCountEstimate& estimate, const Dataset& calibration,
                               BalanceStrategy strategy, std::size_t target_size, std::uint64_t seed,
                               WeightFormula formula = WeightFormula::density_ratio);

}  // namespace shiftcp
