#include "shiftcp/domains.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "shiftcp/errors.hpp"
#include "shiftcp/random.hpp"

namespace shiftcp {

namespace {

// Weight floor for domains whose estimated test share is zero; keeps every
// calibration weight strictly positive.
constexpr double kMinWeight = 1e-9;

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::size_t domain_position(const std::vector<DomainId>& domains, const DomainId& d) {
  auto it = std::find(domains.begin(), domains.end(), d);
  return it == domains.end() ? domains.size() : static_cast<std::size_t>(it - domains.begin());
}

}  // namespace

std::vector<DomainCentroid> compute_centroids(const Dataset& cluster_split) {
  if (cluster_split.empty()) throw DataError("compute_centroids: cluster split is empty");
  std::map<DomainId, std::pair<std::vector<double>, std::size_t>> sums;
  for (const auto& r : cluster_split.records()) {
    if (!r.embedding) throw DataError("compute_centroids: record '" + r.id + "' has no embedding");
    if (!r.domain) throw DataError("compute_centroids: record '" + r.id + "' has no domain label");
    auto& [sum, count] = sums[*r.domain];
    if (sum.empty()) sum.assign(r.embedding->size(), 0.0);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*r.embedding)[i];
    ++count;
  }

  std::vector<DomainCentroid> out;
  out.reserve(sums.size());
  for (auto& [domain, entry] : sums) {
    auto& [sum, count] = entry;
    for (double& x : sum) x /= static_cast<double>(count);
    const double norm = l2_norm(sum);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw DataError("compute_centroids: domain '" + domain + "' has a zero mean embedding");
    }
    for (double& x : sum) x /= norm;
    out.push_back({domain, std::move(sum)});
  }
  return out;
}

std::size_t assign_domain_index(std::span<const double> embedding, std::span<const DomainCentroid> centroids) {
  if (centroids.empty()) throw DataError("assign_domain: no centroids");
  const double norm = l2_norm(embedding);
  if (!(norm > 0.0) || !std::isfinite(norm)) throw DataError("assign_domain: zero or non-finite embedding");

  std::size_t best = 0;
  double best_sim = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centroids.size(); ++k) {
    const auto& c = centroids[k].vector;
    if (c.size() != embedding.size()) {
      throw DataError("assign_domain: embedding dimension " + std::to_string(embedding.size()) +
                      " does not match centroid dimension " + std::to_string(c.size()));
    }
    double sim = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sim += c[i] * (embedding[i] / norm);
    if (sim > best_sim) {
      best_sim = sim;
      best = k;
    }
  }
  return best;
}

const DomainId& assign_domain(std::span<const double> embedding, std::span<const DomainCentroid> centroids) {
  return centroids[assign_domain_index(embedding, centroids)].domain;
}

TransitionMatrix estimate_transition(const Dataset& calibration, std::span<const DomainCentroid> centroids) {
  TransitionMatrix t;
  for (const auto& c : centroids) t.domains.push_back(c.domain);
  const std::size_t k = t.domains.size();
  if (k == 0) throw DataError("estimate_transition: no centroids");
  t.p.assign(k, std::vector<double>(k, 0.0));
  std::vector<std::size_t> row_counts(k, 0);

  for (const auto& r : calibration.records()) {
    if (!r.domain) throw DataError("estimate_transition: calibration record '" + r.id + "' has no domain label");
    if (!r.embedding) throw DataError("estimate_transition: calibration record '" + r.id + "' has no embedding");
    const std::size_t i = domain_position(t.domains, *r.domain);
    if (i == k) {
      throw DataError("estimate_transition: calibration domain '" + *r.domain + "' has no centroid");
    }
    t.p[i][assign_domain_index(*r.embedding, centroids)] += 1.0;
    ++row_counts[i];
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (row_counts[i] == 0) {
      throw DataError("estimate_transition: domain '" + t.domains[i] + "' has no calibration records");
    }
    for (double& v : t.p[i]) v /= static_cast<double>(row_counts[i]);
  }
  return t;
}

std::vector<double> count_test_clusters(const Dataset& test, std::span<const DomainCentroid> centroids) {
  std::vector<double> counts(centroids.size(), 0.0);
  for (const auto& r : test.records()) {
    if (!r.embedding) throw DataError("count_test_clusters: test record '" + r.id + "' has no embedding");
    counts[assign_domain_index(*r.embedding, centroids)] += 1.0;
  }
  return counts;
}

DomainCountEstimate invert_counts(const TransitionMatrix& transition, std::span<const double> observed) {
  const std::size_t k = transition.size();
  if (observed.size() != k || transition.p.size() != k) {
    throw DataError("invert_counts: transition matrix is " + std::to_string(transition.p.size()) +
                    "x? but " + std::to_string(observed.size()) + " counts were given");
  }

  DomainCountEstimate est;
  est.domains = transition.domains;
  est.observed.assign(observed.begin(), observed.end());

  Eigen::MatrixXd pt(k, k);
  for (std::size_t i = 0; i < k; ++i) {
    if (transition.p[i].size() != k) throw DataError("invert_counts: transition matrix is not square");
    for (std::size_t j = 0; j < k; ++j) pt(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = transition.p[i][j];
  }
  Eigen::VectorXd rhs(k);
  for (std::size_t i = 0; i < k; ++i) rhs(static_cast<Eigen::Index>(i)) = observed[i];
  const double total = rhs.sum();

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(pt);
  const auto& sv = svd.singularValues();
  est.conditioning = sv(sv.size() - 1) > 0.0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();

  const Eigen::FullPivLU<Eigen::MatrixXd> lu(pt);
  if (!lu.isInvertible()) {
    est.estimated = est.observed;
    est.fallback_used = true;
    return est;
  }
  const Eigen::VectorXd solution = lu.solve(rhs);
  if (!solution.allFinite()) {
    est.estimated = est.observed;
    est.fallback_used = true;
    return est;
  }

  est.estimated.resize(k);
  for (std::size_t i = 0; i < k; ++i) est.estimated[i] = solution(static_cast<Eigen::Index>(i));

  const bool negative = std::any_of(est.estimated.begin(), est.estimated.end(), [](double v) { return v < 0.0; });
  if (negative || est.conditioning > kMaxConditionNumber) {
    est.fallback_used = true;
    for (double& v : est.estimated) v = std::max(v, 0.0);
    const double clipped = std::accumulate(est.estimated.begin(), est.estimated.end(), 0.0);
    if (clipped > 0.0) {
      for (double& v : est.estimated) v *= total / clipped;
    } else {
      est.estimated = est.observed;
    }
  }
  return est;
}

std::string_view to_string(BalanceStrategy strategy) {
  switch (strategy) {
    case BalanceStrategy::none: return "none";
    case BalanceStrategy::resample: return "resample";
    case BalanceStrategy::reweight: return "reweight";
  }
  return "unknown";
}

BalanceStrategy parse_balance_strategy(std::string_view text) {
  if (text == "none") return BalanceStrategy::none;
  if (text == "resample") return BalanceStrategy::resample;
  if (text == "reweight") return BalanceStrategy::reweight;
  throw ConfigError("unknown balance strategy '" + std::string(text) + "'");
}

std::string_view to_string(WeightFormula formula) {
  return formula == WeightFormula::density_ratio ? "density-ratio" : "paper-literal";
}

WeightFormula parse_weight_formula(std::string_view text) {
  if (text == "density-ratio") return WeightFormula::density_ratio;
  if (text == "paper-literal") return WeightFormula::paper_literal;
  throw ConfigError("unknown weight formula '" + std::string(text) + "'");
}

BalancePlan build_balance_plan(const DomainCountEstimate& estimate, const Dataset& calibration,
                               BalanceStrategy strategy, std::size_t target_size, std::uint64_t seed,
                               WeightFormula formula) {
  BalancePlan plan;
  plan.strategy = strategy;
  if (strategy == BalanceStrategy::none) return plan;

  const std::size_t k = estimate.domains.size();
  if (estimate.estimated.size() != k) throw DataError("build_balance_plan: malformed domain estimate");
  const double total = std::accumulate(estimate.estimated.begin(), estimate.estimated.end(), 0.0);
  if (!(total > 0.0)) throw DataError("build_balance_plan: estimated test counts sum to zero");
  if (calibration.empty()) throw DataError("build_balance_plan: calibration set is empty");

  std::vector<std::size_t> cal_counts(k, 0);
  std::vector<std::size_t> record_domain(calibration.size());
  for (std::size_t r = 0; r < calibration.size(); ++r) {
    const auto& rec = calibration[r];
    if (!rec.domain) throw DataError("build_balance_plan: calibration record '" + rec.id + "' has no domain label");
    const std::size_t i = domain_position(estimate.domains, *rec.domain);
    if (i == k) throw DataError("build_balance_plan: calibration domain '" + *rec.domain + "' is not estimated");
    record_domain[r] = i;
    ++cal_counts[i];
  }

  std::vector<double> domain_weight(k, 0.0);
  const double n_cal = static_cast<double>(calibration.size());
  for (std::size_t i = 0; i < k; ++i) {
    const double share = estimate.estimated[i] / total;
    plan.target_shares[estimate.domains[i]] = share;
    if (share > 0.0 && cal_counts[i] == 0) {
      throw DataError("build_balance_plan: domain '" + estimate.domains[i] +
                      "' is present in the test estimate but has no calibration records");
    }
    if (cal_counts[i] == 0) continue;
    if (strategy == BalanceStrategy::resample || formula == WeightFormula::density_ratio) {
      domain_weight[i] = share / (static_cast<double>(cal_counts[i]) / n_cal);
    } else {
      domain_weight[i] = share;
    }
  }

  if (strategy == BalanceStrategy::reweight) {
    for (std::size_t i = 0; i < k; ++i) {
      if (cal_counts[i] > 0) plan.domain_weights[estimate.domains[i]] = std::max(domain_weight[i], kMinWeight);
    }
    for (std::size_t r = 0; r < calibration.size(); ++r) {
      plan.weights[calibration[r].id] = std::max(domain_weight[record_domain[r]], kMinWeight);
    }
    return plan;
  }

  // Resample with replacement: record r is drawn with probability
  // share_k / n_cal_k, i.e. proportional to its density-ratio weight.
  if (target_size == 0) throw DataError("build_balance_plan: resample target size must be positive");
  std::vector<double> draw_weights(calibration.size());
  for (std::size_t r = 0; r < calibration.size(); ++r) draw_weights[r] = domain_weight[record_domain[r]];
  std::discrete_distribution<std::size_t> pick(draw_weights.begin(), draw_weights.end());
  auto rng = make_rng(seed, 0xba1a);
  plan.resample_ids.reserve(target_size);
  for (std::size_t n = 0; n < target_size; ++n) plan.resample_ids.push_back(calibration[pick(rng)].id);
  return plan;
}

}  // namespace shiftcp
