#include "shiftcp/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shiftcp/errors.hpp"
#include "shiftcp/parallel.hpp"
#include "shiftcp/prediction.hpp"

namespace shiftcp {

namespace {

void check_alpha(double alpha, const char* where) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ConfigError(std::string(where) + ": alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
}

// Finite-sample target (n+1)(1-alpha), shifted down by the tolerance.
double target_rank(std::size_t n, double alpha) {
  return static_cast<double>(n + 1) * (1.0 - alpha) - kLevelTolerance;
}

}  // namespace

double conformal_quantile(std::span<const double> scores, double alpha) {
  if (scores.empty()) throw DataError("conformal_quantile: no scores");
  check_alpha(alpha, "conformal_quantile");
  const std::size_t n = scores.size();
  const double rank = std::ceil(target_rank(n, alpha));
  if (rank > static_cast<double>(n)) return kUnbounded;
  if (rank < 1.0) return -kUnbounded;
  const auto k = static_cast<std::size_t>(rank);
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end());
  return sorted[k - 1];
}

double weighted_quantile(std::span<const double> scores, std::span<const double> weights, double alpha) {
  if (scores.empty()) throw DataError("weighted_quantile: no scores");
  if (weights.size() != scores.size()) throw DataError("weighted_quantile: scores and weights differ in length");
  check_alpha(alpha, "weighted_quantile");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) throw DataError("weighted_quantile: weights must be positive and finite");
    total += w;
  }
  const std::size_t n = scores.size();
  const double rank = target_rank(n, alpha);
  if (rank > static_cast<double>(n)) return kUnbounded;
  if (rank <= 0.0) return -kUnbounded;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Mass is compared on the rank scale (cum * n / total) so that uniform
  // weights select exactly the same order statistic as conformal_quantile.
  const double scale = static_cast<double>(n) / total;
  double cum = 0.0;
  for (std::size_t idx : order) {
    cum += weights[idx];
    if (cum * scale >= rank) return scores[idx];
  }
  return scores[order.back()];
}

double alpha1_from_alpha0(double alpha, double alpha0, double answerable_rate) {
  if (!(answerable_rate > 0.0 && answerable_rate <= 1.0)) {
    throw DataError("alpha1_from_alpha0: answerable rate must be positive; adaptive rejection is unavailable");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha1_from_alpha0: alpha must lie in (0, 1)");
  if (!(alpha0 >= 0.0 && alpha0 <= alpha)) throw ConfigError("alpha1_from_alpha0: alpha0 must lie in [0, alpha]");
  return (1.0 - answerable_rate) * (alpha - alpha0) / (answerable_rate * (1.0 - alpha));
}

std::string_view to_string(CalibrationMode mode) {
  switch (mode) {
    case CalibrationMode::bad: return "bad";
    case CalibrationMode::basic: return "basic";
    case CalibrationMode::ar: return "ar";
  }
  return "unknown";
}

CalibrationMode parse_calibration_mode(std::string_view text) {
  if (text == "bad") return CalibrationMode::bad;
  if (text == "basic") return CalibrationMode::basic;
  if (text == "ar") return CalibrationMode::ar;
  throw ConfigError("unknown calibration mode '" + std::string(text) + "'");
}

void validate(const CalibrationConfig& config) {
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(config.alpha));
  }
  if (!(config.cluster_threshold > 0.0 && config.cluster_threshold <= 1.0)) {
    throw ConfigError("cluster threshold must lie in (0, 1], got " + std::to_string(config.cluster_threshold));
  }
  if (config.grid_points < 2) throw ConfigError("grid_points must be at least 2");
  if (!std::isfinite(config.no_match_score)) throw ConfigError("no_match_score must be finite");
}

std::vector<ScoredCalibrationItem> score_calibration(const Dataset& calibration, const CalibrationConfig& config,
                                                     std::span<const double> weights) {
  if (!weights.empty() && weights.size() != calibration.size()) {
    throw DataError("score_calibration: weight count does not match the calibration set");
  }
  std::vector<ScoredCalibrationItem> items(calibration.size());
  parallel_for(calibration.size(), config.workers, [&](std::size_t i) {
    const auto& rec = calibration[i];
    const auto clustered = cluster_answers(rec.samples, config.cluster_threshold);
    const auto label = answerability(clustered, rec.samples, rec.ground_truths, config.match_mode);
    auto& item = items[i];
    item.id = rec.id;
    item.ne = clustered.ne;
    item.p0 = clustered.p0;
    item.p1 = clustered.p1;
    item.answerable = label.answerable;
    item.nonconformity = nonconformity_score(clustered, label, config.score_mode, config.no_match_score);
    item.weight = weights.empty() ? 1.0 : weights[i];
    item.domain = rec.domain;
    item.cluster_scores = cluster_scores(clustered, config.score_mode);
  });
  return items;
}

namespace {

template <typename Pred, typename Value>
double partition_quantile(std::span<const ScoredCalibrationItem> items, double alpha, bool weighted, Pred keep,
                          Value value) {
  std::vector<double> scores, weights;
  for (const auto& it : items) {
    if (!keep(it)) continue;
    scores.push_back(value(it));
    weights.push_back(it.weight);
  }
  if (scores.empty()) return kUnbounded;
  return weighted ? weighted_quantile(scores, weights, alpha) : conformal_quantile(scores, alpha);
}

}  // namespace

std::pair<double, double> reject_quantiles(std::span<const ScoredCalibrationItem> items, double alpha0, double alpha1,
                                           bool weighted) {
  if (items.empty()) throw DataError("reject_quantiles: no calibration items");
  const double q0 = partition_quantile(
      items, alpha0, weighted, [](const auto& it) { return !it.answerable; }, [](const auto& it) { return it.p0; });
  const double q1 = partition_quantile(
      items, alpha1, weighted, [](const auto& it) { return it.answerable; }, [](const auto& it) { return it.p1; });
  return {q0, q1};
}

double answer_quantile(std::span<const ScoredCalibrationItem> items, double q1, double alpha, bool weighted) {
  return partition_quantile(
      items, alpha, weighted, [q1](const auto& it) { return it.answerable && it.p1 < q1; },
      [](const auto& it) { return it.nonconformity; });
}

double mean_set_size(std::span<const ScoredCalibrationItem> items, const ConformalQuantiles& quantiles,
                     CalibrationMode mode, bool weighted) {
  if (items.empty()) return 0.0;
  double total = 0.0, mass = 0.0;
  for (const auto& it : items) {
    const double w = weighted ? it.weight : 1.0;
    total += w * static_cast<double>(decide(mode, quantiles, it.p0, it.p1, it.cluster_scores).set_size());
    mass += w;
  }
  return total / mass;
}

double answerable_rate(std::span<const ScoredCalibrationItem> items, bool weighted) {
  double yes = 0.0, mass = 0.0;
  for (const auto& it : items) {
    const double w = weighted ? it.weight : 1.0;
    if (it.answerable) yes += w;
    mass += w;
  }
  return mass > 0.0 ? yes / mass : 0.0;
}

ConformalQuantiles quantiles_for(std::span<const ScoredCalibrationItem> items, double alpha, double alpha0,
                                 double alpha1, bool weighted) {
  ConformalQuantiles q;
  q.alpha = alpha;
  q.alpha0 = alpha0;
  q.alpha1 = alpha1;
  q.answerable_rate = answerable_rate(items, weighted);
  std::tie(q.q0, q.q1) = reject_quantiles(items, alpha0, alpha1, weighted);
  q.q_text = answer_quantile(items, q.q1, alpha, weighted);
  return q;
}

GridSearchResult grid_search(std::span<const ScoredCalibrationItem> items, double alpha, std::size_t grid_points,
                             bool weighted) {
  if (grid_points < 2) throw ConfigError("grid_search: at least 2 grid points required");
  if (items.empty()) throw DataError("grid_search: no calibration items");
  const double r = answerable_rate(items, weighted);

  GridSearchResult result;
  bool have_best = false;
  // From alpha0 = alpha downwards, so equal objectives keep the larger alpha0.
  for (std::size_t step = grid_points + 1; step-- > 0;) {
    const double alpha0 = step == grid_points ? alpha : alpha * static_cast<double>(step) / static_cast<double>(grid_points);
    double alpha1 = 0.0;
    if (step != grid_points) {
      if (!(r > 0.0)) continue;
      alpha1 = alpha1_from_alpha0(alpha, alpha0, r);
      if (!(alpha1 >= 0.0 && alpha1 <= 1.0)) continue;
    }
    const auto q = quantiles_for(items, alpha, alpha0, alpha1, weighted);
    const double size = mean_set_size(items, q, CalibrationMode::ar, weighted);
    result.evaluated.push_back({alpha0, alpha1, size});
    if (step == grid_points) result.baseline_mean_size = size;
    if (!have_best || size < result.mean_size) {
      result.quantiles = q;
      result.mean_size = size;
      have_best = true;
    }
  }
  return result;
}

std::vector<ScoredCalibrationItem> balance_items(std::span<const ScoredCalibrationItem> items, const BalancePlan& plan) {
  std::vector<ScoredCalibrationItem> out;
  switch (plan.strategy) {
    case BalanceStrategy::none:
      out.assign(items.begin(), items.end());
      for (auto& it : out) it.weight = 1.0;
      break;
    case BalanceStrategy::reweight:
      out.assign(items.begin(), items.end());
      for (auto& it : out) {
        auto w = plan.weights.find(it.id);
        if (w == plan.weights.end()) throw DataError("calibrate: no weight for calibration record '" + it.id + "'");
        it.weight = w->second;
      }
      break;
    case BalanceStrategy::resample: {
      if (plan.resample_ids.empty()) throw DataError("calibrate: resample plan is empty");
      std::map<std::string_view, std::size_t> index;
      for (std::size_t i = 0; i < items.size(); ++i) index.emplace(items[i].id, i);
      out.reserve(plan.resample_ids.size());
      for (std::size_t n = 0; n < plan.resample_ids.size(); ++n) {
        auto it = index.find(plan.resample_ids[n]);
        if (it == index.end()) {
          throw DataError("calibrate: resample id '" + plan.resample_ids[n] + "' is not in the calibration set");
        }
        out.push_back(items[it->second]);
        out.back().id += "#" + std::to_string(n);
        out.back().weight = 1.0;
      }
      break;
    }
  }
  return out;
}

BalanceSummary summarize(const BalancePlan& plan, WeightFormula weight_formula) {
  BalanceSummary b;
  b.strategy = plan.strategy;
  b.weight_formula = weight_formula;
  b.target_shares = plan.target_shares;
  b.domain_weights = plan.domain_weights;
  return b;
}

CalibrationArtifact calibrate_items(std::span<const ScoredCalibrationItem> items, const CalibrationConfig& config,
                                    const BalanceSummary& balance, std::size_t m) {
  validate(config);
  if (items.empty()) throw DataError("calibrate: calibration set is empty");

  CalibrationArtifact art;
  art.config = config;
  art.m = m;
  art.balance = balance;
  art.balance.calibration_size = items.size();
  art.n_calibration = items.size();
  art.n_answerable = static_cast<std::size_t>(
      std::count_if(items.begin(), items.end(), [](const auto& it) { return it.answerable; }));
  const bool weighted = balance.strategy == BalanceStrategy::reweight;
  const double alpha = config.alpha;

  auto all_items = [](const auto&) { return true; };
  auto nonconformity = [](const auto& it) { return it.nonconformity; };

  switch (config.mode) {
    case CalibrationMode::bad: {
      auto& q = art.quantiles;
      q.alpha = alpha;
      q.alpha0 = alpha;
      q.alpha1 = 0.0;
      q.answerable_rate = answerable_rate(items, weighted);
      q.q_text = partition_quantile(items, alpha, weighted, all_items, nonconformity);
      break;
    }
    case CalibrationMode::basic: {
      auto& q = art.quantiles;
      q.alpha = alpha;
      q.alpha0 = alpha;
      q.alpha1 = 0.0;
      q.answerable_rate = answerable_rate(items, weighted);
      q.q0 = reject_quantiles(items, alpha, 0.0, weighted).first;
      q.q_text = partition_quantile(items, alpha, weighted, all_items, nonconformity);
      break;
    }
    case CalibrationMode::ar: {
      const auto grid = grid_search(items, alpha, config.grid_points, weighted);
      if (grid.mean_size > grid.baseline_mean_size) {
        throw NumericalError("calibrate: grid search optimum exceeds the no-rejection baseline");
      }
      art.quantiles = grid.quantiles;
      art.calibration_mean_size = grid.mean_size;
      art.baseline_mean_size = grid.baseline_mean_size;
      return art;
    }
  }
  art.calibration_mean_size = mean_set_size(items, art.quantiles, config.mode, weighted);
  art.baseline_mean_size = art.calibration_mean_size;
  return art;
}

CalibrationArtifact calibrate(const Dataset& calibration, const CalibrationConfig& config, const BalancePlan& balance,
                              WeightFormula weight_formula) {
  validate(config);
  if (calibration.empty()) throw DataError("calibrate: calibration set is empty");
  const auto scored = score_calibration(calibration, config);
  const auto items = balance_items(scored, balance);
  return calibrate_items(items, config, summarize(balance, weight_formula), calibration.samples_per_question());
}

}  // namespace shiftcp
