#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "shiftcp/calibration.hpp"
#include "shiftcp/errors.hpp"
#include "shiftcp/synthetic.hpp"

using namespace shiftcp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smallest observed score v with #{s <= v} >= (n+1)(1-alpha).
double quantile_oracle(const std::vector<double>& scores, double alpha) {
  const double level = static_cast<double>(scores.size() + 1) * (1.0 - alpha) - 1e-9;
  if (level > static_cast<double>(scores.size())) return kInf;
  if (level <= 0.0) return -kInf;
  std::set<double> candidates(scores.begin(), scores.end());
  for (double v : candidates) {
    const auto below = std::count_if(scores.begin(), scores.end(), [v](double s) { return s <= v; });
    if (static_cast<double>(below) >= level) return v;
  }
  return kInf;
}

double weighted_oracle(const std::vector<double>& scores, const std::vector<double>& weights, double alpha) {
  const double n = static_cast<double>(scores.size());
  const double level = (n + 1.0) * (1.0 - alpha) - 1e-9;
  if (level > n) return kInf;
  if (level <= 0.0) return -kInf;
  double total = 0.0;
  for (double w : weights) total += w;
  std::set<double> candidates(scores.begin(), scores.end());
  for (double v : candidates) {
    double mass = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] <= v) mass += weights[i];
    }
    if (mass * n / total >= level) return v;
  }
  return kInf;
}

ScoredCalibrationItem item(bool answerable, double p0, double nonconformity, std::vector<double> cluster_scores,
                           double weight = 1.0) {
  ScoredCalibrationItem it;
  it.answerable = answerable;
  it.p0 = p0;
  it.ne = p0;
  it.p1 = 1.0 - p0;
  it.nonconformity = nonconformity;
  it.cluster_scores = std::move(cluster_scores);
  it.weight = weight;
  return it;
}

// Set size of one item under the adaptive-rejection case table.
std::size_t size_oracle(const ScoredCalibrationItem& it, double q0, double q1, double q_text) {
  if (it.p0 < q0 && it.p1 > q1) return 0;
  std::size_t s = it.p0 < q0 ? 1 : 0;
  for (double c : it.cluster_scores) s += c < q_text ? 1 : 0;
  return s;
}

struct OracleOptimum {
  double alpha0 = 0.0;
  double size = 0.0;
  double baseline = 0.0;
};

// Exhaustive grid evaluation written against the quantile oracle.
OracleOptimum grid_oracle(const std::vector<ScoredCalibrationItem>& items, double alpha, std::size_t g) {
  double r = 0.0;
  for (const auto& it : items) r += it.answerable ? 1.0 : 0.0;
  r /= static_cast<double>(items.size());
  OracleOptimum best{0.0, kInf, kInf};
  for (std::size_t step = 0; step <= g; ++step) {
    const double a0 = step == g ? alpha : alpha * static_cast<double>(step) / static_cast<double>(g);
    const double a1 = step == g ? 0.0 : (1.0 - r) * (alpha - a0) / (r * (1.0 - alpha));
    if (a1 < 0.0 || a1 > 1.0) continue;
    std::vector<double> p0s, p1s;
    for (const auto& it : items) (it.answerable ? p1s : p0s).push_back(it.answerable ? it.p1 : it.p0);
    const double q0 = p0s.empty() ? kInf : quantile_oracle(p0s, a0);
    const double q1 = p1s.empty() ? kInf : quantile_oracle(p1s, a1);
    std::vector<double> kept;
    for (const auto& it : items) {
      if (it.answerable && it.p1 < q1) kept.push_back(it.nonconformity);
    }
    const double qt = kept.empty() ? kInf : quantile_oracle(kept, alpha);
    double total = 0.0;
    for (const auto& it : items) total += static_cast<double>(size_oracle(it, q0, q1, qt));
    const double size = total / static_cast<double>(items.size());
    if (step == g) best.baseline = size;
    if (size < best.size || (size == best.size && a0 > best.alpha0)) {
      best.size = size;
      best.alpha0 = a0;
    }
  }
  return best;
}

// 30% unanswerable with p0 near 1; answerable p1 spread without atoms.
std::vector<ScoredCalibrationItem> rejection_friendly_items(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredCalibrationItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    if (u(rng) < 0.3) {
      items.push_back(item(false, 0.9 + 0.1 * u(rng), 1.0, {0.6 + 0.4 * u(rng), 0.7 + 0.3 * u(rng), 0.9}));
    } else {
      const double p1 = 0.2 + 0.8 * u(rng);
      const double s = (1.0 - p1) * u(rng);
      items.push_back(item(true, 1.0 - p1, s, {s, s + 0.3 * u(rng) + 0.2}));
    }
  }
  return items;
}

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, bool ties) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> k(0, 4);
  std::vector<double> s(n);
  for (auto& x : s) x = ties ? k(rng) / 4.0 : u(rng);
  return s;
}

}  // namespace

TEST(Quantile, Examples) {
  const std::vector<double> a{0.1, 0.2, 0.3, 0.4}, b{0.5}, c{1, 2, 3};
  EXPECT_EQ(conformal_quantile(a, 0.25), 0.4);
  EXPECT_EQ(conformal_quantile(b, 0.1), kInf);
  EXPECT_EQ(conformal_quantile(c, 0.5), 2.0);
  EXPECT_EQ(conformal_quantile(c, 1.0), -kInf);
  EXPECT_THROW(conformal_quantile(std::vector<double>{}, 0.1), DataError);
  EXPECT_THROW(conformal_quantile(c, 1.5), ConfigError);
}

TEST(Quantile, IntegerLevelsDoNotRoundUp) {
  // (9 + 1) * 0.9 = 9 exactly in reals, 9.000000000000002 in doubles.
  std::vector<double> s{1, 2, 3, 4, 5, 6, 7, 8, 9};
  EXPECT_EQ(conformal_quantile(s, 0.1), 9.0);
  s.push_back(10);
  EXPECT_EQ(conformal_quantile(s, 0.1), 10.0);
  s.pop_back();
  EXPECT_EQ(conformal_quantile(s, 0.05), kInf);
}

TEST(Quantile, MatchesOrderStatisticOracle) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(0.0, 1.0);
  for (int t = 0; t < 3000; ++t) {
    const auto s = random_scores(rng, 1 + t % 40, t % 2 == 0);
    const double alpha = t % 5 == 0 ? 0.1 : a(rng);
    ASSERT_EQ(conformal_quantile(s, alpha), quantile_oracle(s, alpha)) << t;
  }
}

TEST(Quantile, NonIncreasingInAlpha) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 300; ++t) {
    const auto s = random_scores(rng, 1 + t % 30, t % 3 == 0);
    double prev = kInf;
    for (int i = 0; i <= 100; ++i) {
      const double q = conformal_quantile(s, i / 100.0);
      ASSERT_LE(q, prev);
      prev = q;
    }
  }
}

TEST(WeightedQuantile, Examples) {
  const std::vector<double> s{1, 2}, w{3, 1};
  EXPECT_EQ(weighted_quantile(s, w, 0.3), kInf);
  const std::vector<double> nine{1, 2, 3, 4, 5, 6, 7, 8, 9}, ones(9, 1.0);
  EXPECT_EQ(weighted_quantile(nine, ones, 0.2), 8.0);
  EXPECT_THROW(weighted_quantile(s, std::vector<double>{1.0, 0.0}, 0.3), DataError);
  EXPECT_THROW(weighted_quantile(s, std::vector<double>{1.0}, 0.3), DataError);
}

TEST(WeightedQuantile, UniformWeightsReduceExactly) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> a(0.0, 1.0), w(0.1, 5.0);
  for (int t = 0; t < 5000; ++t) {
    const auto s = random_scores(rng, 1 + t % 8, t % 2 == 1);
    const double alpha = a(rng);
    const std::vector<double> weights(s.size(), w(rng));
    ASSERT_EQ(weighted_quantile(s, weights, alpha), conformal_quantile(s, alpha)) << t;
  }
}

TEST(WeightedQuantile, MatchesMassOracle) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> a(0.0, 0.6), w(0.05, 3.0);
  for (int t = 0; t < 3000; ++t) {
    const auto s = random_scores(rng, 1 + t % 25, t % 2 == 0);
    std::vector<double> weights(s.size());
    for (auto& x : weights) x = w(rng);
    const double alpha = a(rng);
    ASSERT_EQ(weighted_quantile(s, weights, alpha), weighted_oracle(s, weights, alpha)) << t;
  }
}

TEST(Alpha1, Examples) {
  EXPECT_NEAR(alpha1_from_alpha0(0.1, 0.05, 0.8), 0.01 / 0.72, 1e-15);
  EXPECT_NEAR(alpha1_from_alpha0(0.1, 0.05, 0.8), 0.013889, 1e-6);
  EXPECT_NEAR(alpha1_from_alpha0(0.2, 0.0, 0.5), 0.25, 1e-15);
  for (double r : {0.01, 0.3, 0.5, 0.99, 1.0}) EXPECT_EQ(alpha1_from_alpha0(0.1, 0.1, r), 0.0);
  EXPECT_THROW(alpha1_from_alpha0(0.1, 0.05, 0.0), DataError);
  EXPECT_THROW(alpha1_from_alpha0(0.1, 0.2, 0.5), ConfigError);
}

TEST(RejectQuantiles, Examples) {
  std::vector<ScoredCalibrationItem> unans(100, item(false, 1.0, 1.0, {0.9}));
  EXPECT_EQ(reject_quantiles(unans, 0.1, 0.0, false).first, 1.0);

  std::vector<ScoredCalibrationItem> ans;
  for (int i = 1; i <= 10; ++i) ans.push_back(item(true, 1.0 - i / 10.0, 0.1, {0.1}));
  const auto [q0, q1] = reject_quantiles(ans, 0.1, 0.2, false);
  EXPECT_EQ(q0, kInf);
  EXPECT_NEAR(q1, 0.9, 1e-15);
  EXPECT_EQ(q1, ans[8].p1);
}

TEST(AnswerQuantile, Examples) {
  std::vector<ScoredCalibrationItem> items;
  for (double s : {0.2, 0.4, 0.6, 0.8}) items.push_back(item(true, 0.1, s, {s}));
  items.push_back(item(false, 0.9, 1.0, {0.5}));
  EXPECT_EQ(answer_quantile(items, kInf, 0.25, false), 0.8);
  const std::vector<double> plain{0.2, 0.4, 0.6, 0.8};
  EXPECT_EQ(answer_quantile(items, kInf, 0.25, false), conformal_quantile(plain, 0.25));
  EXPECT_EQ(answer_quantile(items, 0.5, 0.25, false), kInf);
}

TEST(GridSearch, AllAnswerableDegeneratesToBaseline) {
  std::vector<ScoredCalibrationItem> items;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double s = u(rng);
    items.push_back(item(true, u(rng), s, {s, u(rng)}));
  }
  const auto g = grid_search(items, 0.1, 20, false);
  EXPECT_EQ(g.quantiles.alpha0, 0.1);
  EXPECT_EQ(g.quantiles.alpha1, 0.0);
  EXPECT_EQ(g.mean_size, g.baseline_mean_size);
  EXPECT_EQ(g.quantiles.q0, kInf);
  for (const auto& p : g.evaluated) EXPECT_EQ(p.alpha1, 0.0);
}

TEST(GridSearch, RejectionImprovesOnBaseline) {
  const auto items = rejection_friendly_items(600, 7);
  const auto g = grid_search(items, 0.1, 20, false);
  const auto oracle = grid_oracle(items, 0.1, 20);
  EXPECT_LT(g.quantiles.alpha0, 0.1);
  EXPECT_LT(g.mean_size, g.baseline_mean_size);
  EXPECT_NEAR(g.mean_size, oracle.size, 1e-12);
  EXPECT_NEAR(g.baseline_mean_size, oracle.baseline, 1e-12);
  EXPECT_NEAR(g.quantiles.alpha0, oracle.alpha0, 1e-15);
  EXPECT_EQ(g.evaluated.size(), 21u);
}

TEST(GridSearch, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    std::vector<ScoredCalibrationItem> items;
    const double rate = 0.3 + 0.6 * u(rng);
    const std::size_t n = 20 + static_cast<std::size_t>(t) * 7;
    for (std::size_t i = 0; i < n; ++i) {
      const double ne = std::round(u(rng) * 8.0) / 8.0;
      const bool ans = u(rng) < rate;
      const double s = ans ? std::round(u(rng) * 10.0) / 10.0 : 1.0;
      items.push_back(item(ans, ne, s, {s, std::round(u(rng) * 10.0) / 10.0}));
    }
    const double alpha = t % 2 ? 0.1 : 0.2;
    const std::size_t g = 5 + static_cast<std::size_t>(t) % 16;
    const auto res = grid_search(items, alpha, g, false);
    const auto oracle = grid_oracle(items, alpha, g);
    ASSERT_NEAR(res.mean_size, oracle.size, 1e-12) << t;
    ASSERT_NEAR(res.baseline_mean_size, oracle.baseline, 1e-12) << t;
    ASSERT_NEAR(res.quantiles.alpha0, oracle.alpha0, 1e-15) << t;
    ASSERT_LE(res.mean_size, res.baseline_mean_size);
  }
}

TEST(GridSearch, WeightedObjectiveIsWeightedMean) {
  std::vector<ScoredCalibrationItem> items{item(true, 0.0, 0.1, {0.1, 0.5}, 3.0), item(true, 0.5, 0.4, {0.4}, 1.0),
                                           item(false, 0.9, 1.0, {0.2, 0.3, 0.6}, 2.0)};
  ConformalQuantiles q;
  q.q0 = 0.95;
  q.q1 = kInf;
  q.q_text = 0.45;
  // sizes: 1 + 1, 1 + 1, 1 + 2
  EXPECT_NEAR(mean_set_size(items, q, CalibrationMode::ar, true), (3.0 * 2 + 1.0 * 2 + 2.0 * 3) / 6.0, 1e-15);
  EXPECT_NEAR(mean_set_size(items, q, CalibrationMode::ar, false), 7.0 / 3.0, 1e-15);
  EXPECT_NEAR(answerable_rate(items, true), 4.0 / 6.0, 1e-15);
}

TEST(Calibrate, ModesOnSyntheticData) {
  auto specs = orthogonal_domains(1, 2, 0.1);
  specs[0].answerable_rate = 0.7;
  specs[0].m = 10;
  const auto gen = generate_dataset(specs, {400}, 11);
  CalibrationConfig cfg;
  cfg.alpha = 0.1;

  cfg.mode = CalibrationMode::bad;
  const auto bad = calibrate(gen.dataset, cfg, {});
  EXPECT_EQ(bad.quantiles.q0, kInf);
  EXPECT_EQ(bad.quantiles.q1, kInf);
  EXPECT_TRUE(std::isfinite(bad.quantiles.q_text));
  std::vector<double> all;
  for (const auto& it : score_calibration(gen.dataset, cfg)) all.push_back(it.nonconformity);
  EXPECT_EQ(bad.quantiles.q_text, quantile_oracle(all, 0.1));

  cfg.mode = CalibrationMode::basic;
  const auto basic = calibrate(gen.dataset, cfg, {});
  EXPECT_EQ(basic.quantiles.q_text, bad.quantiles.q_text);
  EXPECT_TRUE(std::isfinite(basic.quantiles.q0));
  EXPECT_EQ(basic.quantiles.q1, kInf);

  cfg.mode = CalibrationMode::ar;
  const auto ar = calibrate(gen.dataset, cfg, {});
  EXPECT_LE(ar.calibration_mean_size, ar.baseline_mean_size);
  EXPECT_EQ(ar.n_calibration, 400u);
  EXPECT_NEAR(ar.quantiles.answerable_rate, static_cast<double>(ar.n_answerable) / 400.0, 1e-15);

  const auto again = calibrate(gen.dataset, cfg, {});
  EXPECT_EQ(again, ar);
  EXPECT_EQ(artifact_to_json(again), artifact_to_json(ar));
}

TEST(Calibrate, AllAnswerableArMatchesBasicBehaviour) {
  auto specs = orthogonal_domains(1, 2, 0.1);
  specs[0].answerable_rate = 1.0;
  const auto gen = generate_dataset(specs, {300}, 12);
  CalibrationConfig cfg;
  cfg.mode = CalibrationMode::ar;
  const auto ar = calibrate(gen.dataset, cfg, {});
  cfg.mode = CalibrationMode::basic;
  const auto basic = calibrate(gen.dataset, cfg, {});
  EXPECT_EQ(ar.quantiles.q0, kInf);
  EXPECT_EQ(basic.quantiles.q0, kInf);
  EXPECT_EQ(ar.quantiles.q_text, basic.quantiles.q_text);
  EXPECT_EQ(ar.calibration_mean_size, basic.calibration_mean_size);
}

TEST(Calibrate, ResampleAndReweight) {
  const auto specs = orthogonal_domains(2, 3, 0.1);
  const auto gen = generate_dataset(specs, {100, 100}, 13);
  const auto items = score_calibration(gen.dataset, CalibrationConfig{});

  BalancePlan resample;
  resample.strategy = BalanceStrategy::resample;
  resample.resample_ids = {items[0].id, items[0].id, items[5].id};
  const auto drawn = balance_items(items, resample);
  ASSERT_EQ(drawn.size(), 3u);
  std::set<std::string> ids;
  for (const auto& d : drawn) ids.insert(d.id);
  EXPECT_EQ(ids.size(), 3u);
  EXPECT_EQ(drawn[1].nonconformity, items[0].nonconformity);

  BalancePlan bogus = resample;
  bogus.resample_ids = {"missing"};
  EXPECT_THROW(balance_items(items, bogus), DataError);

  BalancePlan reweight;
  reweight.strategy = BalanceStrategy::reweight;
  for (const auto& it : items) reweight.weights[it.id] = it.domain == "d1" ? 2.0 : 0.5;
  const auto weighted = balance_items(items, reweight);
  for (std::size_t i = 0; i < items.size(); ++i) EXPECT_EQ(weighted[i].weight, items[i].domain == "d1" ? 2.0 : 0.5);
}

TEST(Calibrate, UnitWeightsEqualUnweighted) {
  const auto specs = orthogonal_domains(2, 3, 0.1);
  const auto gen = generate_dataset(specs, {150, 150}, 14);
  CalibrationConfig cfg;
  cfg.mode = CalibrationMode::bad;
  BalancePlan plan;
  plan.strategy = BalanceStrategy::reweight;
  for (const auto& r : gen.dataset.records()) plan.weights[r.id] = 1.0;
  const auto w = calibrate(gen.dataset, cfg, plan);
  const auto u = calibrate(gen.dataset, cfg, {});
  EXPECT_EQ(w.quantiles, u.quantiles);
}

TEST(Artifact, JsonRoundTripIsExact) {
  CalibrationArtifact a;
  a.config.mode = CalibrationMode::ar;
  a.config.alpha = 0.1;
  a.config.match_mode = MatchMode::regex;
  a.quantiles = {0.1, 0.035, 1.0 / 3.0, 0.123456789012345678, kInf, -kInf, 0.8};
  a.balance.strategy = BalanceStrategy::reweight;
  a.balance.weight_formula = WeightFormula::paper_literal;
  a.balance.calibration_size = 7;
  a.balance.target_shares = {{"a", 0.25}, {"b", 0.75}};
  a.balance.domain_weights = {{"a", 0.5}, {"b", 1.5}};
  a.m = 20;
  a.n_calibration = 7;
  a.n_answerable = 5;
  a.calibration_mean_size = 2.0 / 7.0;
  a.baseline_mean_size = 0.1 + 0.2;
  const auto back = artifact_from_json(artifact_to_json(a));
  EXPECT_EQ(back, a);
}

TEST(Artifact, RejectsMalformedDocuments) {
  EXPECT_THROW(artifact_from_json("{"), DataError);
  EXPECT_THROW(artifact_from_json(R"({"version":"other"})"), DataError);
  auto text = artifact_to_json(CalibrationArtifact{});
  const auto pos = text.find("shiftcp-artifact/1");
  text.replace(pos, 18, "shiftcp-artifact/9");
  EXPECT_THROW(artifact_from_json(text), DataError);
}

TEST(Calibrate, ConfigValidation) {
  CalibrationConfig c;
  c.alpha = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.alpha = 0.1;
  c.cluster_threshold = 0.0;
  EXPECT_THROW(validate(c), ConfigError);
  c.cluster_threshold = 1.0;
  c.grid_points = 1;
  EXPECT_THROW(validate(c), ConfigError);
  EXPECT_EQ(parse_calibration_mode(to_string(CalibrationMode::basic)), CalibrationMode::basic);
}
