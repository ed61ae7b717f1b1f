#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "shiftcp/errors.hpp"
#include "shiftcp/synthetic.hpp"

using namespace shiftcp;

TEST(Synthetic, IntendedClustersAreRecovered) {
  auto specs = orthogonal_domains(3, 4, 0.2);
  specs[0].difficulty = 0.9;
  specs[1].answerable_rate = 0.4;
  specs[2].m = 10;
  for (auto& s : specs) s.m = 12;
  const auto gen = generate_dataset(specs, {150, 150, 150}, 51);
  ASSERT_EQ(gen.dataset.size(), 450u);
  for (std::size_t i = 0; i < gen.dataset.size(); ++i) {
    const auto& rec = gen.dataset[i];
    const auto c = cluster_answers(rec.samples);
    ASSERT_EQ(c.sizes(), gen.intended_sizes[i]) << rec.id;
    const auto label = answerability(c, rec.samples, rec.ground_truths);
    ASSERT_EQ(label.answerable, gen.answerable[i]) << rec.id;
  }
  EXPECT_EQ(gen.true_counts, (std::vector<double>{150, 150, 150}));
}

TEST(Synthetic, EasyLimitGivesCertainAnswers) {
  auto specs = orthogonal_domains(1, 2, 0.1);
  specs[0].difficulty = 0.0;
  const auto gen = generate_dataset(specs, {100}, 52);
  for (const auto& rec : gen.dataset.records()) {
    const auto c = cluster_answers(rec.samples);
    ASSERT_EQ(c.clusters.size(), 1u);
    EXPECT_EQ(c.ne, 0.0);
    EXPECT_TRUE(answerability(c, rec.samples, rec.ground_truths).answerable);
  }
}

TEST(Synthetic, ZeroAnswerableRate) {
  auto specs = orthogonal_domains(1, 2, 0.1);
  specs[0].answerable_rate = 0.0;
  const auto gen = generate_dataset(specs, {100}, 53);
  for (const auto& rec : gen.dataset.records()) {
    EXPECT_FALSE(answerability(cluster_answers(rec.samples), rec.samples, rec.ground_truths).answerable);
  }
}

TEST(Synthetic, SeparableDomainsGiveIdentityTransition) {
  const auto specs = orthogonal_domains(2, 3, 0.01);
  const auto split = generate_dataset(specs, {200, 200}, 54, "s", DatasetRole::cluster_split);
  const auto cal = generate_dataset(specs, {200, 200}, 55, "c");
  const auto t = estimate_transition(cal.dataset, compute_centroids(split.dataset));
  EXPECT_EQ(t.p[0][0], 1.0);
  EXPECT_EQ(t.p[1][1], 1.0);
}

TEST(Synthetic, ConfusablePresetMixesDomains) {
  const auto specs = confusable_domains(3, 4, 0.3, 0.8);
  const auto split = generate_dataset(specs, {300, 300, 300}, 56, "s", DatasetRole::cluster_split);
  const auto cal = generate_dataset(specs, {300, 300, 300}, 57, "c");
  const auto t = estimate_transition(cal.dataset, compute_centroids(split.dataset));
  EXPECT_LT(t.p[0][0], 0.95);
  EXPECT_GT(t.p[0][1], 0.05);
  EXPECT_GT(t.p[2][2], 0.9);
}

TEST(Synthetic, RejectsBadSpecs) {
  auto specs = orthogonal_domains(2, 2, 0.1);
  EXPECT_THROW(generate_dataset(specs, {10}, 1), ConfigError);
  specs[1].m = 5;
  EXPECT_THROW(generate_dataset(specs, {10, 10}, 1), ConfigError);
  specs[1].m = specs[0].m;
  specs[0].spread = 0.0;
  EXPECT_THROW(generate_dataset(specs, {10, 10}, 1), ConfigError);
  EXPECT_THROW(orthogonal_domains(3, 2, 0.1), ConfigError);
}

namespace {

ScenarioConfig small_scenario() {
  ScenarioConfig s;
  s.domains = orthogonal_domains(2, 3, 0.1);
  for (auto& d : s.domains) d.answerable_rate = 0.8;
  s.domains[1].difficulty = 0.8;
  s.calibration_mix = {150, 150};
  s.test_mix = {200, 100};
  s.alphas = {0.1, 0.2};
  s.modes = {CalibrationMode::bad, CalibrationMode::ar};
  s.balances = {BalanceStrategy::none, BalanceStrategy::reweight};
  s.trials = 4;
  s.seed = 99;
  return s;
}

std::string csv_of(const TrialStats& stats) {
  std::ostringstream out;
  write_trial_stats_csv(out, stats);
  return out.str();
}

}  // namespace

TEST(Scenario, DeterministicAndScheduleIndependent) {
  auto s = small_scenario();
  const auto a = run_trials(s);
  const auto b = run_trials(s);
  s.workers = 3;
  const auto c = run_trials(s);
  EXPECT_EQ(csv_of(a), csv_of(b));
  EXPECT_EQ(csv_of(a), csv_of(c));
  ASSERT_EQ(a.rows.size(), 8u);
  EXPECT_EQ(a.rows[0].balance, BalanceStrategy::none);
  EXPECT_EQ(a.rows[0].alpha, 0.1);
  EXPECT_EQ(a.rows[0].mode, CalibrationMode::bad);
  EXPECT_EQ(a.rows[1].mode, CalibrationMode::ar);
  EXPECT_EQ(a.rows[2].alpha, 0.2);
  EXPECT_EQ(a.rows[4].balance, BalanceStrategy::reweight);
  for (const auto& r : a.rows) {
    EXPECT_EQ(r.dominance_violations, 0u);
    EXPECT_LE(r.mean_calibration_size, r.mean_baseline_size + 1e-12);
    EXPECT_GE(r.mean_coverage, 0.0);
    EXPECT_LE(r.mean_coverage, 1.0);
    EXPECT_GE(r.coverage_se, 0.0);
  }
  s.seed = 100;
  EXPECT_NE(csv_of(run_trials(s)), csv_of(a));
  EXPECT_NE(a.find(0.2, CalibrationMode::ar, BalanceStrategy::reweight), nullptr);
  EXPECT_EQ(a.find(0.3, CalibrationMode::ar, BalanceStrategy::reweight), nullptr);
}

TEST(Scenario, JsonConfig) {
  const auto s = scenario_from_json(R"({
    "domains": [
      {"id": "easy", "centroid_mean": [1, 0], "difficulty": 0.2, "m": 12},
      {"id": "hard", "centroid_mean": [0, 1], "difficulty": 0.9, "m": 12, "answerable_rate": 0.6}
    ],
    "calibration_mix": [100, 100],
    "test_mix": [150, 50],
    "alphas": [0.1, 0.2],
    "modes": ["bad", "ar"],
    "balances": ["none", "resample"],
    "trials": 3,
    "seed": 5,
    "weight_formula": "paper-literal",
    "score_mode": "frequency"
  })");
  ASSERT_EQ(s.domains.size(), 2u);
  EXPECT_EQ(s.domains[1].answerable_rate, 0.6);
  EXPECT_EQ(s.domains[0].m, 12u);
  EXPECT_EQ(s.modes, (std::vector<CalibrationMode>{CalibrationMode::bad, CalibrationMode::ar}));
  EXPECT_EQ(s.balances[1], BalanceStrategy::resample);
  EXPECT_EQ(s.weight_formula, WeightFormula::paper_literal);
  EXPECT_EQ(s.score_mode, ScoreMode::frequency);
  EXPECT_EQ(s.trials, 3u);
  EXPECT_THROW(scenario_from_json(R"({"domains": []})"), Error);
  EXPECT_THROW(scenario_from_json("{"), ConfigError);
  EXPECT_THROW(scenario_from_json(R"({"domains":[{"id":"a","centroid_mean":[1,0]}],"calibration_mix":[10],)"
                                  R"("test_mix":[10],"modes":["worst"]})"),
               ConfigError);
}

TEST(Scenario, ValidateRejectsInconsistentMixes) {
  auto s = small_scenario();
  s.test_mix = {100};
  EXPECT_THROW(validate(s), ConfigError);
  s = small_scenario();
  s.trials = 0;
  EXPECT_THROW(validate(s), ConfigError);
  s = small_scenario();
  s.alphas = {1.0};
  EXPECT_THROW(validate(s), ConfigError);
}
