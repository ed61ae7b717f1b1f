#include "shiftcp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "shiftcp/errors.hpp"
#include "shiftcp/evaluation.hpp"
#include "shiftcp/parallel.hpp"
#include "shiftcp/prediction.hpp"
#include "shiftcp/random.hpp"

namespace shiftcp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t trial, std::uint64_t role) {
  return splitmix64(splitmix64(seed ^ splitmix64(trial)) + role);
}

// Token block for cluster `c` of question `q`; blocks of different clusters
// share no tokens, so Rouge-L between them is 0.
std::string cluster_text(std::size_t q, std::size_t c) {
  const std::string stem = "x" + std::to_string(q) + "k" + std::to_string(c);
  return stem + "a " + stem + "b " + stem + "c";
}

}  // namespace

void validate(const SyntheticDomainSpec& spec) {
  if (spec.id.empty()) throw ConfigError("synthetic domain needs an id");
  if (spec.centroid_mean.size() < 2) throw ConfigError("synthetic domain '" + spec.id + "': dimension must be >= 2");
  if (!(spec.spread > 0.0)) throw ConfigError("synthetic domain '" + spec.id + "': spread must be positive");
  if (!(spec.answerable_rate >= 0.0 && spec.answerable_rate <= 1.0)) {
    throw ConfigError("synthetic domain '" + spec.id + "': answerable_rate must lie in [0, 1]");
  }
  if (!(spec.difficulty >= 0.0 && spec.difficulty <= 1.0)) {
    throw ConfigError("synthetic domain '" + spec.id + "': difficulty must lie in [0, 1]");
  }
  if (spec.m < 2) throw ConfigError("synthetic domain '" + spec.id + "': M must be >= 2");
}

GeneratedDataset generate_dataset(const std::vector<SyntheticDomainSpec>& specs, const std::vector<std::size_t>& mix,
                                  std::uint64_t seed, const std::string& prefix, DatasetRole role) {
  if (specs.empty()) throw ConfigError("generate_dataset: no domain specs");
  if (mix.size() != specs.size()) throw ConfigError("generate_dataset: mix length differs from domain count");
  for (const auto& s : specs) {
    validate(s);
    if (s.m != specs.front().m) throw ConfigError("generate_dataset: all domains must share M");
    if (s.centroid_mean.size() != specs.front().centroid_mean.size()) {
      throw ConfigError("generate_dataset: all domains must share the embedding dimension");
    }
  }

  auto rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Draft {
    QuestionRecord record;
    std::vector<std::size_t> sizes;
    bool answerable;
  };
  std::vector<Draft> drafts;
  drafts.reserve(std::accumulate(mix.begin(), mix.end(), std::size_t{0}));

  GeneratedDataset out;
  out.true_counts.assign(specs.size(), 0.0);
  std::size_t q = 0;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& spec = specs[k];
    const std::size_t m = spec.m;
    const std::size_t max_slots = spec.max_distractors == 0 ? m : spec.max_distractors;
    out.true_counts[k] = static_cast<double>(mix[k]);
    for (std::size_t n = 0; n < mix[k]; ++n, ++q) {
      Draft d;
      auto& rec = d.record;
      rec.id = prefix + "-" + spec.id + "-" + std::to_string(n);
      rec.question = "synthetic question " + std::to_string(n) + " from domain " + spec.id;
      rec.domain = spec.id;

      std::vector<double> emb(spec.centroid_mean);
      for (double& x : emb) x += spec.spread * noise(rng);
      rec.embedding = std::move(emb);

      d.answerable = unit(rng) < spec.answerable_rate;
      // labels[i] is the cluster of sample i; cluster 0 is the ground truth
      // when the question is answerable.
      std::vector<std::size_t> labels;
      labels.reserve(m);
      std::size_t truth = 0;
      if (d.answerable) {
        const double p = 1.0 - spec.difficulty * unit(rng);
        std::binomial_distribution<std::size_t> extra(m - 1, p);
        truth = 1 + extra(rng);
        labels.assign(truth, 0);
      }
      const std::size_t rest = m - truth;
      if (rest > 0) {
        std::uniform_int_distribution<std::size_t> slots_dist(1, max_slots);
        const std::size_t slots = slots_dist(rng);
        std::uniform_int_distribution<std::size_t> slot(1, slots);
        for (std::size_t i = 0; i < rest; ++i) labels.push_back(slot(rng));
      }
      std::shuffle(labels.begin(), labels.end(), rng);

      std::vector<std::size_t> first_seen;
      std::vector<std::size_t> sizes;
      for (auto l : labels) {
        auto it = std::find(first_seen.begin(), first_seen.end(), l);
        if (it == first_seen.end()) {
          first_seen.push_back(l);
          sizes.push_back(1);
        } else {
          ++sizes[static_cast<std::size_t>(it - first_seen.begin())];
        }
        rec.samples.push_back(cluster_text(q, l));
      }
      d.sizes = std::move(sizes);
      rec.ground_truths.push_back(d.answerable ? cluster_text(q, 0) : "x" + std::to_string(q) + "gold");
      drafts.push_back(std::move(d));
    }
  }
  std::shuffle(drafts.begin(), drafts.end(), rng);

  std::vector<QuestionRecord> records;
  records.reserve(drafts.size());
  for (auto& d : drafts) {
    records.push_back(std::move(d.record));
    out.intended_sizes.push_back(std::move(d.sizes));
    out.answerable.push_back(d.answerable);
  }
  out.dataset = Dataset(std::move(records), role);
  return out;
}

void validate(const ScenarioConfig& s) {
  if (s.domains.empty()) throw ConfigError("scenario: no domains");
  for (const auto& d : s.domains) validate(d);
  const std::size_t k = s.domains.size();
  auto check_mix = [k](const std::vector<std::size_t>& mix, const char* name, bool allow_empty) {
    if (allow_empty && mix.empty()) return;
    if (mix.size() != k) throw ConfigError(std::string("scenario: ") + name + " must have one count per domain");
    if (std::accumulate(mix.begin(), mix.end(), std::size_t{0}) == 0) {
      throw ConfigError(std::string("scenario: ") + name + " is empty");
    }
  };
  check_mix(s.cluster_mix, "cluster_mix", true);
  check_mix(s.calibration_mix, "calibration_mix", false);
  check_mix(s.test_mix, "test_mix", false);
  if (s.trials < 1) throw ConfigError("scenario: trials must be >= 1");
  if (s.alphas.empty() || s.modes.empty() || s.balances.empty()) {
    throw ConfigError("scenario: alphas, modes and balances must be non-empty");
  }
  for (double a : s.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("scenario: alpha must lie in (0, 1)");
  }
}

ScenarioConfig scenario_from_json(std::string_view text) {
  using nlohmann::json;
  ScenarioConfig s;
  try {
    const auto j = json::parse(text);
    for (const auto& d : j.at("domains")) {
      SyntheticDomainSpec spec;
      spec.id = d.at("id").get<std::string>();
      spec.centroid_mean = d.at("centroid_mean").get<std::vector<double>>();
      spec.spread = d.value("spread", spec.spread);
      spec.answerable_rate = d.value("answerable_rate", spec.answerable_rate);
      spec.difficulty = d.value("difficulty", spec.difficulty);
      spec.m = d.value("m", spec.m);
      spec.max_distractors = d.value("max_distractors", spec.max_distractors);
      s.domains.push_back(std::move(spec));
    }
    s.cluster_mix = j.value("cluster_mix", s.cluster_mix);
    s.calibration_mix = j.at("calibration_mix").get<std::vector<std::size_t>>();
    s.test_mix = j.at("test_mix").get<std::vector<std::size_t>>();
    s.alphas = j.value("alphas", s.alphas);
    if (auto it = j.find("modes"); it != j.end()) {
      s.modes.clear();
      for (const auto& m : *it) s.modes.push_back(parse_calibration_mode(m.get<std::string>()));
    }
    if (auto it = j.find("balances"); it != j.end()) {
      s.balances.clear();
      for (const auto& b : *it) s.balances.push_back(parse_balance_strategy(b.get<std::string>()));
    }
    s.trials = j.value("trials", s.trials);
    s.seed = j.value("seed", s.seed);
    s.resample_target = j.value("resample_target", s.resample_target);
    if (auto it = j.find("weight_formula"); it != j.end()) s.weight_formula = parse_weight_formula(it->get<std::string>());
    s.cluster_threshold = j.value("cluster_threshold", s.cluster_threshold);
    if (auto it = j.find("score_mode"); it != j.end()) s.score_mode = parse_score_mode(it->get<std::string>());
    s.no_match_score = j.value("no_match_score", s.no_match_score);
    s.grid_points = j.value("grid_points", s.grid_points);
    s.workers = j.value("workers", s.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  validate(s);
  return s;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open scenario '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

const TrialStatRow* TrialStats::find(double alpha, CalibrationMode mode, BalanceStrategy balance) const {
  for (const auto& r : rows) {
    if (r.alpha == alpha && r.mode == mode && r.balance == balance) return &r;
  }
  return nullptr;
}

namespace {

struct RunResult {
  double coverage = 0.0;
  double efficiency = 0.0;
  std::optional<double> unanswerable_efficiency;
  double rejection_rate = 0.0;
  double calibration_size = 0.0;
  double baseline_size = 0.0;
  bool dominance_violated = false;
};

struct TrialResult {
  std::vector<RunResult> runs;      // (balance, alpha, mode) order
  std::vector<double> delta;        // per spec domain, NaN when the domain is absent from test
  double assignment_accuracy = 0.0;
};

TrialResult run_one_trial(const ScenarioConfig& s, std::size_t trial) {
  const auto& cluster_mix = s.cluster_mix.empty() ? s.calibration_mix : s.cluster_mix;
  const auto cluster = generate_dataset(s.domains, cluster_mix, derive_seed(s.seed, trial, 1), "k",
                                        DatasetRole::cluster_split);
  const auto cal = generate_dataset(s.domains, s.calibration_mix, derive_seed(s.seed, trial, 2), "c",
                                    DatasetRole::calibration);
  const auto test = generate_dataset(s.domains, s.test_mix, derive_seed(s.seed, trial, 3), "t", DatasetRole::test);

  TrialResult tr;
  const auto centroids = compute_centroids(cluster.dataset);
  const auto transition = estimate_transition(cal.dataset, centroids);
  const auto observed = count_test_clusters(test.dataset, centroids);
  const auto estimate = invert_counts(transition, observed);

  std::size_t hits = 0;
  for (const auto& r : test.dataset.records()) {
    if (assign_domain(*r.embedding, centroids) == *r.domain) ++hits;
  }
  tr.assignment_accuracy = test.dataset.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(test.dataset.size());

  tr.delta.assign(s.domains.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < s.domains.size(); ++k) {
    const double truth = test.true_counts[k];
    if (!(truth > 0.0)) continue;
    auto it = std::find(estimate.domains.begin(), estimate.domains.end(), s.domains[k].id);
    const double est = estimate.estimated[static_cast<std::size_t>(it - estimate.domains.begin())];
    tr.delta[k] = std::abs(truth - est) / truth;
  }

  CalibrationConfig base;
  base.cluster_threshold = s.cluster_threshold;
  base.score_mode = s.score_mode;
  base.no_match_score = s.no_match_score;
  base.grid_points = s.grid_points;
  base.seed = derive_seed(s.seed, trial, 4);
  const auto scored = score_calibration(cal.dataset, base);

  const auto& test_records = test.dataset.records();
  std::vector<ClusteredAnswers> clustered;
  std::vector<AnswerabilityLabel> labels;
  clustered.reserve(test_records.size());
  labels.reserve(test_records.size());
  for (const auto& r : test_records) {
    clustered.push_back(cluster_answers(r.samples, s.cluster_threshold));
    labels.push_back(answerability(clustered.back(), r.samples, r.ground_truths));
  }

  const std::size_t m = cal.dataset.samples_per_question();
  const std::size_t target = s.resample_target == 0 ? cal.dataset.size() : s.resample_target;
  for (auto balance : s.balances) {
    const auto plan = build_balance_plan(estimate, cal.dataset, balance, target, derive_seed(s.seed, trial, 5),
                                         s.weight_formula);
    const auto items = balance_items(scored, plan);
    const auto summary = summarize(plan, s.weight_formula);
    for (double alpha : s.alphas) {
      for (auto mode : s.modes) {
        auto config = base;
        config.alpha = alpha;
        config.mode = mode;
        RunResult rr;
        CalibrationArtifact art;
        try {
          art = calibrate_items(items, config, summary, m);
        } catch (const NumericalError&) {
          rr.dominance_violated = true;
          tr.runs.push_back(rr);
          continue;
        }
        rr.calibration_size = art.calibration_mean_size;
        rr.baseline_size = art.baseline_mean_size;
        std::vector<PredictionOutcome> outcomes;
        outcomes.reserve(test_records.size());
        for (std::size_t i = 0; i < test_records.size(); ++i) {
          outcomes.push_back(predict(clustered[i], art));
          outcomes.back().id = test_records[i].id;
        }
        const auto rep = evaluate_prepared(outcomes, test_records, clustered, labels);
        rr.coverage = rep.coverage;
        rr.efficiency = rep.efficiency;
        rr.unanswerable_efficiency = rep.unanswerable_efficiency;
        rr.rejection_rate = rep.rejection_rate;
        tr.runs.push_back(rr);
      }
    }
  }
  return tr;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double standard_error(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double mu = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

}  // namespace

TrialStats run_trials(const ScenarioConfig& scenario) {
  validate(scenario);
  std::vector<TrialResult> results(scenario.trials);
  parallel_for(scenario.trials, scenario.workers,
               [&](std::size_t t) { results[t] = run_one_trial(scenario, t); });

  TrialStats stats;
  for (const auto& d : scenario.domains) stats.domains.push_back(d.id);

  stats.mean_delta_per_domain.assign(scenario.domains.size(), 0.0);
  std::vector<double> trial_delta;
  for (std::size_t k = 0; k < scenario.domains.size(); ++k) {
    std::vector<double> v;
    for (const auto& r : results) {
      if (!std::isnan(r.delta[k])) v.push_back(r.delta[k]);
    }
    stats.mean_delta_per_domain[k] = v.empty() ? std::numeric_limits<double>::quiet_NaN() : mean_of(v);
  }
  for (const auto& r : results) {
    std::vector<double> v;
    for (double d : r.delta) {
      if (!std::isnan(d)) v.push_back(d);
    }
    trial_delta.push_back(mean_of(v));
    stats.mean_assignment_accuracy += r.assignment_accuracy;
  }
  stats.mean_delta = mean_of(trial_delta);
  stats.mean_assignment_accuracy /= static_cast<double>(results.size());

  std::size_t run = 0;
  for (auto balance : scenario.balances) {
    for (double alpha : scenario.alphas) {
      for (auto mode : scenario.modes) {
        TrialStatRow row;
        row.alpha = alpha;
        row.mode = mode;
        row.balance = balance;
        row.trials = results.size();
        row.mean_delta = stats.mean_delta;
        std::vector<double> cov, eff, unans, rej, cal, basel;
        for (const auto& r : results) {
          const auto& rr = r.runs[run];
          if (rr.dominance_violated) {
            ++row.dominance_violations;
            continue;
          }
          cov.push_back(rr.coverage);
          eff.push_back(rr.efficiency);
          rej.push_back(rr.rejection_rate);
          cal.push_back(rr.calibration_size);
          basel.push_back(rr.baseline_size);
          if (rr.unanswerable_efficiency) unans.push_back(*rr.unanswerable_efficiency);
        }
        row.mean_coverage = mean_of(cov);
        row.coverage_se = standard_error(cov);
        row.mean_efficiency = mean_of(eff);
        row.efficiency_se = standard_error(eff);
        if (!unans.empty()) row.mean_unanswerable_efficiency = mean_of(unans);
        row.mean_rejection_rate = mean_of(rej);
        row.mean_calibration_size = mean_of(cal);
        row.mean_baseline_size = mean_of(basel);
        stats.rows.push_back(row);
        ++run;
      }
    }
  }
  return stats;
}

void write_trial_stats_csv(std::ostream& out, const TrialStats& stats) {
  out << "alpha,mode,balance,trials,mean_coverage,coverage_se,mean_efficiency,efficiency_se,"
         "mean_unanswerable_efficiency,mean_rejection_rate,mean_delta,mean_calibration_size,mean_baseline_size,"
         "dominance_violations\n";
  out.precision(10);
  for (const auto& r : stats.rows) {
    out << r.alpha << ',' << to_string(r.mode) << ',' << to_string(r.balance) << ',' << r.trials << ','
        << r.mean_coverage << ',' << r.coverage_se << ',' << r.mean_efficiency << ',' << r.efficiency_se << ',';
    if (r.mean_unanswerable_efficiency) out << *r.mean_unanswerable_efficiency;
    out << ',' << r.mean_rejection_rate << ',' << r.mean_delta << ',' << r.mean_calibration_size << ','
        << r.mean_baseline_size << ',' << r.dominance_violations << '\n';
  }
}

std::vector<SyntheticDomainSpec> orthogonal_domains(std::size_t k, std::size_t d, double spread, double norm) {
  if (d < k || d < 2) throw ConfigError("orthogonal_domains: dimension must be >= max(K, 2)");
  std::vector<SyntheticDomainSpec> out;
  for (std::size_t i = 0; i < k; ++i) {
    SyntheticDomainSpec s;
    s.id = "d" + std::to_string(i + 1);
    s.centroid_mean.assign(d, 0.0);
    s.centroid_mean[i] = norm;
    s.spread = spread;
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SyntheticDomainSpec> confusable_domains(std::size_t k, std::size_t d, double spread, double overlap) {
  if (k < 2) throw ConfigError("confusable_domains: need at least two domains");
  if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("confusable_domains: overlap must lie in [0, 1)");
  auto out = orthogonal_domains(k, d, spread);
  auto& second = out[1].centroid_mean;
  second[0] = overlap;
  second[1] = std::sqrt(1.0 - overlap * overlap);
  return out;
}

}  // namespace shiftcp
