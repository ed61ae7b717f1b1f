#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shiftcp/calibration.hpp"
#include "shiftcp/csv.hpp"
#include "shiftcp/domains.hpp"
#include "shiftcp/errors.hpp"
#include "shiftcp/evaluation.hpp"
#include "shiftcp/prediction.hpp"
#include "shiftcp/records.hpp"
#include "shiftcp/run_config.hpp"
#include "shiftcp/synthetic.hpp"

namespace fs = std::filesystem;
using namespace shiftcp;

namespace {

struct Flags {
  std::string config_path;
  std::map<std::string, std::string> values;  // config key -> flag text
  std::vector<std::string> inputs;
};

std::string flag_name(std::string_view key) {
  std::string name = "--";
  for (char c : key) name += c == '_' ? '-' : c;
  return name;
}

const std::string& require_path(const std::string& path, std::string_view key) {
  if (path.empty()) throw ConfigError("missing required setting '" + std::string(key) + "' (" + flag_name(key) + ")");
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Writes to `path`, or stdout when empty.
template <typename Fn>
void write_output(const std::string& path, Fn&& fn) {
  if (path.empty()) {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  fn(out);
  if (!out) throw DataError("failed writing '" + path + "'");
}

std::string format_alpha(double alpha) {
  std::ostringstream s;
  s << alpha;
  return s.str();
}

// "out.json" with alpha 0.1 -> "out.alpha-0.1.json".
std::string artifact_path_for(const std::string& base, double alpha) {
  fs::path p(base);
  fs::path name = p.stem();
  name += ".alpha-" + format_alpha(alpha);
  name += p.extension();
  return (p.parent_path() / name).string();
}

DomainCountEstimate estimate_domains(const Dataset& cluster_split, const Dataset& calibration, const Dataset& test,
                                     std::vector<DomainCentroid>& centroids) {
  centroids = compute_centroids(cluster_split);
  const auto transition = estimate_transition(calibration, centroids);
  const auto observed = count_test_clusters(test, centroids);
  return invert_counts(transition, observed);
}

BalancePlan plan_for(const RunConfig& cfg, const Dataset& calibration, BalanceStrategy strategy) {
  if (strategy == BalanceStrategy::none) return {};
  const auto cluster_split = load_dataset(require_path(cfg.cluster_split_path, "cluster_split"), DatasetRole::cluster_split);
  const auto test = load_dataset(require_path(cfg.test_path, "test"), DatasetRole::test);
  std::vector<DomainCentroid> centroids;
  const auto estimate = estimate_domains(cluster_split, calibration, test, centroids);
  const std::size_t target = cfg.resample_target.value_or(calibration.size());
  return build_balance_plan(estimate, calibration, strategy, target, cfg.seed, cfg.weight_formula);
}

int cmd_validate(const RunConfig& cfg, const Flags& flags) {
  std::vector<std::pair<std::string, DatasetRole>> files;
  for (const auto& f : flags.inputs) files.emplace_back(f, DatasetRole::calibration);
  if (files.empty()) {
    if (!cfg.cluster_split_path.empty()) files.emplace_back(cfg.cluster_split_path, DatasetRole::cluster_split);
    if (!cfg.calibration_path.empty()) files.emplace_back(cfg.calibration_path, DatasetRole::calibration);
    if (!cfg.test_path.empty()) files.emplace_back(cfg.test_path, DatasetRole::test);
  }
  if (files.empty()) throw ConfigError("validate needs at least one dataset file");
  for (const auto& [path, role] : files) {
    const auto ds = load_dataset(path, role);
    std::size_t labelled = 0, embedded = 0;
    for (const auto& r : ds.records()) {
      labelled += r.domain.has_value();
      embedded += r.embedding.has_value();
    }
    std::cout << path << ": records=" << ds.size() << " m=" << ds.samples_per_question()
              << " d=" << (ds.embedding_dim() ? std::to_string(*ds.embedding_dim()) : std::string("-"))
              << " embedded=" << embedded << " labelled=" << labelled << '\n';
  }
  return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
  const auto calibration = load_dataset(require_path(cfg.calibration_path, "calibration"));
  const auto& artifact_base = require_path(cfg.artifact_path, "artifact");
  const auto plan = plan_for(cfg, calibration, cfg.balance);
  for (double alpha : cfg.alphas) {
    const auto artifact = calibrate(calibration, cfg.calibration_config(alpha), plan, cfg.weight_formula);
    const auto path = cfg.alphas.size() == 1 ? artifact_base : artifact_path_for(artifact_base, alpha);
    save_artifact(path, artifact);
    const auto& q = artifact.quantiles;
    std::cout << path << ": mode=" << to_string(artifact.mode()) << " alpha=" << q.alpha << " alpha0=" << q.alpha0
              << " alpha1=" << q.alpha1 << " q0=" << q.q0 << " q1=" << q.q1 << " q_text=" << q.q_text
              << " n=" << artifact.n_calibration << " mean_size=" << artifact.calibration_mean_size << '\n';
  }
  return 0;
}

int cmd_estimate_domains(const RunConfig& cfg) {
  const auto cluster_split =
      load_dataset(require_path(cfg.cluster_split_path, "cluster_split"), DatasetRole::cluster_split);
  const auto calibration = load_dataset(require_path(cfg.calibration_path, "calibration"));
  const auto test = load_dataset(require_path(cfg.test_path, "test"), DatasetRole::test);
  std::vector<DomainCentroid> centroids;
  const auto estimate = estimate_domains(cluster_split, calibration, test, centroids);

  std::map<DomainId, double> cal_counts;
  for (const auto& r : calibration.records()) cal_counts[*r.domain] += 1.0;
  std::vector<double> shares, weights;
  const auto plan = build_balance_plan(estimate, calibration, BalanceStrategy::reweight, calibration.size(), cfg.seed,
                                       cfg.weight_formula);
  for (const auto& d : estimate.domains) {
    shares.push_back(cal_counts[d] / static_cast<double>(calibration.size()));
    const auto it = plan.domain_weights.find(d);
    weights.push_back(it == plan.domain_weights.end() ? 0.0 : it->second);
  }
  write_output(cfg.output_path, [&](std::ostream& out) { write_domain_estimate_csv(out, estimate, shares, weights); });
  if (estimate.fallback_used) std::cerr << "warning: count inversion fell back (condition " << estimate.conditioning << ")\n";
  return 0;
}

int cmd_predict(const RunConfig& cfg) {
  const auto artifact = load_artifact(require_path(cfg.artifact_path, "artifact"));
  const auto test = load_dataset(require_path(cfg.test_path, "test"), DatasetRole::test);
  const auto outcomes = predict_dataset(test, artifact, cfg.workers);
  const auto& path = cfg.predictions_path.empty() ? cfg.output_path : cfg.predictions_path;
  write_output(path, [&](std::ostream& out) {
    for (const auto& o : outcomes) out << outcome_to_json(o) << '\n';
  });
  return 0;
}

std::vector<PredictionOutcome> load_predictions(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<PredictionOutcome> outcomes;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      outcomes.push_back(outcome_from_json(line));
    } catch (const Error& e) {
      throw DataError(path + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return outcomes;
}

int cmd_evaluate(const RunConfig& cfg) {
  const auto artifact = load_artifact(require_path(cfg.artifact_path, "artifact"));
  const auto test = load_dataset(require_path(cfg.test_path, "test"), DatasetRole::test);
  const auto outcomes = load_predictions(require_path(cfg.predictions_path, "predictions"));
  const auto report = evaluate(outcomes, test, artifact.config.cluster_threshold, artifact.config.match_mode);
  write_output(cfg.output_path, [&](std::ostream& out) {
    write_eval_csv(out, artifact.quantiles.alpha, artifact.mode(), artifact.balance.strategy, report);
  });
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const Flags& flags) {
  auto scenario = load_scenario(require_path(cfg.scenario_path, "scenario"));
  if (flags.values.contains("seed")) scenario.seed = cfg.seed;
  if (flags.values.contains("workers")) scenario.workers = cfg.workers;
  const auto stats = run_trials(scenario);
  write_output(cfg.output_path, [&](std::ostream& out) { write_trial_stats_csv(out, stats); });
  std::cerr << "trials=" << scenario.trials << " mean_delta=" << stats.mean_delta
            << " assignment_accuracy=" << stats.mean_assignment_accuracy << '\n';
  return 0;
}

int cmd_report(const RunConfig& cfg, const Flags& flags) {
  if (flags.inputs.empty()) throw ConfigError("report needs at least one evaluation CSV");
  std::vector<std::string> docs;
  for (const auto& f : flags.inputs) docs.push_back(read_file(f));
  const auto merged = merge_eval_csvs(docs);
  write_output(cfg.output_path, [&](std::ostream& out) { out << merged; });
  return 0;
}

int report_error(const Error& e, int code) {
  std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conformal prediction with adaptive rejection under domain shift"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--config", flags.config_path, "key = value settings file; flags override it");
  for (auto key : run_config_keys()) {
    const std::string k(key);
    app.add_option_function<std::string>(
        flag_name(key), [&flags, k](const std::string& v) { flags.values[k] = v; }, "setting '" + k + "'");
  }

  auto* validate_cmd = app.add_subcommand("validate", "Check dataset files against the record schema");
  validate_cmd->add_option("files", flags.inputs, "JSONL datasets");
  auto* calibrate_cmd = app.add_subcommand("calibrate", "Compute conformal quantiles into an artifact");
  auto* estimate_cmd = app.add_subcommand("estimate-domains", "Estimate test-domain counts");
  auto* predict_cmd = app.add_subcommand("predict", "Build prediction sets for a test set");
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score predictions for coverage and efficiency");
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a synthetic Monte Carlo scenario");
  auto* report_cmd = app.add_subcommand("report", "Merge evaluation CSVs");
  report_cmd->add_option("files", flags.inputs, "evaluation CSVs")->required();
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    RunConfig cfg;
    if (!flags.config_path.empty()) cfg = load_run_config(flags.config_path);
    for (const auto& [key, value] : flags.values) cfg.set(key, value);
    validate(cfg);

    if (validate_cmd->parsed()) return cmd_validate(cfg, flags);
    if (calibrate_cmd->parsed()) return cmd_calibrate(cfg);
    if (estimate_cmd->parsed()) return cmd_estimate_domains(cfg);
    if (predict_cmd->parsed()) return cmd_predict(cfg);
    if (evaluate_cmd->parsed()) return cmd_evaluate(cfg);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg, flags);
    if (report_cmd->parsed()) return cmd_report(cfg, flags);
    return 1;
  } catch (const ConfigError& e) {
    return report_error(e, 1);
  } catch (const DataError& e) {
    return report_error(e, 2);
  } catch (const NumericalError& e) {
    return report_error(e, 3);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: data: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 2;
  }
}
