#include "shiftcp/run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "shiftcp/errors.hpp"

namespace shiftcp {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string v(value);
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) + "' is not a number");
  }
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + std::string(key) + "': '" + std::string(value) +
                      "' is not a non-negative integer");
  }
  return out;
}

std::vector<double> to_double_list(std::string_view key, std::string_view value) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string_view::npos) comma = value.size();
    const auto item = trim(value.substr(start, comma - start));
    if (!item.empty()) out.push_back(to_double(key, item));
    start = comma + 1;
  }
  if (out.empty()) throw ConfigError("config key '" + std::string(key) + "' needs at least one value");
  return out;
}

}  // namespace

std::vector<std::string_view> run_config_keys() {
  return {"alpha",        "mode",           "balance",      "weight_formula",  "cluster_threshold",
          "score_mode",   "no_match_score", "match_mode",   "grid_points",     "resample_target",
          "seed",         "workers",        "calibration",  "cluster_split",   "test",
          "artifact",     "output",         "predictions",  "scenario"};
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  if (key == "alpha") {
    alphas = to_double_list(key, value);
  } else if (key == "mode") {
    mode = parse_calibration_mode(value);
  } else if (key == "balance") {
    balance = parse_balance_strategy(value);
  } else if (key == "weight_formula") {
    weight_formula = parse_weight_formula(value);
  } else if (key == "cluster_threshold") {
    cluster_threshold = to_double(key, value);
  } else if (key == "score_mode") {
    score_mode = parse_score_mode(value);
  } else if (key == "no_match_score") {
    no_match_score = to_double(key, value);
  } else if (key == "match_mode") {
    match_mode = parse_match_mode(value);
  } else if (key == "grid_points") {
    grid_points = to_unsigned(key, value);
  } else if (key == "resample_target") {
    if (value == "auto") {
      resample_target.reset();
    } else {
      resample_target = to_unsigned(key, value);
    }
  } else if (key == "seed") {
    seed = to_unsigned(key, value);
  } else if (key == "workers") {
    workers = to_unsigned(key, value);
  } else if (key == "calibration") {
    calibration_path = value;
  } else if (key == "cluster_split") {
    cluster_split_path = value;
  } else if (key == "test") {
    test_path = value;
  } else if (key == "artifact") {
    artifact_path = value;
  } else if (key == "output") {
    output_path = value;
  } else if (key == "predictions") {
    predictions_path = value;
  } else if (key == "scenario") {
    scenario_path = value;
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

CalibrationConfig RunConfig::calibration_config(double alpha) const {
  CalibrationConfig c;
  c.mode = mode;
  c.alpha = alpha;
  c.cluster_threshold = cluster_threshold;
  c.score_mode = score_mode;
  c.no_match_score = no_match_score;
  c.match_mode = match_mode;
  c.grid_points = grid_points;
  c.seed = seed;
  c.workers = workers;
  return c;
}

RunConfig parse_run_config(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      base.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return base;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::move(base));
}

void validate(const RunConfig& config) {
  for (double a : config.alphas) {
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(a));
  }
  if (!(config.cluster_threshold > 0.0 && config.cluster_threshold <= 1.0)) {
    throw ConfigError("cluster_threshold must lie in (0, 1]");
  }
  if (config.grid_points < 2) throw ConfigError("grid_points must be at least 2");
  if (config.workers < 1) throw ConfigError("workers must be at least 1");
  if (config.resample_target && *config.resample_target == 0) throw ConfigError("resample_target must be positive");
}

std::string to_text(const RunConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "alpha = ";
  for (std::size_t i = 0; i < c.alphas.size(); ++i) out << (i ? "," : "") << c.alphas[i];
  out << "\nmode = " << to_string(c.mode) << "\nbalance = " << to_string(c.balance)
      << "\nweight_formula = " << to_string(c.weight_formula) << "\ncluster_threshold = " << c.cluster_threshold
      << "\nscore_mode = " << to_string(c.score_mode) << "\nno_match_score = " << c.no_match_score
      << "\nmatch_mode = " << to_string(c.match_mode) << "\ngrid_points = " << c.grid_points
      << "\nresample_target = " << (c.resample_target ? std::to_string(*c.resample_target) : std::string("auto"))
      << "\nseed = " << c.seed << "\nworkers = " << c.workers << '\n';
  auto path = [&](const char* key, const std::string& v) {
    if (!v.empty()) out << key << " = " << v << '\n';
  };
  path("calibration", c.calibration_path);
  path("cluster_split", c.cluster_split_path);
  path("test", c.test_path);
  path("artifact", c.artifact_path);
  path("output", c.output_path);
  path("predictions", c.predictions_path);
  path("scenario", c.scenario_path);
  return out.str();
}

}  // namespace shiftcp
