#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "shiftcp/calibration.hpp"
#include "shiftcp/errors.hpp"

namespace shiftcp {

using nlohmann::json;

namespace {

// JSON has no infinities; unbounded quantiles are written as strings.
json encode_real(double v) {
  if (v == kUnbounded) return "+inf";
  if (v == -kUnbounded) return "-inf";
  return v;
}

double decode_real(const json& j, const char* key) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "+inf") return kUnbounded;
    if (s == "-inf") return -kUnbounded;
  }
  throw DataError(std::string("artifact: field '") + key + "' is not a number");
}

const json& required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("artifact: missing field '") + key + "'");
  return *it;
}

}  // namespace

std::string artifact_to_json(const CalibrationArtifact& a) {
  json j;
  j["version"] = a.version;
  j["mode"] = std::string(to_string(a.config.mode));
  j["m"] = a.m;
  j["n_calibration"] = a.n_calibration;
  j["n_answerable"] = a.n_answerable;
  j["calibration_mean_size"] = a.calibration_mean_size;
  j["baseline_mean_size"] = a.baseline_mean_size;

  const auto& q = a.quantiles;
  j["quantiles"] = {{"alpha", q.alpha},
                    {"alpha0", q.alpha0},
                    {"alpha1", q.alpha1},
                    {"q0", encode_real(q.q0)},
                    {"q1", encode_real(q.q1)},
                    {"q_text", encode_real(q.q_text)},
                    {"answerable_rate", q.answerable_rate}};

  const auto& c = a.config;
  j["config"] = {{"alpha", c.alpha},
                 {"cluster_threshold", c.cluster_threshold},
                 {"score_mode", std::string(to_string(c.score_mode))},
                 {"no_match_score", c.no_match_score},
                 {"match_mode", std::string(to_string(c.match_mode))},
                 {"grid_points", c.grid_points},
                 {"seed", c.seed},
                 {"workers", c.workers}};

  const auto& b = a.balance;
  j["balance"] = {{"strategy", std::string(to_string(b.strategy))},
                  {"weight_formula", std::string(to_string(b.weight_formula))},
                  {"calibration_size", b.calibration_size},
                  {"target_shares", b.target_shares},
                  {"domain_weights", b.domain_weights}};
  return j.dump(2);
}

CalibrationArtifact artifact_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("artifact: malformed JSON: ") + e.what());
  }
  CalibrationArtifact a;
  try {
    a.version = required(j, "version").get<std::string>();
    if (a.version != kArtifactVersion) throw DataError("artifact: unsupported version '" + a.version + "'");
    a.m = required(j, "m").get<std::size_t>();
    a.n_calibration = required(j, "n_calibration").get<std::size_t>();
    a.n_answerable = required(j, "n_answerable").get<std::size_t>();
    a.calibration_mean_size = required(j, "calibration_mean_size").get<double>();
    a.baseline_mean_size = required(j, "baseline_mean_size").get<double>();

    const auto& c = required(j, "config");
    a.config.mode = parse_calibration_mode(required(j, "mode").get<std::string>());
    a.config.alpha = required(c, "alpha").get<double>();
    a.config.cluster_threshold = required(c, "cluster_threshold").get<double>();
    a.config.score_mode = parse_score_mode(required(c, "score_mode").get<std::string>());
    a.config.no_match_score = required(c, "no_match_score").get<double>();
    a.config.match_mode = parse_match_mode(required(c, "match_mode").get<std::string>());
    a.config.grid_points = required(c, "grid_points").get<std::size_t>();
    a.config.seed = required(c, "seed").get<std::uint64_t>();
    a.config.workers = required(c, "workers").get<std::size_t>();

    const auto& q = required(j, "quantiles");
    a.quantiles.alpha = required(q, "alpha").get<double>();
    a.quantiles.alpha0 = required(q, "alpha0").get<double>();
    a.quantiles.alpha1 = required(q, "alpha1").get<double>();
    a.quantiles.q0 = decode_real(required(q, "q0"), "q0");
    a.quantiles.q1 = decode_real(required(q, "q1"), "q1");
    a.quantiles.q_text = decode_real(required(q, "q_text"), "q_text");
    a.quantiles.answerable_rate = required(q, "answerable_rate").get<double>();

    const auto& b = required(j, "balance");
    a.balance.strategy = parse_balance_strategy(required(b, "strategy").get<std::string>());
    a.balance.weight_formula = parse_weight_formula(required(b, "weight_formula").get<std::string>());
    a.balance.calibration_size = required(b, "calibration_size").get<std::size_t>();
    a.balance.target_shares = required(b, "target_shares").get<std::map<DomainId, double>>();
    a.balance.domain_weights = required(b, "domain_weights").get<std::map<DomainId, double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("artifact: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("artifact: ") + e.what());
  }
  return a;
}

void save_artifact(const std::string& path, const CalibrationArtifact& artifact) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write artifact '" + path + "'");
  out << artifact_to_json(artifact) << '\n';
}

CalibrationArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open artifact '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return artifact_from_json(buf.str());
}

}  // namespace shiftcp
