#include "shiftcp/prediction.hpp"

#include <cmath>

#include "json.hpp"
#include "shiftcp/errors.hpp"
#include "shiftcp/parallel.hpp"

namespace shiftcp {

std::string_view to_string(OutcomeKind kind) { return kind == OutcomeKind::rejected ? "rejected" : "set"; }

Decision decide(CalibrationMode mode, const ConformalQuantiles& q, double p0, double p1,
                std::span<const double> cluster_scores) {
  Decision d;
  switch (mode) {
    case CalibrationMode::ar:
      if (p0 < q.q0) {
        if (p1 > q.q1) {
          d.kind = OutcomeKind::rejected;
          return d;
        }
        d.includes_cant_answer = true;
      }
      break;
    case CalibrationMode::basic:
      d.includes_cant_answer = p0 < q.q0;
      break;
    case CalibrationMode::bad:
      break;
  }
  for (std::size_t c = 0; c < cluster_scores.size(); ++c) {
    if (cluster_scores[c] < q.q_text) d.included.push_back(c);
  }
  return d;
}

PredictionOutcome predict(const ClusteredAnswers& clustered, const CalibrationArtifact& artifact) {
  if (clustered.threshold != artifact.config.cluster_threshold) {
    throw ConfigError("predict: answers were clustered at threshold " + std::to_string(clustered.threshold) +
                      " but the artifact was calibrated at " + std::to_string(artifact.config.cluster_threshold));
  }
  if (clustered.m != artifact.m) {
    throw ConfigError("predict: question has " + std::to_string(clustered.m) + " samples, artifact expects M=" +
                      std::to_string(artifact.m));
  }
  PredictionOutcome out;
  out.p0 = clustered.p0;
  out.p1 = clustered.p1;
  out.scores = cluster_scores(clustered, artifact.config.score_mode);
  const auto d = decide(artifact.mode(), artifact.quantiles, clustered.p0, clustered.p1, out.scores);
  out.kind = d.kind;
  out.includes_cant_answer = d.includes_cant_answer;
  out.cluster_indices = d.included;
  for (auto c : d.included) out.clusters.push_back(clustered.clusters[c].representative);
  return out;
}

PredictionOutcome predict_record(const QuestionRecord& record, const CalibrationArtifact& artifact) {
  const auto clustered = cluster_answers(record.samples, artifact.config.cluster_threshold);
  auto out = predict(clustered, artifact);
  out.id = record.id;
  return out;
}

std::vector<PredictionOutcome> predict_dataset(const Dataset& test, const CalibrationArtifact& artifact,
                                               std::size_t workers) {
  std::vector<PredictionOutcome> out(test.size());
  parallel_for(test.size(), workers, [&](std::size_t i) { out[i] = predict_record(test[i], artifact); });
  return out;
}

using nlohmann::json;

std::string outcome_to_json(const PredictionOutcome& o) {
  json j;
  j["id"] = o.id;
  j["kind"] = std::string(to_string(o.kind));
  j["clusters"] = o.clusters;
  j["cluster_indices"] = o.cluster_indices;
  j["includes_cant_answer"] = o.includes_cant_answer;
  j["p0"] = o.p0;
  j["scores"] = o.scores;
  return j.dump();
}

PredictionOutcome outcome_from_json(std::string_view line) {
  PredictionOutcome o;
  try {
    const auto j = json::parse(line);
    o.id = j.at("id").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "rejected") {
      o.kind = OutcomeKind::rejected;
    } else if (kind == "set") {
      o.kind = OutcomeKind::set;
    } else {
      throw DataError("prediction: unknown kind '" + kind + "'");
    }
    o.clusters = j.at("clusters").get<std::vector<std::string>>();
    o.cluster_indices = j.at("cluster_indices").get<std::vector<std::size_t>>();
    o.includes_cant_answer = j.at("includes_cant_answer").get<bool>();
    o.p0 = j.at("p0").get<double>();
    o.p1 = 1.0 - o.p0;
    o.scores = j.at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw DataError(std::string("prediction: ") + e.what());
  }
  return o;
}

}  // namespace shiftcp
