#include "shiftcp/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "shiftcp/errors.hpp"
#include "shiftcp/text.hpp"

namespace shiftcp {

std::vector<std::size_t> ClusteredAnswers::sizes() const {
  std::vector<std::size_t> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) out.push_back(c.freq());
  return out;
}

ClusteredAnswers cluster_answers(std::span<const std::string> samples, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw ConfigError("cluster threshold must lie in (0, 1], got " + std::to_string(threshold));
  }
  ClusteredAnswers out;
  out.m = samples.size();
  out.threshold = threshold;

  std::vector<std::string> normalized;
  normalized.reserve(samples.size());
  for (const auto& s : samples) normalized.push_back(normalize_answer(s));

  std::vector<std::vector<std::string_view>> rep_tokens;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto tokens = whitespace_tokens(normalized[i]);
    bool placed = false;
    for (std::size_t c = 0; c < out.clusters.size(); ++c) {
      if (rouge_l(tokens, rep_tokens[c]) >= threshold) {
        out.clusters[c].members.push_back(i);
        placed = true;
        break;
      }
    }
    if (!placed) {
      out.clusters.push_back(AnswerCluster{samples[i], {i}});
      rep_tokens.push_back(tokens);
    }
  }

  out.ne = normalized_entropy(out);
  out.p0 = out.ne;
  out.p1 = 1.0 - out.ne;
  return out;
}

double normalized_entropy(std::span<const std::size_t> cluster_sizes) {
  if (cluster_sizes.size() <= 1) return 0.0;
  std::size_t total = 0;
  for (auto s : cluster_sizes) total += s;
  if (total == 0) return 0.0;
  double h = 0.0;
  for (auto s : cluster_sizes) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  const double ne = h / std::log(static_cast<double>(cluster_sizes.size()));
  // Rounding can push the uniform case a hair past 1.
  return std::clamp(ne, 0.0, 1.0);
}

double normalized_entropy(const ClusteredAnswers& clustered) {
  const auto s = clustered.sizes();
  return normalized_entropy(s);
}

std::string_view to_string(MatchMode mode) { return mode == MatchMode::exact ? "exact" : "regex"; }

MatchMode parse_match_mode(std::string_view text) {
  if (text == "exact") return MatchMode::exact;
  if (text == "regex") return MatchMode::regex;
  throw ConfigError("unknown match mode '" + std::string(text) + "'");
}

AnswerMatcher::AnswerMatcher(std::span<const std::string> ground_truths, MatchMode mode) : mode_(mode) {
  normalized_.reserve(ground_truths.size());
  for (const auto& g : ground_truths) normalized_.push_back(normalize_answer(g));
  if (mode_ == MatchMode::regex) {
    patterns_.reserve(normalized_.size());
    for (const auto& g : ground_truths) {
      try {
        patterns_.emplace_back(g, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        throw DataError("invalid ground-truth pattern '" + g + "': " + e.what());
      }
    }
  }
}

bool AnswerMatcher::matches(std::string_view sample) const {
  const std::string s = normalize_answer(sample);
  if (mode_ == MatchMode::exact) {
    for (const auto& g : normalized_) {
      if (s == g) return true;
    }
    return false;
  }
  for (const auto& p : patterns_) {
    if (std::regex_search(s, p)) return true;
  }
  return false;
}

AnswerabilityLabel answerability(const ClusteredAnswers& clustered, std::span<const std::string> samples,
                                 std::span<const std::string> ground_truths, MatchMode mode) {
  const AnswerMatcher matcher(ground_truths, mode);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!matcher.matches(samples[i])) continue;
    for (std::size_t c = 0; c < clustered.clusters.size(); ++c) {
      const auto& members = clustered.clusters[c].members;
      if (std::find(members.begin(), members.end(), i) != members.end()) return {true, c};
    }
    return {true, std::nullopt};
  }
  return {};
}

bool cluster_matches(const AnswerCluster& cluster, std::span<const std::string> samples, const AnswerMatcher& matcher) {
  for (auto i : cluster.members) {
    if (i < samples.size() && matcher.matches(samples[i])) return true;
  }
  return false;
}

std::string_view to_string(ScoreMode mode) {
  return mode == ScoreMode::frequency ? "frequency" : "frequency-minus-ne";
}

ScoreMode parse_score_mode(std::string_view text) {
  if (text == "frequency") return ScoreMode::frequency;
  if (text == "frequency-minus-ne") return ScoreMode::frequency_minus_ne;
  throw ConfigError("unknown score mode '" + std::string(text) + "'");
}

double cluster_score(const ClusteredAnswers& clustered, std::size_t cluster_index, ScoreMode mode) {
  const double share =
      static_cast<double>(clustered.clusters.at(cluster_index).freq()) / static_cast<double>(clustered.m);
  return mode == ScoreMode::frequency ? 1.0 - share : 1.0 - (share - clustered.ne);
}

std::vector<double> cluster_scores(const ClusteredAnswers& clustered, ScoreMode mode) {
  std::vector<double> out;
  out.reserve(clustered.clusters.size());
  for (std::size_t c = 0; c < clustered.clusters.size(); ++c) out.push_back(cluster_score(clustered, c, mode));
  return out;
}

double nonconformity_score(const ClusteredAnswers& clustered, const AnswerabilityLabel& label, ScoreMode mode,
                           double no_match_score) {
  if (!label.matched_cluster) return no_match_score;
  return cluster_score(clustered, *label.matched_cluster, mode);
}

}  // namespace shiftcp
