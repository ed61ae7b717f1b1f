#pragma once

// Per-question answer clustering and the scores derived from it: normalized
// entropy (the unanswerability score), answerability labels, and cluster
// nonconformity.

#include <cstddef>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shiftcp {

inline constexpr double kDefaultClusterThreshold = 0.7;

struct AnswerCluster {
  std::string representative;         // first member in sample order
  std::vector<std::size_t> members;   // zero-based sample indices, ascending
  std::size_t freq() const noexcept { return members.size(); }
};

struct ClusteredAnswers {
  std::vector<AnswerCluster> clusters;
  std::size_t m = 0;
  double threshold = kDefaultClusterThreshold;
  double ne = 0.0;
  double p0 = 0.0;  // probability the question cannot be answered (= ne)
  double p1 = 1.0;  // 1 - ne

  std::vector<std::size_t> sizes() const;
};

// Greedy first-fit: each sample joins the first cluster whose representative
// has Rouge-L >= threshold with it (on normalized text), else opens a new one.
ClusteredAnswers cluster_answers(std::span<const std::string> samples, double threshold = kDefaultClusterThreshold);

// -(1/ln K) * sum p_j ln p_j over proportions p_j = size_j / sum(size); 0 when
// there is a single cluster.
double normalized_entropy(std::span<const std::size_t> cluster_sizes);
double normalized_entropy(const ClusteredAnswers& clustered);

enum class MatchMode { exact, regex };

std::string_view to_string(MatchMode mode);
MatchMode parse_match_mode(std::string_view text);

// Decides whether a sampled answer matches any reference answer. Exact mode
// compares normalized forms; regex mode treats each reference as a
// case-insensitive ECMAScript pattern searched within the normalized sample.
class AnswerMatcher {
 public:
  AnswerMatcher(std::span<const std::string> ground_truths, MatchMode mode = MatchMode::exact);

  bool matches(std::string_view sample) const;

 private:
  MatchMode mode_;
  std::vector<std::string> normalized_;
  std::vector<std::regex> patterns_;
};

struct AnswerabilityLabel {
  bool answerable = false;
  std::optional<std::size_t> matched_cluster;
};

AnswerabilityLabel answerability(const ClusteredAnswers& clustered, std::span<const std::string> samples,
                                 std::span<const std::string> ground_truths, MatchMode mode = MatchMode::exact);

// True when any member of the cluster matches a reference answer.
bool cluster_matches(const AnswerCluster& cluster, std::span<const std::string> samples, const AnswerMatcher& matcher);

enum class ScoreMode { frequency, frequency_minus_ne };

std::string_view to_string(ScoreMode mode);
ScoreMode parse_score_mode(std::string_view text);

inline constexpr double kDefaultNoMatchScore = 1.0;

// Nonconformity of one cluster: 1 - freq/M, or 1 - (freq/M - NE).
double cluster_score(const ClusteredAnswers& clustered, std::size_t cluster_index, ScoreMode mode);
std::vector<double> cluster_scores(const ClusteredAnswers& clustered, ScoreMode mode);

// Score of the ground-truth cluster, or no_match_score when none matched.
double nonconformity_score(const ClusteredAnswers& clustered, const AnswerabilityLabel& label, ScoreMode mode,
                           double no_match_score = kDefaultNoMatchScore);

}  // namespace shiftcp
