#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "shiftcp/text.hpp"

using namespace shiftcp;

namespace {

bool is_subsequence(const std::vector<std::string_view>& sub, const std::vector<std::string_view>& seq) {
  std::size_t j = 0;
  for (std::size_t i = 0; i < seq.size() && j < sub.size(); ++i) {
    if (seq[i] == sub[j]) ++j;
  }
  return j == sub.size();
}

// Longest common subsequence by enumerating every subsequence of `a`.
std::size_t brute_lcs(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b) {
  std::size_t best = 0;
  for (unsigned mask = 0; mask < (1u << a.size()); ++mask) {
    std::vector<std::string_view> sub;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (mask & (1u << i)) sub.push_back(a[i]);
    }
    if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
  }
  return best;
}

double brute_rouge(const std::vector<std::string_view>& a, const std::vector<std::string_view>& b) {
  if (a.empty() || b.empty()) return 0.0;
  const double l = static_cast<double>(brute_lcs(a, b));
  if (l == 0.0) return 0.0;
  const double p = l / static_cast<double>(a.size());
  const double r = l / static_cast<double>(b.size());
  return 2.0 * p * r / (p + r);
}

std::vector<std::vector<std::string_view>> all_sequences(std::size_t max_len,
                                                         const std::vector<std::string_view>& alphabet) {
  std::vector<std::vector<std::string_view>> out{{}};
  std::vector<std::vector<std::string_view>> layer{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string_view>> next;
    for (const auto& s : layer) {
      for (auto t : alphabet) {
        auto e = s;
        e.push_back(t);
        next.push_back(std::move(e));
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

}  // namespace

TEST(Text, NormalizeAnswer) {
  EXPECT_EQ(normalize_answer("  Paris!  "), "paris");
  EXPECT_EQ(normalize_answer("The   Eiffel,\tTower."), "the eiffel tower");
  EXPECT_EQ(normalize_answer("...?"), "");
  EXPECT_EQ(normalize_answer("Caf\xc3\xa9"), "caf\xc3\xa9");
}

TEST(Text, WhitespaceTokens) {
  const auto t = whitespace_tokens("  a  bb\tc\n");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0], "a");
  EXPECT_EQ(t[1], "bb");
  EXPECT_EQ(t[2], "c");
  EXPECT_TRUE(whitespace_tokens("   ").empty());
}

TEST(Text, RougeExamples) {
  EXPECT_DOUBLE_EQ(rouge_l("paris", "paris"), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l("alpha beta", "gamma delta"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l("", "a"), 0.0);

  const auto a = whitespace_tokens("the cat sat");
  const auto b = whitespace_tokens("the cat");
  EXPECT_DOUBLE_EQ(rouge_l("the cat sat", "the cat"), brute_rouge(a, b));
  EXPECT_NEAR(rouge_l("the cat sat", "the cat"), 0.8, 1e-12);
}

TEST(Text, LcsMatchesBruteForce) {
  const std::vector<std::string_view> alphabet{"a", "b", "c"};
  const auto seqs = all_sequences(5, alphabet);
  for (std::size_t i = 0; i < seqs.size(); i += 7) {
    for (std::size_t j = 0; j < seqs.size(); j += 5) {
      ASSERT_EQ(lcs_length(seqs[i], seqs[j]), brute_lcs(seqs[i], seqs[j]));
      ASSERT_DOUBLE_EQ(rouge_l(seqs[i], seqs[j]), brute_rouge(seqs[i], seqs[j]));
    }
  }
}

TEST(Text, RougeIsSymmetricUpToLengthEight) {
  const std::vector<std::string_view> alphabet{"x", "y"};
  const auto seqs = all_sequences(8, alphabet);
  std::size_t checked = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    for (std::size_t j = i; j < seqs.size(); ++j) {
      ASSERT_EQ(rouge_l(seqs[i], seqs[j]), rouge_l(seqs[j], seqs[i]));
      ++checked;
    }
  }
  EXPECT_GT(checked, 100000u);
}
