#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shiftcp {

// Lowercases ASCII, strips ASCII punctuation, trims, and collapses internal
// whitespace to single spaces. Non-ASCII bytes pass through unchanged.
std::string normalize_answer(std::string_view text);

std::vector<std::string_view> whitespace_tokens(std::string_view text);

std::size_t lcs_length(std::span<const std::string_view> a, std::span<const std::string_view> b);

// Rouge-L F1 over whitespace tokens. 0 when either side is empty.
double rouge_l(std::string_view a, std::string_view b);
double rouge_l(std::span<const std::string_view> a, std::span<const std::string_view> b);

}  // namespace shiftcp
