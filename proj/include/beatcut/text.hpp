// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace beatcut::text {

/// Lowercased maximal alphanumeric runs, in order of appearance.
[[nodiscard]] std::vector<std::string> tokenize(std::string_view s);

[[nodiscard]] bool is_stopword(std::string_view token) noexcept;

/// tokenize() minus stopwords and single characters, first occurrence kept.
[[nodiscard]] std::vector<std::string> content_words(std::string_view s);

[[nodiscard]] std::set<std::string> token_set(std::string_view s);

/// |Q ∩ D| / sqrt(|Q| · |D|), zero when either side is empty.
[[nodiscard]] double overlap_score(const std::set<std::string> &query,
                                   const std::set<std::string> &doc) noexcept;

/// Number of maximal non-whitespace runs.
[[nodiscard]] std::size_t count_words(std::string_view s) noexcept;

/// Keeps at most `max_words` whitespace-separated words.
[[nodiscard]] std::string cap_words(std::string_view s, std::size_t max_words);

[[nodiscard]] std::string join(const std::vector<std::string> &parts, std::string_view sep);

/// Fixed-precision decimal formatting used in prompts and human-readable text.
[[nodiscard]] std::string fmt_seconds(double v, int precision = 3);

} // namespace beatcut::text
