// SPDX-License-Identifier: Apache-2.0
#include "beatcut/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>

namespace beatcut::text {

namespace {

constexpr std::array<std::string_view, 48> kStopwords = {
    "a",    "an",   "the",  "and",  "or",   "of",   "to",    "in",   "on",    "at",
    "for",  "with", "by",   "from", "is",   "are",  "be",    "that", "this",  "it",
    "its",  "as",   "into", "some", "very", "make", "create", "video", "mashup", "about",
    "which", "while", "then", "than", "so", "we", "our", "your", "their", "his",
    "her",  "them", "was",  "were", "has",  "have", "will",  "conveys"};

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

} // namespace

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

bool is_stopword(std::string_view token) noexcept {
    return std::find(kStopwords.begin(), kStopwords.end(), token) != kStopwords.end();
}

std::vector<std::string> content_words(std::string_view s) {
    std::vector<std::string> out;
    for (auto &t : tokenize(s)) {
        if (t.size() < 2 || is_stopword(t)) continue;
        if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(std::move(t));
    }
    return out;
}

std::set<std::string> token_set(std::string_view s) {
    auto toks = tokenize(s);
    return {std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end())};
}

double overlap_score(const std::set<std::string> &query,
                     const std::set<std::string> &doc) noexcept {
    if (query.empty() || doc.empty()) return 0.0;
    std::size_t common = 0;
    auto a = query.begin();
    auto b = doc.begin();
    while (a != query.end() && b != doc.end()) {
        if (*a < *b) {
            ++a;
        } else if (*b < *a) {
            ++b;
        } else {
            ++common;
            ++a;
            ++b;
        }
    }
    return static_cast<double>(common) /
           std::sqrt(static_cast<double>(query.size()) * static_cast<double>(doc.size()));
}

std::size_t count_words(std::string_view s) noexcept {
    std::size_t n = 0;
    bool in_word = false;
    for (char c : s) {
        if (is_space(c)) {
            in_word = false;
        } else if (!in_word) {
            in_word = true;
            ++n;
        }
    }
    return n;
}

std::string cap_words(std::string_view s, std::size_t max_words) {
    std::string out;
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < s.size() && n < max_words) {
        while (i < s.size() && is_space(s[i])) ++i;
        if (i >= s.size()) break;
        std::size_t j = i;
        while (j < s.size() && !is_space(s[j])) ++j;
        if (!out.empty()) out.push_back(' ');
        out.append(s.substr(i, j - i));
        ++n;
        i = j;
    }
    return out;
}

std::string join(const std::vector<std::string> &parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out.append(sep);
        out.append(parts[i]);
    }
    return out;
}

std::string fmt_seconds(double v, int precision) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", precision, v);
    return buf;
}

} // namespace beatcut::text
