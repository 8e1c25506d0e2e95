// SPDX-License-Identifier: Apache-2.0
#pragma once

// Data-parallel hot loops. Each kernel has a plain serial twin that the
// tests treat as the reference and the benchmark compares against.

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace beatcut::kernels {

// --- retrieval ------------------------------------------------------------

using TokenSet = std::set<std::string>;

/// relevance[d] = max_q weight[q] · overlap(query[q], doc[d]).
[[nodiscard]] std::vector<double> relevance_serial(std::span<const TokenSet> queries,
                                                   std::span<const double> weights,
                                                   std::span<const TokenSet> docs);
[[nodiscard]] std::vector<double> relevance_parallel(std::span<const TokenSet> queries,
                                                     std::span<const double> weights,
                                                     std::span<const TokenSet> docs);

// --- pairwise evaluation --------------------------------------------------

using PairFn = std::function<std::uint8_t(int, int)>;

/// out[k] = fn(pairs[k]); fn must be safe to call concurrently.
[[nodiscard]] std::vector<std::uint8_t> pairs_serial(std::span<const std::pair<int, int>> pairs,
                                                     const PairFn &fn);
[[nodiscard]] std::vector<std::uint8_t> pairs_parallel(std::span<const std::pair<int, int>> pairs,
                                                       const PairFn &fn);

// --- exhaustive assignment search -----------------------------------------

/// Precomputed terms of the global objective for every candidate choice.
/// The kernel adds them in the same order as global_score, so its totals are
/// bit-identical to scoring the assembled timeline.
struct ScoreTables {
    std::vector<int> sizes;                  // K_i per segment
    std::vector<std::vector<double>> local;  // [i][a]
    std::vector<std::vector<double>> filled; // [i][a] summed unit durations
    // pair[(i, j) flattened i < j][a * K_j + b]
    std::vector<std::vector<double>> pair;
    double music_duration = 0.0;
    double w_dur = 0.0;

    [[nodiscard]] int segments() const noexcept { return static_cast<int>(sizes.size()); }
    [[nodiscard]] std::size_t pair_slot(int i, int j) const noexcept;
    /// Product of the sizes; saturates at INT64_MAX.
    [[nodiscard]] std::int64_t combinations() const noexcept;
    [[nodiscard]] double total(std::span<const int> choice) const;
};

struct ArgMax {
    std::int64_t index = 0; // mixed radix, segment 0 most significant
    double score = 0.0;
    std::int64_t evaluations = 0;
};

[[nodiscard]] std::vector<int> decode(std::int64_t index, std::span<const int> sizes);

/// Best total over all combinations; among equal totals the smallest index
/// (lexicographically smallest choice vector) wins.
[[nodiscard]] ArgMax argmax_serial(const ScoreTables &tables);
[[nodiscard]] ArgMax argmax_parallel(const ScoreTables &tables);

} // namespace beatcut::kernels
