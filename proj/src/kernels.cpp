// SPDX-License-Identifier: Apache-2.0
#include "beatcut/kernels.hpp"

#include <cmath>
#include <limits>

#include "beatcut/text.hpp"

namespace beatcut::kernels {

// --- retrieval ------------------------------------------------------------

namespace {

double best_for_doc(std::span<const TokenSet> queries, std::span<const double> weights,
                    const TokenSet &doc) {
    double best = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
        const double s = weights[q] * text::overlap_score(queries[q], doc);
        if (s > best) best = s;
    }
    return best;
}

} // namespace

std::vector<double> relevance_serial(std::span<const TokenSet> queries,
                                     std::span<const double> weights,
                                     std::span<const TokenSet> docs) {
    std::vector<double> out(docs.size(), 0.0);
    for (std::size_t d = 0; d < docs.size(); ++d) out[d] = best_for_doc(queries, weights, docs[d]);
    return out;
}

std::vector<double> relevance_parallel(std::span<const TokenSet> queries,
                                       std::span<const double> weights,
                                       std::span<const TokenSet> docs) {
    const auto n = static_cast<std::int64_t>(docs.size());
    std::vector<double> out(docs.size(), 0.0);
#pragma omp parallel for schedule(static) if (n > 256)
    for (std::int64_t d = 0; d < n; ++d) out[d] = best_for_doc(queries, weights, docs[d]);
    return out;
}

// --- pairwise -------------------------------------------------------------

std::vector<std::uint8_t> pairs_serial(std::span<const std::pair<int, int>> pairs, const PairFn &fn) {
    std::vector<std::uint8_t> out(pairs.size(), 0);
    for (std::size_t k = 0; k < pairs.size(); ++k) out[k] = fn(pairs[k].first, pairs[k].second);
    return out;
}

std::vector<std::uint8_t> pairs_parallel(std::span<const std::pair<int, int>> pairs,
                                         const PairFn &fn) {
    const auto n = static_cast<std::int64_t>(pairs.size());
    std::vector<std::uint8_t> out(pairs.size(), 0);
#pragma omp parallel for schedule(dynamic) if (n > 16)
    for (std::int64_t k = 0; k < n; ++k) out[k] = fn(pairs[k].first, pairs[k].second);
    return out;
}

// --- exhaustive search ----------------------------------------------------

std::size_t ScoreTables::pair_slot(int i, int j) const noexcept {
    // rows of the strict upper triangle, row i holding j = i+1 .. m-1
    const auto m = static_cast<std::size_t>(segments());
    const auto ui = static_cast<std::size_t>(i);
    return ui * m - ui * (ui + 1) / 2 + static_cast<std::size_t>(j - i - 1);
}

std::int64_t ScoreTables::combinations() const noexcept {
    std::int64_t n = 1;
    for (int k : sizes) {
        if (k <= 0) return 0;
        if (n > std::numeric_limits<std::int64_t>::max() / k) return std::numeric_limits<std::int64_t>::max();
        n *= k;
    }
    return n;
}

double ScoreTables::total(std::span<const int> c) const {
    const int m = segments();
    double t = 0.0;
    for (int i = 0; i < m; ++i) t += local[i][c[i]];
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) t += pair[pair_slot(i, j)][c[i] * sizes[j] + c[j]];
    }
    double d = 0.0;
    for (int i = 0; i < m; ++i) d += filled[i][c[i]];
    t += -w_dur * std::abs(d - music_duration);
    return t;
}

std::vector<int> decode(std::int64_t index, std::span<const int> sizes) {
    std::vector<int> c(sizes.size(), 0);
    for (std::size_t k = sizes.size(); k-- > 0;) {
        c[k] = static_cast<int>(index % sizes[k]);
        index /= sizes[k];
    }
    return c;
}

namespace {

bool better(double s, std::int64_t i, double best, std::int64_t best_i) {
    return s > best || (s == best && i < best_i);
}

} // namespace

ArgMax argmax_serial(const ScoreTables &tables) {
    const auto n = tables.combinations();
    ArgMax best{-1, -std::numeric_limits<double>::infinity(), 0};
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const auto c = decode(idx, tables.sizes);
        const double s = tables.total(c);
        if (better(s, idx, best.score, best.index)) {
            best.score = s;
            best.index = idx;
        }
    }
    best.evaluations = n;
    return best;
}

ArgMax argmax_parallel(const ScoreTables &tables) {
    const auto n = tables.combinations();
    ArgMax best{-1, -std::numeric_limits<double>::infinity(), 0};
#pragma omp parallel
    {
        double local_score = -std::numeric_limits<double>::infinity();
        std::int64_t local_idx = -1;
#pragma omp for schedule(static)
        for (std::int64_t idx = 0; idx < n; ++idx) {
            const auto c = decode(idx, tables.sizes);
            const double s = tables.total(c);
            if (local_idx < 0 || better(s, idx, local_score, local_idx)) {
                local_score = s;
                local_idx = idx;
            }
        }
#pragma omp critical(beatcut_argmax)
        {
            if (local_idx >= 0 && (best.index < 0 || better(local_score, local_idx, best.score, best.index))) {
                best.score = local_score;
                best.index = local_idx;
            }
        }
    }
    best.evaluations = n;
    return best;
}

} // namespace beatcut::kernels
