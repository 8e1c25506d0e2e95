// SPDX-License-Identifier: Apache-2.0
#include "beatcut/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>

#include "beatcut/errors.hpp"

namespace beatcut::eval {

namespace {

void check(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw StatsError("length mismatch: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < 2) throw StatsError("need at least two observations");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(x.begin(), x.end(), finite) || !std::all_of(y.begin(), y.end(), finite))
        throw StatsError("non-finite observation");
}

// Number of pairs among runs of equal values in a sorted sequence.
template <class It, class Eq> std::int64_t tied_pairs(It first, It last, Eq eq) {
    std::int64_t pairs = 0;
    while (first != last) {
        auto run = first;
        std::int64_t len = 0;
        while (run != last && eq(*run, *first)) {
            ++run;
            ++len;
        }
        pairs += len * (len - 1) / 2;
        first = run;
    }
    return pairs;
}

// Sorts v[lo, hi) and returns the number of inversions.
std::int64_t merge_count(std::vector<double> &v, std::vector<double> &tmp, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::int64_t swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
    std::size_t i = lo;
    std::size_t j = mid;
    std::size_t k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += static_cast<std::int64_t>(mid - i);
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + static_cast<std::ptrdiff_t>(lo), tmp.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return swaps;
}

} // namespace

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j < idx.size() && v[idx[j]] == v[idx[i]]) ++j;
        // positions i+1 .. j share their mean
        const double rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) r[idx[k]] = rank;
        i = j;
    }
    return r;
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    check(x, y);
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double mean = 0.5 * static_cast<double>(x.size() + 1); // same for both rank vectors
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw StatsError("constant vector; rank correlation undefined");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double kendall_tau(std::span<const double> x, std::span<const double> y) {
    check(x, y);
    const std::size_t n = x.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]); });

    const auto n0 = static_cast<std::int64_t>(n * (n - 1) / 2);
    const std::int64_t n1 = tied_pairs(idx.begin(), idx.end(), [&](auto a, auto b) { return x[a] == x[b]; });
    const std::int64_t n3 = tied_pairs(idx.begin(), idx.end(),
                                       [&](auto a, auto b) { return x[a] == x[b] && y[a] == y[b]; });
    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[idx[i]];
    std::vector<double> tmp(n);
    const std::int64_t swaps = merge_count(ys, tmp, 0, n);
    const std::int64_t n2 = tied_pairs(ys.begin(), ys.end(), [](double a, double b) { return a == b; });

    const auto dx = n0 - n1;
    const auto dy = n0 - n2;
    if (dx == 0 || dy == 0) throw StatsError("constant vector; rank correlation undefined");
    const std::int64_t s = n0 - n1 - n2 + n3 - 2 * swaps; // concordant minus discordant
    return std::clamp(static_cast<double>(s) / std::sqrt(static_cast<double>(dx) * static_cast<double>(dy)),
                      -1.0, 1.0);
}

} // namespace beatcut::eval
