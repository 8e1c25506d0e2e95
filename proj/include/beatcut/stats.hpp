// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace beatcut::eval {

/// 1-based ranks; tied values share the mean of their positions.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> v);

/// Pearson correlation of the average ranks. Throws StatsError on a length
/// mismatch, n < 2, non-finite input, or a constant vector (undefined).
[[nodiscard]] double spearman_rho(std::span<const double> x, std::span<const double> y);

/// Kendall tau-b, O(n log n) by merge-sort swap counting. Same errors.
[[nodiscard]] double kendall_tau(std::span<const double> x, std::span<const double> y);

} // namespace beatcut::eval
