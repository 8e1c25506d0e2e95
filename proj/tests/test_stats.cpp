// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "beatcut/errors.hpp"
#include "beatcut/stats.hpp"
#include "stats_oracle.hpp"

using namespace beatcut;
using namespace beatcut::eval;

TEST(Spearman, HandExample) {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {1, 3, 2, 4};
    // 1 − 6·Σd² / (n(n²−1)) = 1 − 6·2/60
    EXPECT_NEAR(spearman_rho(x, y), 0.8, 1e-12);
}

TEST(Kendall, HandExample) {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {1, 3, 2, 4};
    EXPECT_NEAR(kendall_tau(x, y), 4.0 / 6.0, 1e-12); // 5 concordant, 1 discordant
}

TEST(Ranks, TiesShareTheMean) {
    const std::vector<double> v = {10, 20, 10, 30, 20};
    EXPECT_EQ(average_ranks(v), (std::vector<double>{1.5, 3.5, 1.5, 5, 3.5}));
}

TEST(Stats, ExactExtremes) {
    std::mt19937_64 rng(1);
    for (int n = 2; n <= 12; ++n) {
        std::vector<double> x(n);
        for (auto &v : x) v = static_cast<double>(rng() % 1000);
        x[0] = -1; // never constant
        std::vector<double> neg(n);
        for (int i = 0; i < n; ++i) neg[i] = -x[i];
        EXPECT_EQ(spearman_rho(x, x), 1.0);
        EXPECT_EQ(kendall_tau(x, x), 1.0);
        EXPECT_EQ(spearman_rho(x, neg), -1.0);
        EXPECT_EQ(kendall_tau(x, neg), -1.0);

        std::vector<double> up(n);
        for (int i = 0; i < n; ++i) up[i] = i;
        const std::vector<double> down(up.rbegin(), up.rend());
        EXPECT_EQ(spearman_rho(up, down), -1.0);
        EXPECT_EQ(kendall_tau(up, down), -1.0);
    }
}

TEST(Stats, Errors) {
    const std::vector<double> a = {1, 2, 3};
    const std::vector<double> b = {1, 2};
    EXPECT_THROW((void)spearman_rho(a, b), StatsError);
    EXPECT_THROW((void)kendall_tau(std::vector<double>{1}, std::vector<double>{1}), StatsError);
    EXPECT_THROW((void)spearman_rho(a, std::vector<double>{5, 5, 5}), StatsError);
    EXPECT_THROW((void)kendall_tau(a, std::vector<double>{5, 5, 5}), StatsError);
    EXPECT_THROW((void)kendall_tau(a, std::vector<double>{1, std::nan(""), 2}), StatsError);
}

// 1000 random vectors, n ≤ 12, heavy ties: both statistics equal the O(n²)
// oracles, are symmetric and survive a strictly increasing transform.
TEST(Stats, MatchOraclesProperty) {
    std::mt19937_64 rng(2024);
    int checked = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 11);
        const int levels = 2 + static_cast<int>(rng() % 6);
        std::vector<double> x(n);
        std::vector<double> y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = static_cast<double>(rng() % levels);
            y[i] = static_cast<double>(rng() % levels);
        }
        if (bt::constant(x) || bt::constant(y)) continue;
        ++checked;
        const double rho = spearman_rho(x, y);
        const double tau = kendall_tau(x, y);
        EXPECT_NEAR(rho, bt::spearman_oracle(x, y), 1e-9);
        EXPECT_NEAR(tau, bt::kendall_oracle(x, y), 1e-9);
        EXPECT_EQ(rho, spearman_rho(y, x));
        EXPECT_NEAR(tau, kendall_tau(y, x), 1e-12);
        std::vector<double> fx(n);
        for (int i = 0; i < n; ++i) fx[i] = std::exp(x[i]) + 3.0 * x[i];
        EXPECT_NEAR(spearman_rho(fx, y), rho, 1e-12);
        EXPECT_NEAR(kendall_tau(fx, y), tau, 1e-12);
    }
    EXPECT_GT(checked, 900);
}
