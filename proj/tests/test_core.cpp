// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "beatcut/errors.hpp"
#include "beatcut/scoring.hpp"
#include "beatcut/timeline.hpp"
#include "helpers.hpp"

using namespace beatcut;
using bt::segment;
using bt::sub;
using bt::unit;

namespace {

const EditIntent kIntent{"joyful magical life", IntentLevel::general, TaskFamily::on_beat};

// Independent restatement of the scorer, written against the formulas only.
double oracle_total(const Timeline &t, const std::vector<MusicSegment> &segs, const ScorerConfig &c) {
    double total = 0.0;
    double music = 0.0;
    double filled = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const auto &s = t.segments[i];
        music += segs[i].end - segs[i].start;
        for (const auto &u : s.units) filled += u.source_out - u.source_in;
        if (s.units.empty()) continue;
        double rel = 0.0;
        for (const auto &u : s.units) rel += u.relevance;
        rel /= s.units.size();
        int cuts = 0;
        int off = 0;
        for (std::size_t k = 0; k + 1 < s.units.size(); ++k) {
            const double cut = s.units[k].timeline_start + (s.units[k].source_out - s.units[k].source_in);
            ++cuts;
            double best = 1e9;
            for (double b : segs[i].attributes.beats) best = std::min(best, std::abs(b - cut));
            if (best > c.epsilon_beat + 1e-6) ++off;
        }
        const double frac = segs[i].attributes.beats.size() < 2 || cuts == 0 ? 0.0 : double(off) / cuts;
        total += rel + c.beat_bonus * (1.0 - frac);
    }
    auto dominant = [](const SubTimeline &s) -> std::optional<Emotion> {
        std::map<Emotion, double> w;
        for (const auto &u : s.units) {
            if (u.emotion) w[*u.emotion] += u.duration();
        }
        std::optional<Emotion> best;
        double bw = -1.0;
        for (auto e : kAllEmotions) {
            if (w.contains(e) && w[e] > bw + 1e-12) {
                bw = w[e];
                best = e;
            }
        }
        return best;
    };
    for (std::size_t i = 0; i < segs.size(); ++i) {
        for (std::size_t j = i + 1; j < segs.size(); ++j) {
            int dups = 0;
            for (const auto &a : t.segments[i].units) {
                for (const auto &b : t.segments[j].units) {
                    if (a.source_id != b.source_id) continue;
                    const double ov = std::min(a.source_out, b.source_out) - std::max(a.source_in, b.source_in);
                    if (ov > 0.5) ++dups;
                }
            }
            total -= c.p_dup * dups;
            if (j == i + 1) {
                const auto ei = dominant(t.segments[i]);
                const auto ej = dominant(t.segments[j]);
                if (ei && ej && antagonistic(*ei, *ej) &&
                    !antagonistic(segs[i].attributes.emotion, segs[j].attributes.emotion))
                    total -= c.p_emo;
            }
        }
    }
    return total - c.w_dur * std::abs(filled - music);
}

} // namespace

TEST(Compose, ConcatenatesInGlobalOrder) {
    auto a = sub(0, {unit("v1", 0, 1, 0), unit("v1", 2, 3, 1)});
    auto b = sub(1, {unit("v2", 0, 1, 2), unit("v2", 1, 2, 3), unit("v2", 5, 6, 4)});
    const auto t = compose_timelines({a, b}, "m");
    EXPECT_EQ(unit_count(t), 5u);
    const auto flat = flatten(t);
    for (std::size_t k = 1; k < flat.size(); ++k) EXPECT_LT(flat[k - 1].timeline_start, flat[k].timeline_start);
}

TEST(Compose, EmptyInputIsValid) {
    const auto t = compose_timelines({}, "m");
    EXPECT_TRUE(t.segments.empty());
    EXPECT_EQ(timeline_duration(t), 0.0);
}

TEST(Compose, DuplicateIndexRejected) {
    EXPECT_THROW((void)compose_timelines({sub(0, {}), sub(0, {})}, "m"), CompositionError);
}

TEST(Compose, OverlapAcrossBoundaryNamesPair) {
    auto a = sub(0, {unit("v1", 0, 2, 0)});
    auto b = sub(1, {unit("v2", 0, 1, 1.5)});
    try {
        (void)compose_timelines({a, b}, "m");
        FAIL() << "expected CompositionError";
    } catch (const CompositionError &e) {
        EXPECT_NE(std::string(e.what()).find("segment 0 unit 0 and segment 1 unit 0"), std::string::npos);
    }
}

TEST(Compose, OrderInsensitive) {
    std::vector<SubTimeline> subs;
    for (int i = 0; i < 5; ++i) subs.push_back(sub(i, {unit("v", i * 2.0, i * 2.0 + 1, i * 1.0)}));
    const auto ref = compose_timelines(subs, "m");
    std::mt19937 rng(3);
    for (int r = 0; r < 20; ++r) {
        std::shuffle(subs.begin(), subs.end(), rng);
        EXPECT_EQ(compose_timelines(subs, "m"), ref);
    }
}

TEST(GlobalScore, SingleSegmentIsLocalPlusGlobal) {
    const std::vector<MusicSegment> segs = {segment(0, 0, 2)};
    const auto t = compose_timelines({sub(0, {unit("v", 0, 1, 0, {}, {}, 0.8), unit("v", 3, 4, 1, {}, {}, 0.6)})}, "m");
    const auto s = global_score(t, kIntent, segs);
    EXPECT_TRUE(s.pairwise_penalties.empty());
    EXPECT_DOUBLE_EQ(s.total, s.local_scores[0] + s.global_term);
    EXPECT_DOUBLE_EQ(s.global_term, 0.0); // duration matches exactly
    EXPECT_DOUBLE_EQ(s.local_scores[0], 0.7 + 0.2);
}

TEST(GlobalScore, DuplicateSpanPenalty) {
    const std::vector<MusicSegment> segs = {segment(0, 0, 4), segment(1, 4, 8)};
    const auto t = compose_timelines({sub(0, {unit("vid3", 10, 14, 0)}), sub(1, {unit("vid3", 11, 15, 4)})}, "m");
    ScorerConfig c;
    c.p_dup = 1.5;
    const auto s = global_score(t, kIntent, segs, c);
    EXPECT_DOUBLE_EQ(s.pairwise_penalties.at({0, 1}), -1.5);
    EXPECT_NEAR(s.total, oracle_total(t, segs, c), 1e-12);
}

TEST(GlobalScore, SmallOverlapIsNotADuplicate) {
    const std::vector<MusicSegment> segs = {segment(0, 0, 4), segment(1, 4, 8)};
    const auto t = compose_timelines({sub(0, {unit("v", 10, 14, 0)}), sub(1, {unit("v", 13.6, 17.6, 4)})}, "m");
    EXPECT_DOUBLE_EQ(global_score(t, kIntent, segs).pairwise_penalties.at({0, 1}), 0.0);
}

TEST(GlobalScore, SegmentCountMismatch) {
    const std::vector<MusicSegment> segs = {segment(0, 0, 4), segment(1, 4, 8)};
    const auto t = compose_timelines({sub(0, {})}, "m");
    EXPECT_THROW((void)global_score(t, kIntent, segs), ScoreError);
}

TEST(GlobalScore, EmotionClashOnlyForNeighbours) {
    const std::vector<MusicSegment> segs = {segment(0, 0, 2), segment(1, 2, 4), segment(2, 4, 6)};
    const auto t = compose_timelines({sub(0, {unit("a", 0, 2, 0, Emotion::joyful)}),
                                      sub(1, {unit("b", 0, 2, 2, Emotion::calm)}),
                                      sub(2, {unit("c", 0, 2, 4, Emotion::sad)})},
                                     "m");
    const auto s = global_score(t, kIntent, segs);
    EXPECT_DOUBLE_EQ(s.pairwise_penalties.at({0, 2}), 0.0); // joyful/sad but not adjacent
    EXPECT_DOUBLE_EQ(s.pairwise_penalties.at({0, 1}), 0.0);
}

// Random timelines: the breakdown sums exactly and matches the oracle.
TEST(GlobalScore, PropertyMatchesOracleAndReconstructs) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0, 1);
    for (int trial = 0; trial < 300; ++trial) {
        const int m = 1 + static_cast<int>(rng() % 4);
        std::vector<MusicSegment> segs;
        std::vector<SubTimeline> subs;
        double t0 = 0.0;
        for (int i = 0; i < m; ++i) {
            const double len = 2.0 + static_cast<int>(rng() % 5);
            segs.push_back(segment(i, t0, t0 + len, 0.5, kAllEmotions[rng() % 7]));
            std::vector<TimelineUnit> us;
            double at = t0;
            while (at < t0 + len - 0.6) {
                const double d = std::min(t0 + len - at, 0.5 + 0.25 * static_cast<int>(rng() % 6));
                const double in = 0.5 * static_cast<int>(rng() % 20);
                us.push_back(unit("v" + std::to_string(rng() % 2), in, in + d, at, kAllEmotions[rng() % 7], {}, U(rng)));
                at += d;
            }
            subs.push_back(sub(i, us));
            t0 += len;
        }
        const auto tl = compose_timelines(subs, "m");
        const auto s = global_score(tl, kIntent, segs);
        double sum = 0.0;
        for (double v : s.local_scores) sum += v;
        for (const auto &[k, v] : s.pairwise_penalties) sum += v;
        sum += s.global_term;
        EXPECT_DOUBLE_EQ(sum, s.total);
        EXPECT_NEAR(s.total, oracle_total(tl, segs, {}), 1e-9);
        EXPECT_EQ(global_score(tl, kIntent, segs), s); // pure
    }
}

TEST(Types, EmotionTaxonomyClosed) {
    EXPECT_EQ(parse_emotion("joyful"), Emotion::joyful);
    EXPECT_THROW((void)parse_emotion("melancholic"), ValidationError);
    EXPECT_TRUE(antagonistic(Emotion::sad, Emotion::joyful));
    EXPECT_TRUE(antagonistic(Emotion::tense, Emotion::calm));
    EXPECT_TRUE(antagonistic(Emotion::calm, Emotion::energetic));
    EXPECT_FALSE(antagonistic(Emotion::epic, Emotion::sad));
    int pairs = 0;
    for (auto a : kAllEmotions) {
        for (auto b : kAllEmotions) pairs += antagonistic(a, b);
    }
    EXPECT_EQ(pairs, 6); // three symmetric pairs
}

TEST(Types, UnitValidation) {
    EXPECT_THROW(validate(unit("v", 2, 1, 0)), ValidationError);
    EXPECT_THROW(validate(EditIntent{"", IntentLevel::general, TaskFamily::on_beat}), ValidationError);
    EXPECT_NO_THROW(validate(unit("v", 1, 2, 0)));
}
