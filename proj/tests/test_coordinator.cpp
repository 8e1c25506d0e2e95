// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>

#include "beatcut/coordinator.hpp"
#include "beatcut/errors.hpp"
#include "beatcut/pipeline.hpp"
#include "beatcut/text.hpp"
#include "beatcut/timeline.hpp"
#include "helpers.hpp"

using namespace beatcut;
using namespace beatcut::coord;
using bt::segment;
using bt::sub;
using bt::unit;

namespace {

planner::TaskGraph chain(int n) {
    planner::TaskGraph g;
    for (int i = 0; i < n; ++i) g.nodes.push_back({i, i, "segment " + std::to_string(i), planner::TaskStatus::done});
    for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
    return g;
}

std::vector<MusicSegment> three_segments() {
    return {segment(0, 0, 2), segment(1, 2, 4), segment(2, 4, 6)};
}

// Every segment uses shot v[0,2): three story conflicts no one can fix.
std::vector<SubTimeline> all_same_shot() {
    return {sub(0, {unit("v", 0, 2, 0)}), sub(1, {unit("v", 0, 2, 2)}), sub(2, {unit("v", 0, 2, 4)})};
}

class NoOpRepairer final : public RegionRepairer {
  public:
    Proposal propose(const RepairRegion &r, const RepairDirective &, const std::vector<SubTimeline> &cur,
                     const NegotiationContext &) override {
        Proposal p;
        for (int m : r.members) p.members.push_back(cur[m]);
        p.evaluations = 1;
        return p;
    }
};

// Keeps the clash but always looks a little better, so every proposal is
// accepted and the state never repeats.
class CreepRepairer final : public RegionRepairer {
  public:
    Proposal propose(const RepairRegion &r, const RepairDirective &, const std::vector<SubTimeline> &cur,
                     const NegotiationContext &) override {
        Proposal p;
        for (int m : r.members) {
            auto s = cur[m];
            for (auto &u : s.units) u.relevance = std::min(1.0, u.relevance + 1e-3);
            p.members.push_back(s);
        }
        return p;
    }
};

// Swaps the member's shot for a fresh one.
class FreshShotRepairer final : public RegionRepairer {
  public:
    Proposal propose(const RepairRegion &r, const RepairDirective &, const std::vector<SubTimeline> &cur,
                     const NegotiationContext &) override {
        Proposal p;
        for (int m : r.members) {
            auto s = cur[m];
            for (auto &u : s.units) {
                u.source_id = "fresh" + std::to_string(m);
            }
            p.members.push_back(s);
        }
        return p;
    }
};

NegotiationContext context(const std::vector<MusicSegment> &segs, int n) {
    return NegotiationContext{segs, {"joyful magical life", IntentLevel::general, TaskFamily::on_beat}, chain(n), {}, {}};
}

} // namespace

TEST(Regions, CapFormula) {
    EXPECT_EQ(region_cap(1), 1);
    EXPECT_EQ(region_cap(3), 1);
    EXPECT_EQ(region_cap(4), 1);
    EXPECT_EQ(region_cap(8), 2);
    EXPECT_EQ(region_cap(12), 3);
    EXPECT_EQ(region_cap(16), 4);
    EXPECT_EQ(region_cap(32), 4);
}

// 1000 random conflict graphs over random task DAGs: every region before any
// merge stays under the cap, holds its seed and only valid, sorted members.
TEST(Regions, RandomGraphsRespectCap) {
    std::mt19937_64 rng(404);
    const ConflictType all[] = {ConflictType::rhythm, ConflictType::emotion, ConflictType::character,
                                ConflictType::story};
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 4 + static_cast<int>(rng() % 29);
        auto tasks = chain(n);
        for (int k = 0; k < n; ++k) {
            const int a = static_cast<int>(rng() % n);
            const int b = static_cast<int>(rng() % n);
            if (a < b && std::find(tasks.edges.begin(), tasks.edges.end(), std::make_pair(a, b)) == tasks.edges.end())
                tasks.edges.emplace_back(a, b);
        }
        ConflictGraph g;
        g.node_count = n;
        std::set<std::pair<int, int>> seen;
        const int m = 1 + static_cast<int>(rng() % (2 * n));
        for (int k = 0; k < m; ++k) {
            int a = static_cast<int>(rng() % n);
            int b = static_cast<int>(rng() % n);
            if (a == b) continue;
            if (a > b) std::swap(a, b);
            if (!seen.emplace(a, b).second) continue;
            ConflictSet t;
            const int nt = 1 + static_cast<int>(rng() % 3);
            for (int j = 0; j < nt; ++j) t.insert(all[rng() % 4]);
            g.edges.push_back({a, b, t});
        }
        std::sort(g.edges.begin(), g.edges.end(), [](auto &x, auto &y) { return std::tie(x.p, x.q) < std::tie(y.p, y.q); });
        const int cap = region_cap(n);
        for (const auto &r : decompose_regions(g, tasks)) {
            EXPECT_LE(static_cast<int>(r.members.size()), cap);
            EXPECT_FALSE(r.members.empty());
            EXPECT_TRUE(std::is_sorted(r.members.begin(), r.members.end()));
            EXPECT_EQ(std::adjacent_find(r.members.begin(), r.members.end()), r.members.end());
            EXPECT_GE(r.members.front(), 0);
            EXPECT_LT(r.members.back(), n);
            EXPECT_FALSE(r.merged);
        }
    }
}

TEST(Regions, OneRegionPerType) {
    ConflictGraph g;
    g.node_count = 8;
    g.edges = {{0, 1, {ConflictType::rhythm, ConflictType::emotion}}};
    const auto rs = decompose_regions(g, chain(8));
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_EQ(rs[0].members, (std::vector<int>{0, 1}));
    EXPECT_EQ(rs[1].members, (std::vector<int>{0, 1}));
    EXPECT_NE(rs[0].type, rs[1].type);
    const auto pr = pair_regions(g);
    ASSERT_EQ(pr.size(), 1u);
    EXPECT_EQ(pr[0].types.size(), 2u);
}

TEST(Regions, GrowthFollowsSameTypeEdgesFirst) {
    ConflictGraph g;
    g.node_count = 12; // cap 3
    g.edges = {{2, 5, {ConflictType::story}}, {5, 9, {ConflictType::story}}, {5, 6, {ConflictType::rhythm}}};
    const auto rs = decompose_regions(g, chain(12));
    EXPECT_EQ(rs[0].members, (std::vector<int>{2, 5, 9}));
}

TEST(Regions, MergeEscalatesNewEdges) {
    ConflictGraph prev;
    prev.node_count = 8;
    prev.edges = {{0, 1, {ConflictType::story}}};
    const auto start = decompose_regions(prev, chain(8));
    ConflictGraph now;
    now.node_count = 8;
    now.edges = {{1, 2, {ConflictType::story}}};
    const auto merged = merge_regions(start, now, prev, chain(8));
    ASSERT_EQ(merged.size(), 1u);
    EXPECT_EQ(merged[0].members, (std::vector<int>{0, 1, 2})); // past the cap of 2
    EXPECT_TRUE(merged[0].merged);
    // the same edge again, all regions merged: retired
    EXPECT_TRUE(merge_regions(merged, now, now, chain(8)).empty());
}

TEST(Predicate, Examples) {
    const auto segs = three_segments();
    // rhythm: boundary cut 0.2 s off the grid
    const auto early = sub(0, {unit("a", 0, 1.8, 0)});
    const auto late = sub(1, {unit("b", 0, 2, 1.8)});
    EXPECT_TRUE(conflict_predicate(early, late, segs[0], segs[1], TaskFamily::on_beat).contains(ConflictType::rhythm));
    const auto p = sub(0, {unit("a", 0, 2, 0, Emotion::joyful, {"ava"})});
    const auto q = sub(1, {unit("b", 0, 2, 2, Emotion::sad, {"ben"})});
    const auto on_beat = conflict_predicate(p, q, segs[0], segs[1], TaskFamily::on_beat);
    EXPECT_EQ(on_beat, (ConflictSet{ConflictType::emotion}));
    const auto story = conflict_predicate(p, q, segs[0], segs[1], TaskFamily::story_driven);
    EXPECT_TRUE(story.contains(ConflictType::character));
    // not neighbours: only a repeated shot counts
    const auto r = sub(2, {unit("a", 0.5, 2.5, 4, Emotion::sad, {"ben"})});
    EXPECT_EQ(conflict_predicate(p, r, segs[0], segs[2], TaskFamily::story_driven), (ConflictSet{ConflictType::story}));
    EXPECT_EQ(conflict_predicate(r, p, segs[2], segs[0], TaskFamily::story_driven), (ConflictSet{ConflictType::story}));
}

TEST(Predicate, CandidatePairsIncludeAncestors) {
    auto tasks = chain(4);
    tasks.edges = {{0, 3}};
    EXPECT_EQ(candidate_pairs(4, tasks), (std::vector<std::pair<int, int>>{{0, 1}, {0, 3}, {1, 2}, {2, 3}}));
}

TEST(Predicate, SerialAndParallelDetectionAgree) {
    const auto segs = three_segments();
    const auto subs = all_same_shot();
    const auto a = detect_conflicts(subs, segs, chain(3), TaskFamily::on_beat, {}, false);
    const auto b = detect_conflicts(subs, segs, chain(3), TaskFamily::on_beat, {}, true);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.edges.size(), 3u); // (0,2) is an ancestor pair
}

TEST(Controller, WindowAndAggregate) {
    auto be = make_scripted_backend(7);
    agent::TokenLedger l;
    std::vector<planner::CompletedTask> done;
    for (int i = 0; i < 7; ++i) {
        TimelineMemo m;
        m.used_clip_spans = {{"v", i * 3.0, i * 3.0 + 2}};
        m.last_shot_summary = "shot " + std::to_string(i);
        done.push_back({i, i, m});
    }
    std::vector<VideoMeta> vids = {bt::video("beachvid", 10, {bt::scene(0, 5, "x", {"beach"})}),
                                   bt::video("cityvid", 10, {bt::scene(0, 5, "y", {"city"})})};
    const planner::TaskNode node{7, 7, "segment 7: theme=beach party; emotion=joyful", planner::TaskStatus::pending};
    const EditIntent in{"beach party", IntentLevel::general, TaskFamily::on_beat};
    const auto b = build_context_bundle(node, segment(7, 0, 4), done, vids, in, *be, l, {true, 5});
    ASSERT_EQ(b.prior_summaries.size(), 6u);
    EXPECT_TRUE(b.prior_summaries[0].aggregate);
    EXPECT_EQ(b.prior_summaries[0].segments, (std::vector<int>{0, 1}));
    EXPECT_EQ(b.prior_summaries[5].segments, (std::vector<int>{6}));
    EXPECT_EQ(b.retrieval_scope, (std::set<std::string>{"beachvid"}));
    for (const auto &d : b.prior_summaries) EXPECT_LE(text::tokenize(d.text).size(), kMemoSummaryWords);

    agent::TokenLedger off_ledger;
    const auto off = build_context_bundle(node, segment(7, 0, 4), done, vids, in, *be, off_ledger, {false, 5});
    EXPECT_TRUE(off.prior_summaries.empty());
    EXPECT_EQ(off.retrieval_scope.size(), 2u);
    EXPECT_EQ(off_ledger.total(), 0);
}

TEST(Negotiation, EdgelessIsNoOp) {
    auto be = make_scripted_backend(7);
    agent::TokenLedger l;
    const auto segs = three_segments();
    std::vector<SubTimeline> subs = {sub(0, {unit("a", 0, 2, 0)}), sub(1, {unit("b", 0, 2, 2)}), sub(2, {unit("c", 0, 2, 4)})};
    const auto before = subs;
    NoOpRepairer rep;
    const auto r = negotiate(subs, context(segs, 3), rep, *be, l);
    EXPECT_EQ(r.terminal, "no_conflicts");
    EXPECT_EQ(r.iterations, 0);
    EXPECT_EQ(subs, before);
}

TEST(Negotiation, RepeatedShotsResolved) {
    auto be = make_scripted_backend(7);
    agent::TokenLedger l;
    const auto segs = three_segments();
    auto subs = all_same_shot();
    FreshShotRepairer rep;
    const auto r = negotiate(subs, context(segs, 3), rep, *be, l);
    EXPECT_EQ(r.terminal, "resolved");
    EXPECT_EQ(r.residual_edges, 0);
    EXPECT_EQ(r.initial_edges, 3);
    EXPECT_TRUE(detect_conflicts(subs, segs, chain(3), TaskFamily::on_beat).edgeless());
}

TEST(Negotiation, AdversarialFixturesStopWithinBudget) {
    const auto segs = three_segments();
    for (int budget : {1, 3, 40}) {
        for (int kind = 0; kind < 2; ++kind) {
            auto be = make_scripted_backend(7);
            agent::TokenLedger l;
            auto subs = all_same_shot();
            NoOpRepairer noop;
            CreepRepairer creep;
            RegionRepairer &rep = kind == 0 ? static_cast<RegionRepairer &>(noop) : creep;
            NegotiationParams p;
            p.budget = budget;
            const auto r = negotiate(subs, context(segs, 3), rep, *be, l, p);
            EXPECT_LE(r.iterations, budget);
            EXPECT_GT(r.residual_edges, 0);
            EXPECT_TRUE(r.terminal == "budget" || r.terminal == "stalled") << r.terminal;
            EXPECT_EQ(r.to_json()["residual_edges"], r.residual_edges);
        }
    }
    auto be = make_scripted_backend(7);
    agent::TokenLedger l;
    auto subs = all_same_shot();
    NoOpRepairer noop;
    NegotiationParams zero;
    zero.budget = 0;
    EXPECT_THROW((void)negotiate(subs, context(segs, 3), noop, *be, l, zero), PreconditionError);
}

TEST(Negotiation, SinglePassAndPairModes) {
    const auto segs = three_segments();
    auto be = make_scripted_backend(7);
    agent::TokenLedger l;
    auto subs = all_same_shot();
    NoOpRepairer noop;
    NegotiationParams p;
    p.merge = false;
    EXPECT_EQ(negotiate(subs, context(segs, 3), noop, *be, l, p).terminal, "single_pass");
    p.merge = true;
    p.decompose = false;
    FreshShotRepairer fresh;
    const auto r = negotiate(subs, context(segs, 3), fresh, *be, l, p);
    EXPECT_EQ(r.terminal, "resolved");
    for (auto s : r.region_sizes) EXPECT_EQ(s, 2u);
}

TEST(GlobalRefine, TrimsTailAndIsIdempotent) {
    const auto segs = three_segments();
    const MusicTrack track{"m", 5.0, std::nullopt, std::nullopt};
    const auto t = compose_timelines({sub(0, {unit("a", 0, 2, 0)}), sub(1, {unit("b", 0, 2, 2)}),
                                      sub(2, {unit("c", 0, 2, 4)})},
                                     "m");
    const auto r = global_refine(t, track, segs);
    EXPECT_NEAR(timeline_duration(r), 5.0, 1e-9);
    EXPECT_EQ(global_refine(r, track, segs), r);
    EXPECT_TRUE(global_refine(Timeline{}, track, segs).segments.empty());
}

TEST(GlobalRefine, DropsTooShortTail) {
    const auto segs = three_segments();
    const MusicTrack track{"m", 4.5, std::nullopt, std::nullopt};
    const auto t = compose_timelines({sub(0, {unit("a", 0, 2, 0)}), sub(1, {unit("b", 0, 2, 2)}),
                                      sub(2, {unit("c", 0, 1, 4), unit("d", 0, 1, 5)})},
                                     "m");
    const auto r = global_refine(t, track, segs);
    // d goes whole; c would be left with 0.5 s, under min_clip, so it goes too
    EXPECT_TRUE(r.segments[2].units.empty());
    EXPECT_NEAR(timeline_duration(r), 4.0, 1e-9);
    EXPECT_LE(std::abs(timeline_duration(r) - track.duration), 0.5 + 1e-9); // one beat interval
}

TEST(GlobalRefine, RandomIdempotenceProperty) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const auto segs = three_segments();
        std::vector<SubTimeline> subs;
        double at = 0.0;
        for (int i = 0; i < 3; ++i) {
            std::vector<TimelineUnit> us;
            const double end = 2.0 * (i + 1);
            while (at < end - 0.8) {
                const double d = std::min(end + 0.3 - at, 0.8 + 0.1 * static_cast<int>(rng() % 8));
                us.push_back(unit("v" + std::to_string(rng() % 9), 10.0 * (rng() % 5), 10.0 * (rng() % 5) + d, at));
                at += d;
            }
            subs.push_back(sub(i, us));
        }
        Timeline t;
        try {
            t = compose_timelines(subs, "m");
        } catch (const CompositionError &) {
            continue;
        }
        const MusicTrack track{"m", 6.0 - 0.5 * static_cast<int>(rng() % 3), std::nullopt, std::nullopt};
        const auto once = global_refine(t, track, segs);
        EXPECT_EQ(global_refine(once, track, segs), once);
        EXPECT_LE(timeline_duration(once), track.duration + 1e-6);
    }
}
