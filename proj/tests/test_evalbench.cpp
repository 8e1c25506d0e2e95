// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/evalbench.hpp"

using namespace beatcut;
using namespace beatcut::eval;

namespace {

TimelineUnit unit(double in, double out, double at, std::set<std::string> who = {},
                  std::optional<Emotion> emo = std::nullopt, std::string caption = "shot") {
    TimelineUnit u;
    u.source_id = "v";
    u.source_in = in;
    u.source_out = out;
    u.timeline_start = at;
    u.characters = std::move(who);
    u.emotion = emo;
    u.caption = std::move(caption);
    return u;
}

MusicTrack grid_track(double duration, std::vector<AnnotatedSegment> segs) {
    MusicTrack t;
    t.music_id = "m";
    t.duration = duration;
    MusicAnnotation a;
    for (double b = 0.0; b <= duration + 1e-9; b += 0.5) a.beats.push_back(b);
    a.segments = std::move(segs);
    t.annotation = a;
    return t;
}

// Two on-beat segments of 2 s each, one unit per 0.5 s.
Timeline four_by_two(Emotion e0, Emotion e1) {
    Timeline t;
    for (int s = 0; s < 2; ++s) {
        SubTimeline sub;
        sub.segment_index = s;
        for (int k = 0; k < 4; ++k) {
            const double at = 2.0 * s + 0.5 * k;
            sub.units.push_back(unit(at, at + 0.5, at, {}, s == 0 ? e0 : e1, "beach runner"));
        }
        t.segments.push_back(sub);
    }
    return t;
}

std::string line(std::string_view config, double music, double video = 100.0) {
    std::ostringstream o;
    o << R"({"id":"x-)" << config << R"(","config":")" << config << R"(","intent":"a walk",)"
      << R"("music":{"id":"m","duration":)" << music << R"(},"videos":[{"id":"v","duration":)" << video << "}]}";
    return o.str();
}

} // namespace

TEST(Taxonomy, ExactlyEightAdmitted) {
    const auto &adm = admitted_configs();
    std::vector<std::string> keys;
    for (const auto &c : adm) keys.push_back(c.key());
    EXPECT_EQ(keys, (std::vector<std::string>{"O-Sh-GP", "O-Me-GP", "O-Me-DP", "O-Lo-DP", "S-Me-GP", "S-Lo-GP",
                                              "S-Me-DP", "S-Lo-DP"}));
    int admitted_count = 0;
    for (const auto &c : all_configs()) admitted_count += admitted(c);
    EXPECT_EQ(all_configs().size(), 12u);
    EXPECT_EQ(admitted_count, 8);
}

TEST(Taxonomy, ExcludedCombosNamed) {
    for (const char *key : {"O-Lo-GP", "O-Sh-DP", "S-Sh-GP", "S-Sh-DP"}) {
        try {
            check_admitted(parse_config(key));
            FAIL() << key;
        } catch (const ValidationError &e) {
            EXPECT_NE(std::string(e.what()).find(key), std::string::npos) << e.what();
        }
    }
    EXPECT_THROW((void)parse_config("X-Sh-GP"), ValidationError);
    EXPECT_THROW((void)parse_config("O-Sh"), ValidationError);
}

TEST(Taxonomy, LengthClassThresholds) {
    EXPECT_EQ(length_class(29.9), MusicLength::Sh);
    EXPECT_EQ(length_class(30.0), MusicLength::Me);
    EXPECT_EQ(length_class(90.0), MusicLength::Me);
    EXPECT_EQ(length_class(90.1), MusicLength::Lo);
}

TEST(Loader, ShippedManifest) {
    const auto samples = load_benchmark(BEATCUT_TEST_DATA "/bench_manifest.jsonl");
    EXPECT_EQ(samples.size(), 319u);
    const auto stats = benchmark_stats(samples);
    ASSERT_EQ(stats.size(), 8u);
    const std::vector<std::tuple<std::string, int, double, double>> expect = {
        {"O-Sh-GP", 45, 27.9, 1.7},  {"O-Me-GP", 35, 83.7, 3.1},  {"O-Me-DP", 35, 83.7, 3.1},
        {"O-Lo-DP", 44, 154.2, 5.5}, {"S-Me-GP", 37, 85.6, 2.9},  {"S-Lo-GP", 45, 182.1, 5.2},
        {"S-Me-DP", 34, 85.1, 2.9},  {"S-Lo-DP", 44, 179.8, 5.2}};
    for (std::size_t i = 0; i < expect.size(); ++i) {
        const auto &[key, n, music, hours] = expect[i];
        EXPECT_EQ(stats[i].config.key(), key);
        EXPECT_EQ(stats[i].samples, n);
        EXPECT_NEAR(stats[i].avg_music_seconds, music, 0.05) << key;
        EXPECT_NEAR(stats[i].avg_video_hours, hours, 0.05) << key;
    }
    EXPECT_NE(format_stats(stats).find("O-Sh-GP"), std::string::npos);
}

TEST(Loader, RejectsBadSamples) {
    std::istringstream excluded(line("S-Sh-GP", 20));
    try {
        (void)parse_benchmark(excluded);
        FAIL();
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("S-Sh-GP"), std::string::npos);
    }
    std::istringstream wrong_class(line("O-Sh-GP", 45));
    EXPECT_THROW((void)parse_benchmark(wrong_class), ValidationError);
    std::istringstream garbage("{not json");
    EXPECT_THROW((void)parse_benchmark(garbage), Error);
    std::istringstream empty("\n\n");
    const auto none = parse_benchmark(empty);
    EXPECT_TRUE(none.empty());
    EXPECT_TRUE(benchmark_stats(none).empty());
    EXPECT_THROW((void)load_benchmark("/nonexistent/bench.jsonl"), IngestError);

    std::istringstream ok(line("O-Me-DP", 60) + "\n" + line("O-Sh-GP", 12.5));
    const auto two = parse_benchmark(ok);
    ASSERT_EQ(two.size(), 2u);
    EXPECT_EQ(two[0].intent.level, IntentLevel::detailed);
    EXPECT_EQ(two[1].intent.family, TaskFamily::on_beat);
}

TEST(Evidence, FencepostAndAlignment) {
    Timeline t;
    SubTimeline sub;
    for (int k = 0; k < 5; ++k) sub.units.push_back(unit(k, k + 1.0, k));
    sub.units[1].source_out = 1.75; // cut at 1.75 is 0.25 off the grid
    for (int k = 2; k < 5; ++k) sub.units[k].timeline_start -= 0.25;
    t.segments.push_back(sub);
    const auto ev = extract_evidence(t, grid_track(5.0, {{0.0, 5.0, Emotion::calm, std::nullopt}}), {});
    ASSERT_EQ(ev.cuts.size(), 4u);
    EXPECT_EQ(ev.unit_count, 5u);
    EXPECT_NEAR(ev.alignment[0].distance, 0.0, 1e-12);
    EXPECT_NEAR(ev.alignment[1].distance, 0.25, 1e-12);
    EXPECT_NEAR(ev.duration, 4.75, 1e-12);
}

TEST(Evidence, IdentitySwitches) {
    using S = std::set<std::string>;
    EXPECT_EQ(identity_switches({S{"A"}, S{"B"}, S{"A"}}), 2);
    EXPECT_EQ(identity_switches({S{"A"}, S{}, S{"B"}}), 1); // units without anyone are skipped
    EXPECT_EQ(identity_switches({S{"A", "B"}, S{"B"}, S{"C", "B"}}), 0);
    EXPECT_EQ(identity_switches({}), 0);

    Timeline t;
    SubTimeline sub;
    sub.units = {unit(0, 1, 0, {"A"}), unit(1, 2, 1, {"B"}), unit(2, 3, 2, {"A"})};
    t.segments.push_back(sub);
    const auto ev = extract_evidence(t, grid_track(3.0, {{0.0, 3.0, std::nullopt, std::nullopt}}), {});
    EXPECT_EQ(ev.identity_switches, 2);
    EXPECT_EQ(ev.character_transitions, 2);
}

TEST(Judge, OnBeatProxies) {
    agent::ScriptedBackend be(1);
    register_scripted(be);
    agent::TokenLedger l;
    const auto track = grid_track(4.0, {{0.0, 2.0, Emotion::joyful, std::nullopt}, {2.0, 4.0, Emotion::tense, std::nullopt}});
    const EditIntent intent{"beach runner", IntentLevel::general, TaskFamily::on_beat};

    // all cuts on beats, both segments matching, every keyword covered
    const auto all = judge(extract_evidence(four_by_two(Emotion::joyful, Emotion::tense), track, {}), intent,
                           TaskFamily::on_beat, be, l);
    EXPECT_EQ(all.scores.at("rhythm_alignment"), 5.0);
    EXPECT_EQ(all.scores.at("emotion_alignment"), 5.0);
    EXPECT_EQ(all.scores.at("instruction_following"), 5.0);
    EXPECT_EQ(all.scores.at("overall_quality"), 5.0);

    // half the segments match
    const auto half = judge(extract_evidence(four_by_two(Emotion::joyful, Emotion::calm), track, {}), intent,
                            TaskFamily::on_beat, be, l);
    EXPECT_EQ(half.scores.at("emotion_alignment"), 3.0);

    // nothing of the intent in the summaries
    const EditIntent other{"volcano dragons", IntentLevel::general, TaskFamily::on_beat};
    const auto none = judge(extract_evidence(four_by_two(Emotion::joyful, Emotion::tense), track, {}), other,
                            TaskFamily::on_beat, be, l);
    EXPECT_EQ(none.scores.at("instruction_following"), 1.0);
    EXPECT_NEAR(none.scores.at("overall_quality"), (5.0 + 5.0 + 1.0) / 3.0, 1e-12);
    EXPECT_GT(l.total(), 0);
}

TEST(Judge, StoryProxiesAndErrors) {
    agent::ScriptedBackend be(1);
    register_scripted(be);
    agent::TokenLedger l;
    Timeline t;
    SubTimeline sub;
    sub.units = {unit(0, 1, 0, {"A"}, std::nullopt, "ava arrives"), unit(1, 2, 1, {"B"}, std::nullopt, "storm"),
                 unit(2, 3, 2, {"A"}, std::nullopt, "harbor")};
    t.segments.push_back(sub);
    const auto ev = extract_evidence(t, grid_track(3.0, {{0.0, 3.0, std::nullopt, std::nullopt}}), {});
    const EditIntent in{"ava story. segment 0: ava arrives. segment 1: the chase", IntentLevel::detailed,
                        TaskFamily::story_driven};
    const auto r = judge(ev, in, TaskFamily::story_driven, be, l);
    EXPECT_EQ(r.scores.size(), 4u);
    EXPECT_EQ(r.scores.at("story_completeness"), 3.0);   // 1 of 2 directives
    EXPECT_EQ(r.scores.at("character_continuity"), 1.0); // 2 switches over 2 transitions
    for (const auto &[d, v] : r.scores) {
        EXPECT_GE(v, 1.0) << d;
        EXPECT_LE(v, 5.0) << d;
    }
    EXPECT_THROW((void)judge(ev, in, TaskFamily::on_beat, be, l), JudgeError);
}

TEST(Judge, EmptyTimelineFloors) {
    agent::ScriptedBackend be(1);
    register_scripted(be);
    agent::TokenLedger l;
    const auto ev = extract_evidence(Timeline{}, grid_track(2.0, {}), {});
    const auto r = judge(ev, {"x", IntentLevel::general, TaskFamily::on_beat}, TaskFamily::on_beat, be, l);
    for (const auto &[d, v] : r.scores) EXPECT_EQ(v, 1.0) << d;
}

TEST(Aggregate, MeansByConfigAndFamily) {
    auto rep = [](TaskFamily f, double v) {
        JudgeReport r;
        r.family = f;
        for (const auto &d : dimensions(f)) r.scores[d] = v;
        return r;
    };
    const std::vector<ScoredSample> s = {
        {"a", parse_config("O-Me-GP"), rep(TaskFamily::on_beat, 2.0)},
        {"b", parse_config("O-Sh-GP"), rep(TaskFamily::on_beat, 4.0)},
        {"c", parse_config("O-Sh-GP"), rep(TaskFamily::on_beat, 5.0)},
        {"d", parse_config("S-Lo-DP"), rep(TaskFamily::story_driven, 3.0)},
    };
    const auto r = aggregate_report(s);
    ASSERT_EQ(r.by_config.size(), 3u);
    EXPECT_EQ(r.by_config[0].group, "O-Sh-GP"); // table order, not input order
    EXPECT_EQ(r.by_config[0].samples, 2);
    EXPECT_EQ(r.by_config[0].means.at("rhythm_alignment"), 4.5);
    EXPECT_EQ(r.by_config[1].group, "O-Me-GP");
    ASSERT_EQ(r.by_family.size(), 2u);
    EXPECT_NEAR(r.by_family[0].means.at("overall_quality"), 11.0 / 3.0, 1e-12);
    EXPECT_EQ(r.by_family[1].means.at("story_completeness"), 3.0);
    EXPECT_EQ(r.by_family[1].means.count("rhythm_alignment"), 0u);
    EXPECT_FALSE(r.to_table().empty());
    EXPECT_THROW((void)aggregate_report(std::vector<ScoredSample>{}), ReportError);
}
