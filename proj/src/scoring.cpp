// SPDX-License-Identifier: Apache-2.0
#include "beatcut/scoring.hpp"

#include <cmath>

#include "beatcut/errors.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut {

double offbeat_fraction(const SubTimeline &sub, const MusicSegment &segment, double epsilon_beat) {
    const auto &beats = segment.attributes.beats;
    if (beats.size() < 2) return 0.0;
    const auto cuts = internal_cuts(sub);
    if (cuts.empty()) return 0.0;
    int off = 0;
    for (double c : cuts) {
        if (distance_to_nearest_beat(c, beats) > epsilon_beat + kTimeEps) ++off;
    }
    return static_cast<double>(off) / static_cast<double>(cuts.size());
}

double segment_quality(const SubTimeline &sub, const MusicSegment &segment,
                       const ScorerConfig &config) {
    if (sub.units.empty()) return 0.0;
    double rel = 0.0;
    for (const auto &u : sub.units) rel += u.relevance;
    rel /= static_cast<double>(sub.units.size());
    return rel + config.beat_bonus * (1.0 - offbeat_fraction(sub, segment, config.epsilon_beat));
}

int duplicate_span_count(const SubTimeline &p, const SubTimeline &q) {
    int n = 0;
    for (const auto &a : p.units) {
        for (const auto &b : q.units) {
            if (is_duplicate(a.span(), b.span())) ++n;
        }
    }
    return n;
}

bool emotion_clash(const SubTimeline &p, const SubTimeline &q, const MusicSegment &mp,
                   const MusicSegment &mq) {
    const auto ep = dominant_emotion(p);
    const auto eq = dominant_emotion(q);
    if (!ep || !eq) return false;
    return antagonistic(*ep, *eq) && !antagonistic(mp.attributes.emotion, mq.attributes.emotion);
}

double pairwise_penalty(const SubTimeline &p, const SubTimeline &q, const MusicSegment &mp,
                        const MusicSegment &mq, const ScorerConfig &config) {
    double g = -config.p_dup * duplicate_span_count(p, q);
    if (std::abs(p.segment_index - q.segment_index) == 1 && emotion_clash(p, q, mp, mq))
        g -= config.p_emo;
    return g;
}

ScoreBreakdown global_score(const Timeline &timeline, const EditIntent &intent,
                            std::span<const MusicSegment> segments, const ScorerConfig &config) {
    validate(intent);
    if (timeline.segments.size() != segments.size())
        throw ScoreError("timeline has " + std::to_string(timeline.segments.size()) +
                         " segments but the music has " + std::to_string(segments.size()));
    ScoreBreakdown out;
    const auto m = timeline.segments.size();
    double total = 0.0;
    double music = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double s = segment_quality(timeline.segments[i], segments[i], config);
        out.local_scores.push_back(s);
        total += s;
        music += segments[i].length();
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = i + 1; j < m; ++j) {
            const double g = pairwise_penalty(timeline.segments[i], timeline.segments[j],
                                              segments[i], segments[j], config);
            out.pairwise_penalties[{static_cast<int>(i), static_cast<int>(j)}] = g;
            total += g;
        }
    }
    out.global_term = -config.w_dur * std::abs(timeline_duration(timeline) - music);
    total += out.global_term;
    out.total = total;
    return out;
}

} // namespace beatcut
