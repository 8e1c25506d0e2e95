// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "beatcut/types.hpp"

namespace beatcut {

/// Weights of the closed-form global objective.
struct ScorerConfig {
    double p_dup = 1.0;        // per duplicated source span across two segments
    double p_emo = 0.5;        // per antagonistic adjacent segment pair
    double w_dur = 0.2;        // per second of total duration mismatch
    double beat_bonus = 0.2;   // weight of the on-beat cut fraction in s_i
    double epsilon_beat = 0.08;

    bool operator==(const ScorerConfig &) const = default;
};

/// s_i = mean unit relevance + beat_bonus · (1 − offbeat fraction); 0 for an
/// empty segment.
[[nodiscard]] double segment_quality(const SubTimeline &sub, const MusicSegment &segment,
                                     const ScorerConfig &config);

/// Fraction of internal cuts farther than epsilon from every segment beat.
/// Zero when the segment has fewer than two beats or there are no cuts.
[[nodiscard]] double offbeat_fraction(const SubTimeline &sub, const MusicSegment &segment,
                                      double epsilon_beat);

/// Number of (a, b) unit pairs, a in `p`, b in `q`, that repeat a shot.
[[nodiscard]] int duplicate_span_count(const SubTimeline &p, const SubTimeline &q);

/// Dominant emotions antagonistic while the music emotions are not.
[[nodiscard]] bool emotion_clash(const SubTimeline &p, const SubTimeline &q,
                                 const MusicSegment &mp, const MusicSegment &mq);

/// g_ij ≤ 0. The emotion term only applies to timeline-adjacent segments.
[[nodiscard]] double pairwise_penalty(const SubTimeline &p, const SubTimeline &q,
                                      const MusicSegment &mp, const MusicSegment &mq,
                                      const ScorerConfig &config);

/// Decomposes the global score into local, pairwise and timeline-level terms.
/// Throws ScoreError when segment counts differ.
[[nodiscard]] ScoreBreakdown global_score(const Timeline &timeline, const EditIntent &intent,
                                          std::span<const MusicSegment> segments,
                                          const ScorerConfig &config = {});

} // namespace beatcut
