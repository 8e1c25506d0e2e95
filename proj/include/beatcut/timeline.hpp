// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beatcut/types.hpp"

namespace beatcut {

/// Merges per-segment results into one timeline ordered by segment index.
/// Throws CompositionError on duplicate indices, invalid sub-timelines or
/// units overlapping across a segment boundary.
[[nodiscard]] Timeline compose_timelines(std::vector<SubTimeline> subtimelines,
                                         std::string music_ref);

/// Checks SubTimeline invariants (sorted, non-overlapping, valid units).
/// If `segment` is given, also that every unit lies inside it.
void validate(const SubTimeline &sub, const MusicSegment *segment = nullptr);

[[nodiscard]] double filled_duration(const SubTimeline &sub) noexcept;

/// Sum of unit durations: the length a renderer produces by concatenation.
[[nodiscard]] double timeline_duration(const Timeline &timeline) noexcept;

[[nodiscard]] std::vector<TimelineUnit> flatten(const Timeline &timeline);
[[nodiscard]] std::size_t unit_count(const Timeline &timeline) noexcept;

/// Cut points strictly inside the sub-timeline (end of unit k, k < n-1).
[[nodiscard]] std::vector<double> internal_cuts(const SubTimeline &sub);

/// Distance to the nearest beat; +inf for an empty beat list.
[[nodiscard]] double distance_to_nearest_beat(double t, std::span<const double> beats) noexcept;
[[nodiscard]] std::optional<double> nearest_beat(double t, std::span<const double> beats) noexcept;

/// Emotion with the largest screen time; ties resolve to taxonomy order.
[[nodiscard]] std::optional<Emotion> dominant_emotion(const SubTimeline &sub);

/// Characters holding at least 30% of screen time, or the single most-seen
/// character when none does.
[[nodiscard]] std::set<std::string> main_characters(const SubTimeline &sub);

/// Rebuilds the derived memo fields; keeps revision_count.
[[nodiscard]] TimelineMemo recompute_memo(const SubTimeline &sub);

/// Copy of `sub` with units re-laid back to back from `start`.
[[nodiscard]] SubTimeline relayout(SubTimeline sub, double start);

} // namespace beatcut
