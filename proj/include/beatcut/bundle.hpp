// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "beatcut/types.hpp"

namespace beatcut {

/// Condensed view of finished segments. Deliberately has no unit list: the
/// only per-shot information is the set of spans already on the timeline.
struct Digest {
    std::vector<int> segments; // one index, or several for the aggregate
    std::string text;          // at most kMemoSummaryWords words
    std::vector<ClipSpan> used_spans;
    bool aggregate = false;

    bool operator==(const Digest &) const = default;
};

/// Everything one inner-loop task is allowed to observe.
struct ContextBundle {
    int segment_index = 0;
    MusicSegment segment;
    std::string instruction;
    std::string objective;
    std::vector<Digest> prior_summaries;
    std::set<std::string> retrieval_scope;
    TaskFamily family = TaskFamily::on_beat;

    // Set only for repairs requested during negotiation.
    std::vector<ClipSpan> avoid_spans;
    std::optional<Emotion> target_emotion;
    std::set<std::string> target_characters;

    bool operator==(const ContextBundle &) const = default;
};

} // namespace beatcut
