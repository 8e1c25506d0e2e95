// SPDX-License-Identifier: Apache-2.0
#include "beatcut/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "beatcut/errors.hpp"
#include "beatcut/text.hpp"

namespace beatcut {

void validate(const SubTimeline &sub, const MusicSegment *segment) {
    const auto where = "segment " + std::to_string(sub.segment_index);
    if (sub.segment_index < 0) throw ValidationError(where + ": negative index");
    for (std::size_t k = 0; k < sub.units.size(); ++k) {
        const auto &u = sub.units[k];
        validate(u);
        if (k > 0 && u.timeline_start < sub.units[k - 1].timeline_end() - kTimeEps)
            throw ValidationError(where + ": units " + std::to_string(k - 1) + " and " +
                                  std::to_string(k) + " overlap or are unsorted");
        if (segment && (u.timeline_start < segment->start - kTimeEps ||
                        u.timeline_end() > segment->end + kTimeEps))
            throw ValidationError(where + ": unit " + std::to_string(k) +
                                  " leaves the music segment");
    }
    if (text::count_words(sub.memo.last_shot_summary) > kMemoSummaryWords)
        throw ValidationError(where + ": memo summary exceeds word cap");
    if (sub.memo.revision_count < 0) throw ValidationError(where + ": negative revision count");
}

Timeline compose_timelines(std::vector<SubTimeline> subtimelines, std::string music_ref) {
    std::sort(subtimelines.begin(), subtimelines.end(),
              [](const auto &a, const auto &b) { return a.segment_index < b.segment_index; });
    for (std::size_t i = 0; i < subtimelines.size(); ++i) {
        const int idx = subtimelines[i].segment_index;
        if (i > 0 && idx == subtimelines[i - 1].segment_index)
            throw CompositionError("duplicate segment index " + std::to_string(idx));
        if (idx != static_cast<int>(i))
            throw CompositionError("segment indices must be contiguous from 0; missing " +
                                   std::to_string(i));
        try {
            validate(subtimelines[i]);
        } catch (const ValidationError &e) {
            throw CompositionError(e.what());
        }
    }
    // Every unit of an earlier segment must end before any later unit starts.
    double prev_end = -std::numeric_limits<double>::infinity();
    int prev_seg = -1;
    std::size_t prev_unit = 0;
    for (const auto &sub : subtimelines) {
        for (std::size_t k = 0; k < sub.units.size(); ++k) {
            const auto &u = sub.units[k];
            if (prev_seg >= 0 && prev_seg != sub.segment_index &&
                u.timeline_start < prev_end - kTimeEps) {
                throw CompositionError(
                    "units overlap across segments: segment " + std::to_string(prev_seg) +
                    " unit " + std::to_string(prev_unit) + " and segment " +
                    std::to_string(sub.segment_index) + " unit " + std::to_string(k));
            }
            prev_end = u.timeline_end();
            prev_seg = sub.segment_index;
            prev_unit = k;
        }
    }
    return Timeline{std::move(subtimelines), std::move(music_ref)};
}

double filled_duration(const SubTimeline &sub) noexcept {
    double d = 0.0;
    for (const auto &u : sub.units) d += u.duration();
    return d;
}

double timeline_duration(const Timeline &timeline) noexcept {
    double d = 0.0;
    for (const auto &s : timeline.segments) d += filled_duration(s);
    return d;
}

std::vector<TimelineUnit> flatten(const Timeline &timeline) {
    std::vector<TimelineUnit> out;
    for (const auto &s : timeline.segments) out.insert(out.end(), s.units.begin(), s.units.end());
    return out;
}

std::size_t unit_count(const Timeline &timeline) noexcept {
    std::size_t n = 0;
    for (const auto &s : timeline.segments) n += s.units.size();
    return n;
}

std::vector<double> internal_cuts(const SubTimeline &sub) {
    std::vector<double> cuts;
    for (std::size_t k = 0; k + 1 < sub.units.size(); ++k) cuts.push_back(sub.units[k].timeline_end());
    return cuts;
}

std::optional<double> nearest_beat(double t, std::span<const double> beats) noexcept {
    if (beats.empty()) return std::nullopt;
    auto it = std::lower_bound(beats.begin(), beats.end(), t);
    if (it == beats.end()) return beats.back();
    if (it == beats.begin()) return *it;
    const double hi = *it;
    const double lo = *(it - 1);
    return (t - lo <= hi - t) ? lo : hi;
}

double distance_to_nearest_beat(double t, std::span<const double> beats) noexcept {
    auto b = nearest_beat(t, beats);
    return b ? std::abs(*b - t) : std::numeric_limits<double>::infinity();
}

std::optional<Emotion> dominant_emotion(const SubTimeline &sub) {
    std::map<Emotion, double> time;
    for (const auto &u : sub.units) {
        if (u.emotion) time[*u.emotion] += u.duration();
    }
    std::optional<Emotion> best;
    double best_t = 0.0;
    for (auto e : kAllEmotions) {
        auto it = time.find(e);
        if (it != time.end() && it->second > best_t + kTimeEps) {
            best = e;
            best_t = it->second;
        }
    }
    return best;
}

std::set<std::string> main_characters(const SubTimeline &sub) {
    std::map<std::string, double> time;
    const double total = filled_duration(sub);
    for (const auto &u : sub.units) {
        for (const auto &c : u.characters) time[c] += u.duration();
    }
    std::set<std::string> out;
    for (const auto &[c, t] : time) {
        if (t >= 0.3 * total - kTimeEps) out.insert(c);
    }
    if (out.empty() && !time.empty()) {
        auto best = std::max_element(time.begin(), time.end(), [](const auto &a, const auto &b) {
            return a.second < b.second;
        });
        out.insert(best->first);
    }
    return out;
}

TimelineMemo recompute_memo(const SubTimeline &sub) {
    TimelineMemo memo;
    memo.revision_count = sub.memo.revision_count;
    for (const auto &u : sub.units) memo.used_clip_spans.push_back(u.span());
    memo.dominant_emotion = dominant_emotion(sub);
    memo.main_characters = main_characters(sub);
    if (!sub.units.empty()) {
        const auto &last = sub.units.back();
        memo.last_shot_summary = text::cap_words(
            last.caption.empty() ? text::join({last.tags.begin(), last.tags.end()}, " ")
                                 : last.caption,
            kMemoSummaryWords);
    }
    return memo;
}

SubTimeline relayout(SubTimeline sub, double start) {
    double t = start;
    for (auto &u : sub.units) {
        u.timeline_start = t;
        t += u.duration();
    }
    return sub;
}

} // namespace beatcut
