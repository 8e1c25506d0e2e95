// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace beatcut {

/// All time comparisons go through this tolerance (seconds).
inline constexpr double kTimeEps = 1e-6;

/// Two spans of the same source count as the same shot above this overlap.
inline constexpr double kDuplicateOverlap = 0.5;

enum class Emotion { joyful, energetic, tense, sad, calm, epic, neutral };

inline constexpr Emotion kAllEmotions[] = {Emotion::joyful, Emotion::energetic, Emotion::tense,
                                           Emotion::sad,    Emotion::calm,      Emotion::epic,
                                           Emotion::neutral};

[[nodiscard]] std::string_view to_string(Emotion e) noexcept;
/// Throws ValidationError on labels outside the closed taxonomy.
[[nodiscard]] Emotion parse_emotion(std::string_view label);
[[nodiscard]] std::optional<Emotion> try_parse_emotion(std::string_view label) noexcept;

/// Symmetric. Pairs: joyful/sad, calm/tense, calm/energetic.
[[nodiscard]] bool antagonistic(Emotion a, Emotion b) noexcept;

enum class IntentLevel { general, detailed };
enum class TaskFamily { on_beat, story_driven };
enum class EnergyProfile { low, mid, high };

[[nodiscard]] std::string_view to_string(IntentLevel v) noexcept;
[[nodiscard]] std::string_view to_string(TaskFamily v) noexcept;
[[nodiscard]] std::string_view to_string(EnergyProfile v) noexcept;
[[nodiscard]] IntentLevel parse_intent_level(std::string_view s);
[[nodiscard]] TaskFamily parse_task_family(std::string_view s);

struct EditIntent {
    std::string text;
    IntentLevel level = IntentLevel::general;
    TaskFamily family = TaskFamily::on_beat;

    bool operator==(const EditIntent &) const = default;
};

/// Throws ValidationError if the text is empty.
void validate(const EditIntent &intent);

struct ClipSpan {
    std::string source_id;
    double in = 0.0;
    double out = 0.0;

    bool operator==(const ClipSpan &) const = default;
};

/// Overlap in seconds; zero for different sources.
[[nodiscard]] double span_overlap(const ClipSpan &a, const ClipSpan &b) noexcept;
[[nodiscard]] bool is_duplicate(const ClipSpan &a, const ClipSpan &b) noexcept;

/// One placed subclip. `caption` and `relevance` travel with the unit so the
/// scorer and the judge can work from the timeline alone.
struct TimelineUnit {
    std::string source_id;
    double source_in = 0.0;
    double source_out = 0.0;
    double timeline_start = 0.0;
    std::set<std::string> tags;
    std::set<std::string> characters;
    std::optional<Emotion> emotion;
    std::string caption;
    double relevance = 0.0;

    [[nodiscard]] double duration() const noexcept { return source_out - source_in; }
    [[nodiscard]] double timeline_end() const noexcept { return timeline_start + duration(); }
    [[nodiscard]] ClipSpan span() const { return {source_id, source_in, source_out}; }

    bool operator==(const TimelineUnit &) const = default;
};

void validate(const TimelineUnit &unit);

inline constexpr std::size_t kMemoSummaryWords = 60;

struct TimelineMemo {
    std::vector<ClipSpan> used_clip_spans;
    std::optional<Emotion> dominant_emotion;
    std::set<std::string> main_characters;
    std::string last_shot_summary;
    int revision_count = 0;

    bool operator==(const TimelineMemo &) const = default;
};

struct SubTimeline {
    int segment_index = 0;
    std::vector<TimelineUnit> units;
    TimelineMemo memo;

    bool operator==(const SubTimeline &) const = default;
};

struct Timeline {
    std::vector<SubTimeline> segments;
    std::string music_ref;

    bool operator==(const Timeline &) const = default;
};

struct SegmentAttributes {
    EnergyProfile energy_profile = EnergyProfile::low;
    double mean_energy = 0.0;
    Emotion emotion = Emotion::neutral;
    std::vector<double> beats;
    double tempo_bpm = 0.0;

    bool operator==(const SegmentAttributes &) const = default;
};

struct MusicSegment {
    int index = 0;
    double start = 0.0;
    double end = 0.0;
    SegmentAttributes attributes;

    [[nodiscard]] double length() const noexcept { return end - start; }
    bool operator==(const MusicSegment &) const = default;
};

struct Scene {
    double start = 0.0;
    double end = 0.0;
    std::string caption;
    std::vector<std::string> keywords;
    std::vector<std::string> characters;
    std::optional<Emotion> emotion;

    bool operator==(const Scene &) const = default;
};

struct VideoMeta {
    std::string video_id;
    double duration = 0.0;
    std::vector<Scene> scenes;

    bool operator==(const VideoMeta &) const = default;
};

/// Throws ValidationError when scenes overlap, are unsorted, leave
/// [0, duration] or carry an empty caption.
void validate(const VideoMeta &video);

struct Envelope {
    double hop = 0.01;
    std::vector<double> values;

    bool operator==(const Envelope &) const = default;
};

struct AnnotatedSegment {
    double start = 0.0;
    double end = 0.0;
    std::optional<Emotion> emotion;
    std::optional<double> energy;

    bool operator==(const AnnotatedSegment &) const = default;
};

struct MusicAnnotation {
    std::vector<double> beats;
    std::vector<AnnotatedSegment> segments;

    bool operator==(const MusicAnnotation &) const = default;
};

struct MusicTrack {
    std::string music_id;
    double duration = 0.0;
    std::optional<Envelope> envelope;
    std::optional<MusicAnnotation> annotation;

    bool operator==(const MusicTrack &) const = default;
};

void validate(const MusicTrack &track);

struct ScoreBreakdown {
    std::vector<double> local_scores;
    std::map<std::pair<int, int>, double> pairwise_penalties;
    double global_term = 0.0;
    double total = 0.0;

    bool operator==(const ScoreBreakdown &) const = default;
};

} // namespace beatcut
