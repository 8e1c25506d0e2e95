// SPDX-License-Identifier: Apache-2.0
#include "beatcut/types.hpp"

#include <algorithm>
#include <cmath>

#include "beatcut/errors.hpp"

namespace beatcut {

std::string_view to_string(Emotion e) noexcept {
    switch (e) {
    case Emotion::joyful: return "joyful";
    case Emotion::energetic: return "energetic";
    case Emotion::tense: return "tense";
    case Emotion::sad: return "sad";
    case Emotion::calm: return "calm";
    case Emotion::epic: return "epic";
    case Emotion::neutral: return "neutral";
    }
    return "neutral";
}

std::optional<Emotion> try_parse_emotion(std::string_view label) noexcept {
    for (auto e : kAllEmotions) {
        if (to_string(e) == label) return e;
    }
    return std::nullopt;
}

Emotion parse_emotion(std::string_view label) {
    if (auto e = try_parse_emotion(label)) return *e;
    throw ValidationError("unknown emotion label '" + std::string(label) + "'");
}

bool antagonistic(Emotion a, Emotion b) noexcept {
    auto is = [&](Emotion x, Emotion y) {
        return (a == x && b == y) || (a == y && b == x);
    };
    return is(Emotion::joyful, Emotion::sad) || is(Emotion::calm, Emotion::tense) ||
           is(Emotion::calm, Emotion::energetic);
}

std::string_view to_string(IntentLevel v) noexcept {
    return v == IntentLevel::general ? "general" : "detailed";
}

std::string_view to_string(TaskFamily v) noexcept {
    return v == TaskFamily::on_beat ? "on_beat" : "story_driven";
}

std::string_view to_string(EnergyProfile v) noexcept {
    switch (v) {
    case EnergyProfile::low: return "low";
    case EnergyProfile::mid: return "mid";
    case EnergyProfile::high: return "high";
    }
    return "low";
}

IntentLevel parse_intent_level(std::string_view s) {
    if (s == "general") return IntentLevel::general;
    if (s == "detailed") return IntentLevel::detailed;
    throw ValidationError("unknown intent level '" + std::string(s) + "'");
}

TaskFamily parse_task_family(std::string_view s) {
    if (s == "on_beat") return TaskFamily::on_beat;
    if (s == "story_driven") return TaskFamily::story_driven;
    throw ValidationError("unknown task family '" + std::string(s) + "'");
}

void validate(const EditIntent &intent) {
    if (intent.text.empty()) throw ValidationError("intent text is empty");
}

double span_overlap(const ClipSpan &a, const ClipSpan &b) noexcept {
    if (a.source_id != b.source_id) return 0.0;
    return std::max(0.0, std::min(a.out, b.out) - std::max(a.in, b.in));
}

bool is_duplicate(const ClipSpan &a, const ClipSpan &b) noexcept {
    return span_overlap(a, b) > kDuplicateOverlap + kTimeEps;
}

void validate(const TimelineUnit &unit) {
    if (unit.source_id.empty()) throw ValidationError("timeline unit without source id");
    if (!(unit.source_in >= -kTimeEps))
        throw ValidationError("unit " + unit.source_id + ": source_in < 0");
    if (!(unit.source_out > unit.source_in + kTimeEps))
        throw ValidationError("unit " + unit.source_id + ": source_out must exceed source_in");
    if (!std::isfinite(unit.timeline_start) || unit.timeline_start < -kTimeEps)
        throw ValidationError("unit " + unit.source_id + ": bad timeline_start");
}

void validate(const VideoMeta &video) {
    if (video.video_id.empty()) throw ValidationError("video without id");
    if (!(video.duration > 0.0))
        throw ValidationError("video " + video.video_id + ": duration must be positive");
    double prev_end = 0.0;
    for (std::size_t i = 0; i < video.scenes.size(); ++i) {
        const auto &s = video.scenes[i];
        const auto where = "video " + video.video_id + " scene " + std::to_string(i);
        if (!(s.end > s.start)) throw ValidationError(where + ": end <= start");
        if (s.start < -kTimeEps || s.end > video.duration + kTimeEps)
            throw ValidationError(where + ": outside [0, duration]");
        if (s.start < prev_end - kTimeEps)
            throw ValidationError(where + ": overlaps or precedes the previous scene");
        if (s.caption.empty()) throw ValidationError(where + ": empty caption");
        prev_end = s.end;
    }
}

void validate(const MusicTrack &track) {
    if (track.music_id.empty()) throw ValidationError("music track without id");
    if (!(track.duration > 0.0)) throw ValidationError("music duration must be positive");
    if (!track.envelope && !track.annotation)
        throw ValidationError("music track needs an envelope or an annotation");
    if (track.envelope) {
        if (!(track.envelope->hop > 0.0)) throw ValidationError("envelope hop must be positive");
        for (double v : track.envelope->values) {
            if (!(v >= 0.0)) throw ValidationError("envelope values must be >= 0");
        }
    }
    if (track.annotation) {
        const auto &beats = track.annotation->beats;
        for (std::size_t i = 0; i < beats.size(); ++i) {
            if (beats[i] < -kTimeEps || beats[i] > track.duration + kTimeEps)
                throw ValidationError("beat outside [0, duration]");
            if (i > 0 && !(beats[i] > beats[i - 1]))
                throw ValidationError("beats must be strictly increasing");
        }
        double cursor = 0.0;
        for (const auto &seg : track.annotation->segments) {
            if (std::abs(seg.start - cursor) > kTimeEps || !(seg.end > seg.start))
                throw ValidationError("annotated segments must partition the track");
            cursor = seg.end;
        }
        if (!track.annotation->segments.empty() && std::abs(cursor - track.duration) > kTimeEps)
            throw ValidationError("annotated segments must end at the track duration");
    }
}

} // namespace beatcut
