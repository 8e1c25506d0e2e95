// SPDX-License-Identifier: Apache-2.0
#pragma once

// Small builders shared by the test binaries.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "beatcut/types.hpp"

namespace bt {

using namespace beatcut;

inline TimelineUnit unit(std::string src, double in, double out, double start,
                         std::optional<Emotion> emo = std::nullopt, std::set<std::string> chars = {},
                         double rel = 0.5, std::string caption = "") {
    TimelineUnit u;
    u.source_id = std::move(src);
    u.source_in = in;
    u.source_out = out;
    u.timeline_start = start;
    u.emotion = emo;
    u.characters = std::move(chars);
    u.relevance = rel;
    u.caption = std::move(caption);
    return u;
}

inline SubTimeline sub(int index, std::vector<TimelineUnit> units) {
    SubTimeline s;
    s.segment_index = index;
    s.units = std::move(units);
    return s;
}

inline std::vector<double> grid(double start, double end, double step) {
    std::vector<double> b;
    for (double t = start; t < end - 1e-9; t += step) b.push_back(t);
    return b;
}

inline MusicSegment segment(int index, double start, double end, double step = 0.5,
                            Emotion emo = Emotion::joyful) {
    MusicSegment m;
    m.index = index;
    m.start = start;
    m.end = end;
    m.attributes.emotion = emo;
    m.attributes.energy_profile = EnergyProfile::mid;
    if (step > 0) m.attributes.beats = grid(start, end, step);
    m.attributes.tempo_bpm = step > 0 ? 60.0 / step : 0.0;
    return m;
}

inline Scene scene(double start, double end, std::string caption, std::vector<std::string> kw = {},
                   std::vector<std::string> chars = {}, std::optional<Emotion> emo = std::nullopt) {
    Scene s;
    s.start = start;
    s.end = end;
    s.caption = std::move(caption);
    s.keywords = std::move(kw);
    s.characters = std::move(chars);
    s.emotion = emo;
    return s;
}

inline VideoMeta video(std::string id, double duration, std::vector<Scene> scenes) {
    return VideoMeta{std::move(id), duration, std::move(scenes)};
}

} // namespace bt
