// SPDX-License-Identifier: Apache-2.0
#include "beatcut/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

namespace beatcut::fixtures {

using json = nlohmann::json;

namespace {

const std::vector<std::string> kThemes = {"city", "ocean", "forest", "desert", "mountain", "harbor"};
const std::vector<std::string> kActions = {"running", "dancing", "fighting", "laughing", "driving",
                                           "climbing", "racing",  "singing",  "jumping",  "waiting"};
const std::vector<std::string> kPlaces = {"street", "rooftop", "beach", "bridge", "station", "market", "stage"};
const std::vector<std::string> kCast = {"ava", "ben", "cara", "dev", "eli"};
const Emotion kMoods[] = {Emotion::joyful, Emotion::energetic, Emotion::tense, Emotion::sad,
                          Emotion::calm,   Emotion::epic};

double r3(double v) { return std::round(v * 1000.0) / 1000.0; }

template <class T> const T &pick(const std::vector<T> &v, std::mt19937_64 &rng) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

Emotion pick_mood(std::mt19937_64 &rng) {
    return kMoods[std::uniform_int_distribution<int>(0, std::size(kMoods) - 1)(rng)];
}

} // namespace

Fixture make_fixture(std::uint64_t seed, const FixtureShape &shape) {
    std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + 0x51);
    auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    Fixture f;
    const int m = uni(shape.min_segments, shape.max_segments);

    // music: steady grid, boundaries on beats
    const double bpm = 96.0 + 4.0 * uni(0, 11);
    const double ibi = 60.0 / bpm;
    const double offset = r3(real(0.0, 0.4 * ibi));
    std::vector<int> counts;
    int total = 0;
    for (int i = 0; i < m; ++i) {
        counts.push_back(uni(8, 16));
        total += counts.back();
    }
    MusicAnnotation ann;
    for (int b = 0; b < total; ++b) ann.beats.push_back(r3(offset + b * ibi));
    f.track.music_id = "track_" + std::to_string(seed);
    f.track.duration = r3(offset + total * ibi);
    int at = 0;
    const double energies[] = {0.2, 0.5, 0.9};
    for (int i = 0; i < m; ++i) {
        AnnotatedSegment s;
        s.start = i == 0 ? 0.0 : ann.beats[at];
        at += counts[i];
        s.end = i + 1 == m ? f.track.duration : ann.beats[at];
        s.emotion = pick_mood(rng);
        s.energy = energies[uni(0, 2)];
        ann.segments.push_back(s);
    }
    f.track.annotation = std::move(ann);

    // videos
    const int nv = uni(shape.min_videos, shape.max_videos);
    for (int v = 0; v < nv; ++v) {
        VideoMeta vm;
        vm.video_id = "vid" + std::to_string(v);
        const auto &theme = pick(kThemes, rng);
        double t = r3(real(0.0, 1.0));
        const int scenes = uni(12, 22);
        for (int s = 0; s < scenes; ++s) {
            Scene sc;
            sc.start = t;
            sc.end = r3(t + real(1.5, 5.0));
            t = r3(sc.end + (uni(0, 3) == 0 ? real(0.1, 0.6) : 0.0));
            const auto &action = pick(kActions, rng);
            const auto &place = pick(kPlaces, rng);
            const int nc = uni(0, 2);
            for (int c = 0; c < nc; ++c) {
                const auto &who = pick(kCast, rng);
                if (std::find(sc.characters.begin(), sc.characters.end(), who) == sc.characters.end())
                    sc.characters.push_back(who);
            }
            std::sort(sc.characters.begin(), sc.characters.end());
            sc.emotion = pick_mood(rng);
            const std::string who = sc.characters.empty() ? "a crowd" : sc.characters.front();
            sc.caption = who + " " + action + " on the " + place + " in the " + theme;
            sc.keywords = {theme, action, place, std::string(to_string(*sc.emotion))};
            vm.scenes.push_back(std::move(sc));
        }
        vm.duration = r3(t + 1.0);
        f.videos.push_back(std::move(vm));
    }

    // intent
    const bool story = shape.family < 0 ? uni(0, 1) == 1 : shape.family == 1;
    const bool detailed = uni(0, 1) == 1;
    f.intent.family = story ? TaskFamily::story_driven : TaskFamily::on_beat;
    f.intent.level = detailed ? IntentLevel::detailed : IntentLevel::general;
    std::ostringstream os;
    const auto &theme = pick(kThemes, rng);
    if (story) {
        os << pick(kCast, rng) << " journey through the " << theme << " " << pick(kActions, rng);
    } else {
        os << to_string(pick_mood(rng)) << " " << theme << " " << pick(kActions, rng) << " montage on the beat";
    }
    if (detailed) {
        for (int i = 0; i < m; ++i) {
            os << ". segment " << i << ": " << pick(kActions, rng) << " on the " << pick(kPlaces, rng);
            if (story && i >= 2 && uni(0, 2) == 0) os << " after segment 0";
        }
    }
    f.intent.text = os.str();
    return f;
}

Fixture standard_fixture() {
    FixtureShape s;
    s.min_segments = s.max_segments = 4;
    s.family = 0;
    return make_fixture(17, s);
}

std::string video_manifest_jsonl(const std::vector<VideoMeta> &videos) {
    std::string out;
    for (const auto &v : videos) {
        json scenes = json::array();
        for (const auto &s : v.scenes) {
            scenes.push_back({{"start", s.start},
                              {"end", s.end},
                              {"caption", s.caption},
                              {"keywords", s.keywords},
                              {"characters", s.characters},
                              {"emotion", s.emotion ? json(std::string(to_string(*s.emotion))) : json(nullptr)}});
        }
        out += json{{"video_id", v.video_id}, {"duration", v.duration}, {"scenes", scenes}}.dump() + "\n";
    }
    return out;
}

std::string music_annotation_json(const MusicTrack &track) {
    json j = {{"music_id", track.music_id}, {"duration", track.duration}};
    if (track.annotation) {
        j["beats"] = track.annotation->beats;
        json segs = json::array();
        for (const auto &s : track.annotation->segments) {
            json e = {{"start", s.start}, {"end", s.end}};
            e["emotion"] = s.emotion ? json(std::string(to_string(*s.emotion))) : json(nullptr);
            e["energy"] = s.energy ? json(*s.energy) : json(nullptr);
            segs.push_back(e);
        }
        j["segments"] = segs;
    }
    if (track.envelope) j["envelope"] = {{"hop", track.envelope->hop}, {"values", track.envelope->values}};
    return j.dump(2) + "\n";
}

} // namespace beatcut::fixtures
