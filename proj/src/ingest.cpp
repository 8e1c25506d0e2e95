// SPDX-License-Identifier: Apache-2.0
#include "beatcut/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

#include "beatcut/errors.hpp"

namespace beatcut::ingest {

using nlohmann::json;

namespace {

template <typename T>
T field(const json &j, const char *name, std::size_t line) {
    if (!j.contains(name))
        throw IngestError("line " + std::to_string(line) + ": missing field '" + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception &e) {
        throw IngestError("line " + std::to_string(line) + ": field '" + name + "': " + e.what());
    }
}

template <typename T>
T optional_field(const json &j, const char *name, T fallback, std::size_t line) {
    if (!j.contains(name) || j.at(name).is_null()) return fallback;
    return field<T>(j, name, line);
}

std::optional<Emotion> emotion_field(const json &j, std::size_t line) {
    if (!j.contains("emotion") || j.at("emotion").is_null()) return std::nullopt;
    const auto label = field<std::string>(j, "emotion", line);
    auto e = try_parse_emotion(label);
    if (!e)
        throw ValidationError("line " + std::to_string(line) + ": unknown emotion '" + label + "'");
    return e;
}

} // namespace

std::vector<VideoMeta> parse_video_manifest(std::istream &in) {
    std::vector<VideoMeta> out;
    std::set<std::string> ids;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(raw);
        } catch (const json::parse_error &e) {
            throw IngestError("line " + std::to_string(line) + ": " + e.what());
        }
        if (!j.is_object()) throw IngestError("line " + std::to_string(line) + ": expected object");
        VideoMeta v;
        v.video_id = field<std::string>(j, "video_id", line);
        v.duration = field<double>(j, "duration", line);
        if (!j.contains("scenes") || !j.at("scenes").is_array())
            throw IngestError("line " + std::to_string(line) + ": field 'scenes' must be an array");
        for (const auto &s : j.at("scenes")) {
            Scene sc;
            sc.start = field<double>(s, "start", line);
            sc.end = field<double>(s, "end", line);
            sc.caption = field<std::string>(s, "caption", line);
            sc.keywords = optional_field<std::vector<std::string>>(s, "keywords", {}, line);
            sc.characters = optional_field<std::vector<std::string>>(s, "characters", {}, line);
            sc.emotion = emotion_field(s, line);
            v.scenes.push_back(std::move(sc));
        }
        try {
            validate(v);
        } catch (const ValidationError &e) {
            throw ValidationError("line " + std::to_string(line) + ": " + e.what());
        }
        if (!ids.insert(v.video_id).second)
            throw IngestError("line " + std::to_string(line) + ": duplicate id '" + v.video_id + "'");
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<VideoMeta> load_video_manifest(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open manifest " + path.string());
    return parse_video_manifest(in);
}

Envelope parse_envelope(std::istream &in) {
    std::vector<double> times;
    Envelope env;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto first = raw.find_first_not_of(" \t\r");
        if (first == std::string::npos || raw[first] == '#') continue;
        std::istringstream ss(raw);
        double t = 0.0;
        double v = 0.0;
        if (!(ss >> t >> v))
            throw IngestError("line " + std::to_string(line) + ": expected '<time> <value>'");
        times.push_back(t);
        env.values.push_back(v);
    }
    if (times.size() < 2) throw IngestError("envelope needs at least two samples");
    env.hop = times[1] - times[0];
    if (!(env.hop > 0.0) || std::abs(times[0]) > 1e-6)
        throw IngestError("envelope must start at 0 with a positive hop");
    for (std::size_t i = 1; i < times.size(); ++i) {
        const double expected = static_cast<double>(i) * env.hop;
        if (std::abs(times[i] - expected) > 1e-6 * std::max(1.0, expected))
            throw IngestError("envelope hop is not fixed at sample " + std::to_string(i));
    }
    return env;
}

MusicTrack load_music(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open music file " + path.string());
    MusicTrack track;
    track.music_id = path.stem().string();
    if (path.extension() == ".json") {
        json j;
        try {
            j = json::parse(in);
        } catch (const json::parse_error &e) {
            throw IngestError(path.string() + ": " + e.what());
        }
        track.music_id = optional_field<std::string>(j, "music_id", track.music_id, 1);
        track.duration = field<double>(j, "duration", 1);
        if (j.contains("envelope")) {
            Envelope env;
            env.hop = field<double>(j.at("envelope"), "hop", 1);
            env.values = field<std::vector<double>>(j.at("envelope"), "values", 1);
            track.envelope = std::move(env);
        }
        if (j.contains("beats") || j.contains("segments")) {
            MusicAnnotation ann;
            ann.beats = optional_field<std::vector<double>>(j, "beats", {}, 1);
            if (j.contains("segments")) {
                for (const auto &s : j.at("segments")) {
                    AnnotatedSegment seg;
                    seg.start = field<double>(s, "start", 1);
                    seg.end = field<double>(s, "end", 1);
                    seg.emotion = emotion_field(s, 1);
                    if (s.contains("energy") && !s.at("energy").is_null())
                        seg.energy = field<double>(s, "energy", 1);
                    ann.segments.push_back(seg);
                }
            }
            track.annotation = std::move(ann);
        }
    } else {
        track.envelope = parse_envelope(in);
        track.duration = static_cast<double>(track.envelope->values.size()) * track.envelope->hop;
    }
    validate(track);
    return track;
}

std::vector<double> detect_beats(std::span<const double> envelope, double hop,
                                 const BeatParams &params) {
    const auto n = envelope.size();
    if (n < 3) throw AnalysisError("envelope needs at least 3 samples, got " + std::to_string(n));
    const double mean = std::accumulate(envelope.begin(), envelope.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double v : envelope) var += (v - mean) * (v - mean);
    const double threshold = mean + params.delta * std::sqrt(var / static_cast<double>(n));

    std::vector<std::size_t> peaks;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = envelope[i];
        bool is_max = false;
        if (i == 0)
            is_max = v > envelope[1];
        else if (i + 1 == n)
            is_max = v > envelope[i - 1];
        else
            is_max = v > envelope[i - 1] && v >= envelope[i + 1];
        if (is_max && v > threshold) peaks.push_back(i);
    }
    // Strongest first; earlier wins ties.
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](std::size_t a, std::size_t b) { return envelope[a] > envelope[b]; });
    std::vector<std::size_t> kept;
    for (auto p : peaks) {
        const bool clear = std::none_of(kept.begin(), kept.end(), [&](std::size_t k) {
            const auto d = p > k ? p - k : k - p;
            return static_cast<double>(d) * hop < params.min_gap - kTimeEps;
        });
        if (clear) kept.push_back(p);
    }
    std::sort(kept.begin(), kept.end());
    std::vector<double> beats;
    beats.reserve(kept.size());
    for (auto k : kept) beats.push_back(static_cast<double>(k) * hop);
    return beats;
}

std::vector<double> track_beats(const MusicTrack &track, const BeatParams &params) {
    if (track.annotation && !track.annotation->beats.empty()) return track.annotation->beats;
    if (track.envelope && track.envelope->values.size() >= 3)
        return detect_beats(track.envelope->values, track.envelope->hop, params);
    return {};
}

double median_beat_interval(std::span<const double> beats) {
    if (beats.size() < 2) return 0.0;
    std::vector<double> gaps;
    for (std::size_t i = 1; i < beats.size(); ++i) gaps.push_back(beats[i] - beats[i - 1]);
    std::sort(gaps.begin(), gaps.end());
    const auto m = gaps.size();
    return m % 2 ? gaps[m / 2] : 0.5 * (gaps[m / 2 - 1] + gaps[m / 2]);
}

double estimate_tempo(std::span<const double> beats) {
    const double ibi = median_beat_interval(beats);
    return ibi > 0.0 ? 60.0 / ibi : 0.0;
}

double mean_energy(const MusicTrack &track, double start, double end) {
    if (!track.envelope || track.envelope->values.empty()) return 0.0;
    const auto &vals = track.envelope->values;
    const double hop = track.envelope->hop;
    auto lo = static_cast<long>(std::llround(std::max(0.0, start) / hop));
    auto hi = static_cast<long>(std::llround(std::max(0.0, end) / hop));
    lo = std::clamp(lo, 0L, static_cast<long>(vals.size()));
    hi = std::clamp(hi, 0L, static_cast<long>(vals.size()));
    if (hi <= lo) return 0.0;
    double sum = 0.0;
    for (long i = lo; i < hi; ++i) sum += vals[static_cast<std::size_t>(i)];
    return sum / static_cast<double>(hi - lo);
}

Emotion heuristic_emotion(EnergyProfile profile, double tempo_bpm) noexcept {
    switch (profile) {
    case EnergyProfile::high:
        if (tempo_bpm <= 0.0) return Emotion::neutral;
        return tempo_bpm >= 120.0 ? Emotion::energetic : Emotion::epic;
    case EnergyProfile::mid: return Emotion::joyful;
    case EnergyProfile::low: return Emotion::calm;
    }
    return Emotion::neutral;
}

namespace {

std::vector<double> beats_in(std::span<const double> beats, double start, double end, bool closed) {
    std::vector<double> out;
    for (double b : beats) {
        if (b >= start - kTimeEps && (b < end - kTimeEps || (closed && b <= end + kTimeEps)))
            out.push_back(b);
    }
    return out;
}

SegmentAttributes attributes_for(double start, double end, double seg_mean, double max_mean,
                                 std::span<const double> track_beats,
                                 std::optional<Emotion> annotated, bool closed_end) {
    SegmentAttributes a;
    a.mean_energy = seg_mean;
    if (max_mean <= 0.0 || seg_mean < 0.33 * max_mean)
        a.energy_profile = EnergyProfile::low;
    else if (seg_mean > 0.66 * max_mean)
        a.energy_profile = EnergyProfile::high;
    else
        a.energy_profile = EnergyProfile::mid;
    a.beats = beats_in(track_beats, start, end, closed_end);
    a.tempo_bpm = a.beats.size() >= 2 ? estimate_tempo(a.beats) : estimate_tempo(track_beats);
    a.emotion = annotated ? *annotated : heuristic_emotion(a.energy_profile, a.tempo_bpm);
    return a;
}

} // namespace

SegmentAttributes derive_segment_attributes(double start, double end, double segment_mean_energy,
                                            double max_mean_energy,
                                            std::span<const double> track_beats,
                                            std::optional<Emotion> annotated) {
    return attributes_for(start, end, segment_mean_energy, max_mean_energy, track_beats, annotated,
                          false);
}

std::vector<BoundaryCandidate> boundary_candidates(const MusicTrack &track,
                                                   std::span<const double> beats, double window) {
    std::vector<BoundaryCandidate> out;
    if (!track.envelope) return out;
    std::vector<double> positions;
    if (beats.size() >= 2) {
        positions.assign(beats.begin(), beats.end());
    } else {
        const auto n = track.envelope->values.size();
        for (std::size_t i = 1; i < n; ++i) positions.push_back(static_cast<double>(i) * track.envelope->hop);
    }
    for (double t : positions) {
        if (t < window - kTimeEps || t > track.duration - window + kTimeEps) continue;
        const double before = mean_energy(track, t - window, t);
        const double after = mean_energy(track, t, t + window);
        out.push_back({t, std::abs(after - before)});
    }
    return out;
}

std::vector<MusicSegment> segment_music(const MusicTrack &track, const SegmentationParams &params) {
    validate(track);
    const auto beats = track_beats(track, params.beats);
    std::vector<double> bounds{0.0};
    std::vector<std::optional<Emotion>> labels;
    std::vector<double> energies;

    if (track.annotation && !track.annotation->segments.empty()) {
        for (const auto &s : track.annotation->segments) {
            if (&s != &track.annotation->segments.front()) bounds.push_back(s.start);
            labels.push_back(s.emotion);
            energies.push_back(s.energy ? *s.energy : mean_energy(track, s.start, s.end));
        }
    } else {
        const double ibi = median_beat_interval(beats);
        const double min_len = beats.size() >= 2 ? params.min_beats_per_segment * ibi
                                                 : params.fallback_min_length;
        double env_max = 0.0;
        if (track.envelope) {
            for (double v : track.envelope->values) env_max = std::max(env_max, v);
        }
        std::vector<double> chosen;
        if (env_max > 0.0 && min_len > 0.0) {
            auto cands = boundary_candidates(track, beats, min_len);
            std::stable_sort(cands.begin(), cands.end(),
                             [](const auto &a, const auto &b) { return a.change > b.change; });
            for (const auto &c : cands) {
                if (c.change < params.theta_seg * env_max - kTimeEps) break;
                const bool spaced = std::none_of(chosen.begin(), chosen.end(), [&](double t) {
                    return std::abs(t - c.time) < min_len - kTimeEps;
                });
                if (spaced) chosen.push_back(c.time);
            }
        }
        std::sort(chosen.begin(), chosen.end());
        bounds.insert(bounds.end(), chosen.begin(), chosen.end());
        for (std::size_t i = 0; i < bounds.size(); ++i) {
            const double end = i + 1 < bounds.size() ? bounds[i + 1] : track.duration;
            labels.push_back(std::nullopt);
            energies.push_back(mean_energy(track, bounds[i], end));
        }
    }
    bounds.push_back(track.duration);

    const double max_mean = energies.empty() ? 0.0 : *std::max_element(energies.begin(), energies.end());
    std::vector<MusicSegment> out;
    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        MusicSegment seg;
        seg.index = static_cast<int>(i);
        seg.start = bounds[i];
        seg.end = bounds[i + 1];
        seg.attributes = attributes_for(seg.start, seg.end, energies[i], max_mean, beats, labels[i],
                                        i + 2 == bounds.size());
        out.push_back(std::move(seg));
    }
    return out;
}

} // namespace beatcut::ingest
