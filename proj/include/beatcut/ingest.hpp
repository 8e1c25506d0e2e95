// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <istream>
#include <span>
#include <vector>

#include "beatcut/types.hpp"

namespace beatcut::ingest {

struct BeatParams {
    double delta = 1.0;   // threshold = mean + delta · stddev
    double min_gap = 0.2; // seconds between retained beats

    bool operator==(const BeatParams &) const = default;
};

struct SegmentationParams {
    double theta_seg = 0.3;       // minimum windowed-mean change, relative to the envelope max
    int min_beats_per_segment = 4;
    double fallback_min_length = 2.0; // seconds, when fewer than two beats are known
    BeatParams beats;

    bool operator==(const SegmentationParams &) const = default;
};

/// Reads a JSON-lines video manifest: one VideoMeta record per non-blank line.
/// Throws IngestError (parse failures carry the line number, duplicates the
/// id) and ValidationError for invalid records.
[[nodiscard]] std::vector<VideoMeta> load_video_manifest(const std::filesystem::path &path);
[[nodiscard]] std::vector<VideoMeta> parse_video_manifest(std::istream &in);

/// Loads either a JSON annotation (`.json`) or a two-column time/value
/// envelope. The music id defaults to the file stem.
[[nodiscard]] MusicTrack load_music(const std::filesystem::path &path);
[[nodiscard]] Envelope parse_envelope(std::istream &in);

/// Peak picking over an energy envelope sampled every `hop` seconds.
/// A beat is a local maximum above mean + delta·stddev; of two peaks closer
/// than min_gap only the larger survives. Throws AnalysisError when the
/// envelope has fewer than three samples.
[[nodiscard]] std::vector<double> detect_beats(std::span<const double> envelope, double hop,
                                               const BeatParams &params = {});

/// Beats of the track: the annotation's if present, else detected.
[[nodiscard]] std::vector<double> track_beats(const MusicTrack &track,
                                              const BeatParams &params = {});

/// 60 / median inter-beat interval; 0 with fewer than two beats.
[[nodiscard]] double estimate_tempo(std::span<const double> beats);
[[nodiscard]] double median_beat_interval(std::span<const double> beats);

/// Mean envelope value over [start, end); 0 without an envelope.
[[nodiscard]] double mean_energy(const MusicTrack &track, double start, double end);

/// Partitions the track into segments with derived attributes. An annotation
/// is used verbatim; otherwise boundaries go where the windowed mean energy
/// jumps, snapped to the beat grid.
[[nodiscard]] std::vector<MusicSegment> segment_music(const MusicTrack &track,
                                                      const SegmentationParams &params = {});

/// Candidate boundary positions and their windowed-mean change score, exposed
/// for tests and diagnostics.
struct BoundaryCandidate {
    double time = 0.0;
    double change = 0.0;
};
[[nodiscard]] std::vector<BoundaryCandidate>
boundary_candidates(const MusicTrack &track, std::span<const double> beats, double window);

/// Energy profile, emotion, beats and tempo of one span. `max_mean_energy`
/// is the largest segment mean of the track; profile thresholds are 0.33 and
/// 0.66 of it.
[[nodiscard]] SegmentAttributes derive_segment_attributes(double start, double end,
                                                          double segment_mean_energy,
                                                          double max_mean_energy,
                                                          std::span<const double> track_beats,
                                                          std::optional<Emotion> annotated);

/// Heuristic affect map: (high, ≥120 bpm) energetic, (high, <120) epic,
/// mid joyful, low calm.
[[nodiscard]] Emotion heuristic_emotion(EnergyProfile profile, double tempo_bpm) noexcept;

} // namespace beatcut::ingest
