// SPDX-License-Identifier: Apache-2.0
#pragma once

// Seeded end-to-end inputs: an annotated track on a steady beat grid, a pool
// of captioned videos and a matching intent. Used by the tests, the
// benchmark and `beatcut synth`.

#include <cstdint>
#include <string>
#include <vector>

#include "beatcut/types.hpp"

namespace beatcut::fixtures {

struct Fixture {
    EditIntent intent;
    MusicTrack track;
    std::vector<VideoMeta> videos;
};

struct FixtureShape {
    int min_segments = 2;
    int max_segments = 4;
    int min_videos = 5;
    int max_videos = 8;
    /// -1 picks the family from the seed.
    int family = -1;
};

/// Deterministic in (seed, shape).
[[nodiscard]] Fixture make_fixture(std::uint64_t seed, const FixtureShape &shape = {});

/// The standard fixture: seed 17, on-beat, four segments. Its preventive
/// pass leaves two conflicts, so every corrective variant has work to do.
[[nodiscard]] Fixture standard_fixture();

/// Text forms accepted by load_video_manifest and load_music (.json).
[[nodiscard]] std::string video_manifest_jsonl(const std::vector<VideoMeta> &videos);
[[nodiscard]] std::string music_annotation_json(const MusicTrack &track);

} // namespace beatcut::fixtures
