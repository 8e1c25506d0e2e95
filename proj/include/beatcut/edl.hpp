// SPDX-License-Identifier: Apache-2.0
#pragma once

// Versioned JSON edit decision list. Every unit field travels with its cut
// record and every segment keeps its memo, so a timeline survives the trip.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "beatcut/agent.hpp"
#include "beatcut/types.hpp"

namespace beatcut {

inline constexpr int kEdlVersion = 1;

struct EdlProvenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;

    bool operator==(const EdlProvenance &) const = default;
};

struct EdlDocument {
    int version = kEdlVersion;
    Timeline timeline; // music_ref is the music id
    std::optional<EdlProvenance> provenance;

    [[nodiscard]] agent::Payload to_json() const;
    bool operator==(const EdlDocument &) const = default;
};

/// Pretty-printed, newline-terminated; equal documents give equal bytes.
[[nodiscard]] std::string serialize_edl(const EdlDocument &doc);

/// Throws IngestError on malformed text and ValidationError when the version
/// is unknown, records are out of order or the timeline is invalid.
[[nodiscard]] EdlDocument parse_edl(std::string_view text);
[[nodiscard]] EdlDocument load_edl(const std::filesystem::path &path);

/// Writes `text` to `path`, creating parent directories. Throws IngestError.
void write_text_file(const std::filesystem::path &path, std::string_view text);

} // namespace beatcut
