// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beatcut/agent.hpp"
#include "beatcut/coordinator.hpp"
#include "beatcut/editor.hpp"
#include "beatcut/ingest.hpp"
#include "beatcut/planner.hpp"
#include "beatcut/scoring.hpp"
#include "beatcut/types.hpp"

namespace beatcut {

// --- toggles and variants -------------------------------------------------

struct Toggles {
    bool preventive = true;
    bool region_decomposition = true;
    bool negotiation = true;

    bool operator==(const Toggles &) const = default;
};

/// The five ablation rows, plus whatever else the three switches can spell.
enum class Variant { only_preventive, no_negotiation, no_region_decomp, no_preventive, full, custom };

[[nodiscard]] std::string_view to_string(Variant v) noexcept;
[[nodiscard]] Variant variant_of(const Toggles &t) noexcept;
/// Throws ConfigError for Variant::custom.
[[nodiscard]] Toggles toggles_of(Variant v);
/// The five named variants in table order.
[[nodiscard]] const std::vector<Variant> &named_variants();

// --- run configuration ----------------------------------------------------

struct RunConfig {
    std::string backend = "scripted"; // scripted | remote
    std::uint64_t seed = 7;
    bool parallel = false; // run independent DAG branches concurrently
    Toggles toggles;
    ScorerConfig scorer;
    editor::EditorParams editor;
    ingest::SegmentationParams segmentation;
    int controller_window = 5;
    int budget = 40;
    double conflict_weight = 0.5;
    std::optional<std::string> music_path;
    std::optional<std::string> manifest_path;

    [[nodiscard]] agent::Payload to_json() const;
    /// Defaults overlaid with `j`; unknown keys and bad values raise ConfigError.
    [[nodiscard]] static RunConfig from_json(const agent::Payload &j);
    [[nodiscard]] static RunConfig load(const std::filesystem::path &path);
    /// FNV-1a 64 of the canonical JSON form, as 16 hex digits.
    [[nodiscard]] std::string hash() const;

    bool operator==(const RunConfig &) const = default;
};

/// Throws ConfigError on out-of-range constants.
void validate(const RunConfig &config);

[[nodiscard]] std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// --- backends -------------------------------------------------------------

/// Scripted backend with every module's deterministic handlers.
[[nodiscard]] std::unique_ptr<agent::ScriptedBackend> make_scripted_backend(std::uint64_t seed);
/// Scripted or remote per config; remote reads its endpoint from the environment.
[[nodiscard]] std::unique_ptr<agent::Backend> make_backend(const RunConfig &config);

// --- outer loop -----------------------------------------------------------

struct RunResult {
    std::vector<MusicSegment> segments;
    std::vector<std::string> instructions;
    planner::TaskGraph graph; // final node statuses
    Timeline composed;        // before the corrective stages
    Timeline final;
    coord::NegotiationReport negotiation;
    ScoreBreakdown score;
    agent::TokenLedger ledger;
    planner::Trace trace;

    /// Toggles, variant, negotiation, score and ledger, for the run report.
    [[nodiscard]] agent::Payload report(const RunConfig &config) const;
};

/// segmentation, planning, task graph, scheduled inner-loop edits, composition,
/// then (unless both corrective toggles are off) negotiation and global refine.
/// Failures escape as StageError naming the stage.
[[nodiscard]] RunResult run_outer_loop(const EditIntent &intent, const MusicTrack &track,
                                       std::span<const VideoMeta> videos, const RunConfig &config,
                                       agent::Backend &backend);

} // namespace beatcut
