// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <compare>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "beatcut/agent.hpp"
#include "beatcut/types.hpp"

namespace beatcut::eval {

// --- taxonomy -------------------------------------------------------------

enum class Family { O, S };          // on-beat, story-driven
enum class MusicLength { Sh, Me, Lo }; // < 30 s, 30..90 s, > 90 s
enum class Prompt { GP, DP };        // general, detailed

struct BenchConfig {
    Family family = Family::O;
    MusicLength music = MusicLength::Sh;
    Prompt prompt = Prompt::GP;

    [[nodiscard]] std::string key() const; // "O-Sh-GP"
    auto operator<=>(const BenchConfig &) const = default;
};

/// Throws ValidationError for anything that is not F-L-P with known parts.
[[nodiscard]] BenchConfig parse_config(std::string_view key);
[[nodiscard]] bool admitted(const BenchConfig &c) noexcept;
/// The eight benchmark configurations, in table order.
[[nodiscard]] const std::vector<BenchConfig> &admitted_configs();
/// All twelve combinations.
[[nodiscard]] std::vector<BenchConfig> all_configs();
/// Throws ValidationError naming the combination when it is excluded.
void check_admitted(const BenchConfig &c);

[[nodiscard]] MusicLength length_class(double seconds) noexcept;
[[nodiscard]] TaskFamily task_family(Family f) noexcept;
[[nodiscard]] IntentLevel intent_level(Prompt p) noexcept;

// --- manifest -------------------------------------------------------------

struct BenchSample {
    std::string id;
    BenchConfig config;
    EditIntent intent;
    std::string music_id;
    double music_duration = 0.0;
    std::vector<std::string> video_ids;
    double video_seconds = 0.0; // total source length
    std::optional<std::string> music_path;
    std::optional<std::string> video_manifest;

    bool operator==(const BenchSample &) const = default;
};

/// JSON-lines manifest, one sample per non-blank line:
/// {"id", "config", "intent", "music": {"id", "duration", "path"?},
///  "videos": [{"id", "duration"}], "video_manifest"?}.
/// Throws IngestError on unreadable input and ValidationError on bad samples,
/// excluded configurations and durations outside the length class.
[[nodiscard]] std::vector<BenchSample> parse_benchmark(std::istream &in);
[[nodiscard]] std::vector<BenchSample> load_benchmark(const std::filesystem::path &path);

struct ConfigStats {
    BenchConfig config;
    int samples = 0;
    double avg_music_seconds = 0.0;
    double avg_video_hours = 0.0;
};

/// One row per configuration present, in table order.
[[nodiscard]] std::vector<ConfigStats> benchmark_stats(std::span<const BenchSample> samples);
[[nodiscard]] std::string format_stats(std::span<const ConfigStats> stats);

// --- evidence -------------------------------------------------------------

struct CutAlignment {
    double time = 0.0;
    double distance = 0.0; // to the nearest beat; +inf without beats
};

struct SegmentEvidence {
    int segment_index = 0;
    int units = 0;
    std::string summary; // captions, in order
    std::optional<Emotion> emotion;
    std::optional<Emotion> music_emotion;
};

struct Evidence {
    std::vector<double> beats;
    std::vector<double> cuts; // internal cuts of the whole timeline
    std::vector<CutAlignment> alignment;
    std::vector<SegmentEvidence> segments;
    std::vector<std::set<std::string>> character_track; // per unit
    int identity_switches = 0;
    int character_transitions = 0; // consecutive pairs both showing someone
    std::size_t unit_count = 0;
    double duration = 0.0;
    double epsilon_beat = 0.08;

    [[nodiscard]] agent::Payload to_json() const;
};

/// Consecutive non-empty character sets with nothing in common.
[[nodiscard]] int identity_switches(const std::vector<std::set<std::string>> &track);

/// Cut list, beat alignment, per-segment summaries and character tracks.
/// Unit captions come from the unit or, when empty, from the scene of the
/// source video under the unit's midpoint.
[[nodiscard]] Evidence extract_evidence(const Timeline &timeline, const MusicTrack &track,
                                        std::span<const VideoMeta> videos, double epsilon_beat = 0.08);

// --- judge ----------------------------------------------------------------

[[nodiscard]] const std::vector<std::string> &dimensions(TaskFamily family);

struct JudgeReport {
    TaskFamily family = TaskFamily::on_beat;
    std::map<std::string, double> scores;

    [[nodiscard]] agent::Payload to_json() const;
    bool operator==(const JudgeReport &) const = default;
};

/// Scores in [1, 5] from the judge agent. Throws JudgeError when `family`
/// differs from the intent's, or the agent returns a wrong dimension set.
[[nodiscard]] JudgeReport judge(const Evidence &evidence, const EditIntent &intent, TaskFamily family,
                                agent::Backend &backend, agent::TokenLedger &ledger);

/// The offline proxy formulas, over the judge request context.
[[nodiscard]] agent::Payload scripted_judge(const agent::Payload &context);

void register_scripted(agent::ScriptedBackend &backend);

// --- aggregation ----------------------------------------------------------

struct ScoredSample {
    std::string id;
    BenchConfig config;
    JudgeReport report;
};

struct AggregateRow {
    std::string group;
    int samples = 0;
    std::map<std::string, double> means;
};

struct BenchmarkReport {
    std::vector<AggregateRow> by_config; // table order
    std::vector<AggregateRow> by_family; // O then S

    [[nodiscard]] agent::Payload to_json() const;
    [[nodiscard]] std::string to_table() const;
};

/// Per-configuration and per-family means of every dimension present.
/// Throws ReportError on an empty input.
[[nodiscard]] BenchmarkReport aggregate_report(std::span<const ScoredSample> samples);

} // namespace beatcut::eval
