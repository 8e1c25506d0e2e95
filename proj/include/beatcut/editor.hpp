// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "beatcut/agent.hpp"
#include "beatcut/bundle.hpp"
#include "beatcut/types.hpp"

namespace beatcut::editor {

struct EditorParams {
    int n_r_max = 3;
    int n_c_max = 8;
    double min_clip = 0.8;
    double epsilon_beat = 0.08;
    int max_iter = 3;
    double tau_dur_fallback = 0.25; // used when the segment has < 2 beats
    double drift_threshold = 0.2;   // mean relevance below this is drift
    double beat_bonus = 0.2;
    double flag_penalty = 0.3;

    bool operator==(const EditorParams &) const = default;
};

struct RetrievalQuery {
    int segment_index = 0;
    std::string text;
    double weight = 1.0;
    std::string kind; // theme, emotion, action, or free for remote queries

    bool operator==(const RetrievalQuery &) const = default;
};

struct ClipCandidate {
    std::string source_id;
    double in = 0.0;
    double out = 0.0;
    std::string caption;
    std::vector<std::string> keywords;
    std::vector<std::string> characters;
    std::optional<Emotion> emotion;
    double relevance = 0.0;

    [[nodiscard]] double duration() const noexcept { return out - in; }
    [[nodiscard]] ClipSpan span() const { return {source_id, in, out}; }
    bool operator==(const ClipCandidate &) const = default;
};

enum class ConsistencyFlag { emotion_mismatch, character_break, semantic_drift };

[[nodiscard]] std::string_view to_string(ConsistencyFlag f) noexcept;

struct LocalDiagnosis {
    double duration_error = 0.0; // filled minus segment length
    double tau_dur = 0.25;
    std::vector<double> offbeat_cuts;
    std::set<ConsistencyFlag> flags;

    [[nodiscard]] bool duration_ok() const noexcept;
    [[nodiscard]] bool pass() const noexcept;
    [[nodiscard]] agent::Payload to_json() const;
    bool operator==(const LocalDiagnosis &) const = default;
};

/// Queries for one instruction. The scripted agent reads the template fields
/// of the instruction: theme words (weight 1.0), the emotion (0.6) and the
/// focus directive (0.8). `relaxed` drops the emotion query. At most
/// n_r_max queries, never an empty text.
[[nodiscard]] std::vector<RetrievalQuery>
generate_queries(int segment_index, const std::string &instruction, agent::Backend &backend,
                 agent::TokenLedger &ledger, const EditorParams &params = {}, bool relaxed = false,
                 std::optional<Emotion> target_emotion = std::nullopt);

/// Whole-scene candidates from the scoped videos. Relevance of a scene is the
/// best weight · |Q∩D|/sqrt(|Q||D|) over the queries, with D the content
/// words of caption and keywords. Zero-relevance scenes are left out.
/// Sorted by relevance, ties by (video id, start). Throws RetrievalError on
/// an empty scope or one naming unknown videos.
[[nodiscard]] std::vector<ClipCandidate> retrieve_clips(std::span<const RetrievalQuery> queries,
                                                        std::span<const VideoMeta> videos,
                                                        const std::set<std::string> &scope);

/// Drops clips shorter than min_clip, sorts by relevance (stable, ties by
/// source then in-point), collapses repeated shots onto the more relevant
/// one and keeps the first n_c_max.
[[nodiscard]] std::vector<ClipCandidate> rank_and_filter(std::vector<ClipCandidate> candidates,
                                                         const EditorParams &params = {});

/// Greedy beat-aligned fill of the segment in the order chosen by the
/// roughcut agent. Each unit ends on a beat (or the segment end) at least
/// min_clip after its start; among reachable ends the latest one that does
/// not strand a gap shorter than min_clip wins. Throws EmptySegmentError when
/// nothing can be placed. `order` receives the candidate order used.
[[nodiscard]] SubTimeline rough_cut(const std::vector<ClipCandidate> &candidates,
                                    const MusicSegment &segment, const std::string &instruction,
                                    agent::Backend &backend, agent::TokenLedger &ledger,
                                    const EditorParams &params = {},
                                    std::vector<ClipCandidate> *order = nullptr);

/// τ_dur: median inter-beat interval of the segment, fallback when < 2 beats.
[[nodiscard]] double duration_tolerance(const MusicSegment &segment, const EditorParams &params = {});

/// Off-beat cuts are only reported for segments with at least two beats.
[[nodiscard]] LocalDiagnosis diagnose_local(const SubTimeline &sub, const MusicSegment &segment,
                                            TaskFamily family, const EditorParams &params = {});

/// Mean relevance + beat bonus · (1 − off-beat fraction) − flag_penalty per
/// failed check (duration counts as a check).
[[nodiscard]] double local_score(const SubTimeline &sub, const LocalDiagnosis &diagnosis,
                                 const MusicSegment &segment, const EditorParams &params = {});

/// One refine round: snap off-beat cuts, fix the duration, swap units whose
/// emotion fights the segment, then mend character breaks; each step only
/// when the refine agent asks for it. A passing input comes back unchanged.
/// Throws NeedMoreClips when nothing could be changed.
[[nodiscard]] SubTimeline refine(const SubTimeline &sub, const LocalDiagnosis &diagnosis,
                                 const std::vector<ClipCandidate> &candidates,
                                 const MusicSegment &segment, agent::Backend &backend,
                                 agent::TokenLedger &ledger, const EditorParams &params = {});

struct EditOutcome {
    SubTimeline sub;
    LocalDiagnosis diagnosis;
    bool passed = false;
    int refine_rounds = 0;
    bool relaxed = false;
    std::vector<agent::Payload> events;
};

/// The full inner loop: queries, retrieval, rough cut and up to max_iter
/// diagnose/refine rounds, with one relaxed re-retrieval when clips run out.
/// Returns the iterate with the best local score (later iterates win ties),
/// so the result never scores below the rough cut. Throws EmptySegmentError
/// when even the relaxed retrieval yields nothing usable.
[[nodiscard]] EditOutcome inner_loop_edit(const ContextBundle &bundle,
                                          std::span<const VideoMeta> pool, agent::Backend &backend,
                                          agent::TokenLedger &ledger, const EditorParams &params = {});

/// Registers the deterministic retrieval, roughcut and refine handlers.
void register_scripted(agent::ScriptedBackend &backend);

/// Unit placed from a candidate over [start, start + length).
[[nodiscard]] TimelineUnit make_unit(const ClipCandidate &c, double start, double length);

} // namespace beatcut::editor
