// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "beatcut/agent.hpp"
#include "beatcut/bundle.hpp"
#include "beatcut/editor.hpp"
#include "beatcut/planner.hpp"
#include "beatcut/scoring.hpp"
#include "beatcut/types.hpp"

namespace beatcut::coord {

// --- preventive context controller ----------------------------------------

struct ControllerParams {
    bool preventive = true;
    int window = 5; // most recent ancestors digested one by one

    bool operator==(const ControllerParams &) const = default;
};

/// ≤ 60-word summary of one finished segment plus its used spans.
[[nodiscard]] Digest make_digest(const planner::CompletedTask &task);
/// One digest standing in for several older segments.
[[nodiscard]] Digest aggregate_digest(std::span<const planner::CompletedTask> tasks);

/// Instruction keywords used for scoping: content words minus template field
/// names, pace levels and numbers.
[[nodiscard]] std::set<std::string> instruction_keywords(const std::string &instruction);

/// Bundle for one task. With the controller on: digests of the `window` most
/// recent finished ancestors (older ones folded into one aggregate placed
/// first) and a scope of the videos whose keywords meet the instruction
/// keywords, all videos when none do. With it off: no digests, full scope and
/// no controller call.
[[nodiscard]] ContextBundle build_context_bundle(const planner::TaskNode &task,
                                                 const MusicSegment &segment,
                                                 const std::vector<planner::CompletedTask> &done_ancestors,
                                                 std::span<const VideoMeta> videos,
                                                 const EditIntent &intent, agent::Backend &backend,
                                                 agent::TokenLedger &ledger,
                                                 const ControllerParams &params = {});

// --- conflicts ------------------------------------------------------------

enum class ConflictType { rhythm, emotion, character, story };
using ConflictSet = std::set<ConflictType>;

[[nodiscard]] std::string_view to_string(ConflictType t) noexcept;
[[nodiscard]] ConflictType parse_conflict_type(std::string_view s);

struct ConflictThresholds {
    double epsilon_beat = 0.08;

    bool operator==(const ConflictThresholds &) const = default;
};

/// Timeline neighbours only: rhythm (the cut where p ends or q begins is off
/// the beat grid of both segments, their shared boundary counting as a
/// beat), emotion (emotion_clash) and character (story-driven, disjoint
/// non-empty main casts). Any pair: story (a repeated shot).
[[nodiscard]] ConflictSet conflict_predicate(const SubTimeline &p, const SubTimeline &q,
                                             const MusicSegment &mp, const MusicSegment &mq,
                                             TaskFamily family, const ConflictThresholds &th = {});

struct ConflictEdge {
    int p = 0;
    int q = 0;
    ConflictSet types;

    bool operator==(const ConflictEdge &) const = default;
};

struct ConflictGraph {
    int node_count = 0;
    std::vector<ConflictEdge> edges; // p < q, ascending

    [[nodiscard]] bool edgeless() const noexcept { return edges.empty(); }
    [[nodiscard]] agent::Payload to_json() const;
    bool operator==(const ConflictGraph &) const = default;
};

/// Timeline neighbours plus pairs connected in the task graph (one an
/// ancestor of the other), as (min, max), ascending, unique.
[[nodiscard]] std::vector<std::pair<int, int>> candidate_pairs(int node_count,
                                                               const planner::TaskGraph &tasks);

/// Algorithmic detection only. `parallel` picks the OpenMP kernel.
[[nodiscard]] ConflictGraph detect_conflicts(std::span<const SubTimeline> subs,
                                             std::span<const MusicSegment> segments,
                                             const planner::TaskGraph &tasks, TaskFamily family,
                                             const ConflictThresholds &th = {},
                                             bool parallel = true);

/// detect_conflicts, then the diagnostic agent may add edges (never remove).
[[nodiscard]] ConflictGraph build_conflict_graph(std::span<const SubTimeline> subs,
                                                 std::span<const MusicSegment> segments,
                                                 const planner::TaskGraph &tasks,
                                                 const EditIntent &intent, agent::Backend &backend,
                                                 agent::TokenLedger &ledger,
                                                 const ConflictThresholds &th = {});

// --- regions --------------------------------------------------------------

struct RepairRegion {
    int region_id = 0;
    std::vector<int> members; // ascending
    ConflictType type = ConflictType::story;
    ConflictSet types;        // grows when regions merge
    std::optional<std::string> repair_instruction;
    bool merged = false;

    bool operator==(const RepairRegion &) const = default;
};

/// max(1, min(4, floor(n / 4))).
[[nodiscard]] int region_cap(int node_count) noexcept;

/// One region per (edge, type), edges in ascending order: seeds p then q,
/// breadth-first growth over same-type conflict edges, then over task-graph
/// adjacency, lower indices first, up to the cap. Identical (members, type)
/// regions collapse.
[[nodiscard]] std::vector<RepairRegion> decompose_regions(const ConflictGraph &graph,
                                                          const planner::TaskGraph &tasks);

/// One region per conflicting pair, carrying every type of the edge.
[[nodiscard]] std::vector<RepairRegion> pair_regions(const ConflictGraph &graph);

/// Next iteration's regions. A residual edge that is new since `previous`,
/// or that still touches a region never merged before, unions every region
/// holding one of its ends plus both ends (merged regions may exceed the
/// cap). An edge that persists although all its regions were already merged
/// retires them. Edges touching no region seed fresh capped regions.
/// Regions with the same members collapse, their types unioned.
/// `provoked` are conflicts a rejected proposal would have created between
/// a member and an outsider; each merges the regions at its ends like a new
/// edge does.
[[nodiscard]] std::vector<RepairRegion> merge_regions(const std::vector<RepairRegion> &regions,
                                                      const ConflictGraph &residual,
                                                      const ConflictGraph &previous,
                                                      const planner::TaskGraph &tasks,
                                                      const std::vector<ConflictEdge> &provoked = {});

// --- negotiation ----------------------------------------------------------

struct RepairDirective {
    std::string instruction;
    std::vector<ClipSpan> avoid_spans;
    std::optional<Emotion> target_emotion;
    std::set<std::string> target_characters;
};

/// Shared, read-only state of one negotiation.
struct NegotiationContext {
    std::span<const MusicSegment> segments;
    EditIntent intent;
    planner::TaskGraph tasks;
    ScorerConfig scorer;
    ConflictThresholds thresholds;
};

struct Proposal {
    std::vector<SubTimeline> members; // replacements, in region member order
    std::int64_t evaluations = 0;
};

/// Produces new sub-timelines for a region's members, everything else frozen.
class RegionRepairer {
  public:
    virtual ~RegionRepairer() = default;
    virtual Proposal propose(const RepairRegion &region, const RepairDirective &directive,
                             const std::vector<SubTimeline> &current,
                             const NegotiationContext &ctx) = 0;
};

struct NegotiationParams {
    int budget = 40;                // loop iterations
    bool merge = true;              // false: one pass over the initial regions
    bool decompose = true;          // false: regions are the conflicting pairs
    double conflict_weight = 0.5;   // conflicts cost this much in the acceptance test

    bool operator==(const NegotiationParams &) const = default;
};

struct NegotiationReport {
    bool skipped = false;
    int initial_edges = 0;
    int iterations = 0;
    int regions_attempted = 0;
    int regions_repaired = 0;
    int residual_edges = 0;
    std::string terminal; // resolved, no_conflicts, budget, stalled, single_pass, skipped
    std::int64_t evaluations = 0;
    std::vector<std::size_t> region_sizes; // every region attempted, in order
    agent::Payload log = agent::Payload::array();

    [[nodiscard]] agent::Payload to_json() const;
};

/// Objective used to accept repairs: global score − weight · conflict edges.
[[nodiscard]] double repair_objective(std::span<const SubTimeline> subs, const NegotiationContext &ctx,
                                      double conflict_weight);

/// Bottom-up negotiation. A proposal replaces its members only if it raises
/// repair_objective. Stops when the graph is edgeless, the budget is spent,
/// or an iteration changes neither timelines nor regions.
NegotiationReport negotiate(std::vector<SubTimeline> &subs, const NegotiationContext &ctx,
                            RegionRepairer &repairer, agent::Backend &backend,
                            agent::TokenLedger &ledger, const NegotiationParams &params = {});

/// Re-edits member segments with the inner loop, told to avoid every span
/// used elsewhere and to honour the directive's targets.
class LiveRepairer final : public RegionRepairer {
  public:
    LiveRepairer(std::vector<ContextBundle> bundles, std::span<const VideoMeta> pool,
                 agent::Backend &backend, agent::TokenLedger &ledger, editor::EditorParams params);
    Proposal propose(const RepairRegion &region, const RepairDirective &directive,
                     const std::vector<SubTimeline> &current, const NegotiationContext &ctx) override;

  private:
    std::vector<ContextBundle> bundles_;
    std::span<const VideoMeta> pool_;
    agent::Backend &backend_;
    agent::TokenLedger &ledger_;
    editor::EditorParams params_;
};

// --- global refine --------------------------------------------------------

/// Trims the tail so the total is within one median beat interval of the
/// track (a tail unit that would fall under min_clip is dropped instead),
/// pulls off-beat segment-boundary cuts back to the previous beat and
/// recomputes every memo. Idempotent.
[[nodiscard]] Timeline global_refine(const Timeline &timeline, const MusicTrack &track,
                                     std::span<const MusicSegment> segments,
                                     const editor::EditorParams &params = {});

/// Registers the deterministic controller, diagnostic and negotiator handlers.
void register_scripted(agent::ScriptedBackend &backend);

} // namespace beatcut::coord
