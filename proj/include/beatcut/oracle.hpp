// SPDX-License-Identifier: Apache-2.0
#pragma once

// Exhaustive reference for the corrective loop: K candidate sub-timelines
// per segment, every combination scored. Only used on small instances.

#include <cstdint>
#include <span>
#include <vector>

#include "beatcut/coordinator.hpp"
#include "beatcut/kernels.hpp"

namespace beatcut::coord {

inline constexpr std::int64_t kOracleLimit = 1'000'000;

using CandidateSets = std::vector<std::vector<SubTimeline>>; // [segment][k]

/// Local, pairwise and duration terms of every candidate choice.
[[nodiscard]] kernels::ScoreTables build_score_tables(const CandidateSets &sets, const EditIntent &intent,
                                                      std::span<const MusicSegment> segments,
                                                      const ScorerConfig &scorer);

struct OracleResult {
    Timeline best;
    std::vector<int> choice;
    double score = 0.0;
    std::int64_t evaluations = 0; // always the full product of the set sizes
};

/// Argmax of global_score over all combinations; ties go to the
/// lexicographically smallest choice. Throws OracleError when a set is empty
/// or there are more than kOracleLimit combinations.
[[nodiscard]] OracleResult brute_force_optimize(const CandidateSets &sets, const EditIntent &intent,
                                                std::span<const MusicSegment> segments,
                                                const ScorerConfig &scorer = {},
                                                const std::string &music_ref = "",
                                                bool parallel = true);

/// Random instance whose candidates all fill their segment exactly, cutting
/// on beats, and draw shots from a shared pool so repeats across segments
/// happen. Deterministic in `seed`.
struct SyntheticInstance {
    std::vector<MusicSegment> segments;
    MusicTrack track;
    EditIntent intent;
    planner::TaskGraph tasks;
    CandidateSets candidates;
};

[[nodiscard]] SyntheticInstance make_synthetic_instance(std::uint64_t seed, int m, int k);

/// Region repair by exhaustive search over the members' candidates, the rest
/// frozen, maximizing repair_objective. Costs K^|members| evaluations.
class OracleRepairer final : public RegionRepairer {
  public:
    OracleRepairer(const CandidateSets &sets, double conflict_weight)
        : sets_(sets), conflict_weight_(conflict_weight) {}
    Proposal propose(const RepairRegion &region, const RepairDirective &directive,
                     const std::vector<SubTimeline> &current, const NegotiationContext &ctx) override;

  private:
    const CandidateSets &sets_;
    double conflict_weight_;
};

struct CorrectiveRun {
    std::vector<int> start_choice; // per segment, before negotiation
    std::int64_t preventive_evaluations = 0;
    Timeline final;
    double start_score = 0.0;
    double score = 0.0;
    NegotiationReport report;
    agent::TokenLedger ledger;
};

/// Starting point in DAG order: with `preventive`, each segment takes the
/// candidate maximizing its local score plus the pairwise terms against its
/// finished ancestors; without, the locally best candidate. Then negotiation
/// with the OracleRepairer and global_refine.
[[nodiscard]] CorrectiveRun run_corrective_oracle(const SyntheticInstance &instance,
                                                  const NegotiationParams &params = {},
                                                  const ScorerConfig &scorer = {},
                                                  bool preventive = true);

} // namespace beatcut::coord
