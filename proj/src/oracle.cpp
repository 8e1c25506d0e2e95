// SPDX-License-Identifier: Apache-2.0
#include "beatcut/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "beatcut/errors.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut::coord {

kernels::ScoreTables build_score_tables(const CandidateSets &sets, const EditIntent &intent,
                                        std::span<const MusicSegment> segments,
                                        const ScorerConfig &scorer) {
    validate(intent);
    if (sets.size() != segments.size())
        throw OracleError("need one candidate set per segment");
    kernels::ScoreTables t;
    t.w_dur = scorer.w_dur;
    const int m = static_cast<int>(sets.size());
    for (int i = 0; i < m; ++i) {
        if (sets[i].empty()) throw OracleError("segment " + std::to_string(i) + " has no candidates");
        t.sizes.push_back(static_cast<int>(sets[i].size()));
        auto &loc = t.local.emplace_back();
        auto &fil = t.filled.emplace_back();
        for (const auto &c : sets[i]) {
            loc.push_back(segment_quality(c, segments[i], scorer));
            fil.push_back(filled_duration(c));
        }
        t.music_duration += segments[i].length();
    }
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            auto &row = t.pair.emplace_back();
            row.reserve(sets[i].size() * sets[j].size());
            for (const auto &a : sets[i]) {
                for (const auto &b : sets[j]) row.push_back(pairwise_penalty(a, b, segments[i], segments[j], scorer));
            }
        }
    }
    return t;
}

OracleResult brute_force_optimize(const CandidateSets &sets, const EditIntent &intent,
                                  std::span<const MusicSegment> segments, const ScorerConfig &scorer,
                                  const std::string &music_ref, bool parallel) {
    const auto tables = build_score_tables(sets, intent, segments, scorer);
    const auto n = tables.combinations();
    if (n > kOracleLimit)
        throw OracleError(std::to_string(n) + " combinations exceed the limit of " + std::to_string(kOracleLimit));
    const auto best = parallel ? kernels::argmax_parallel(tables) : kernels::argmax_serial(tables);
    OracleResult r;
    r.choice = kernels::decode(best.index, tables.sizes);
    r.score = best.score;
    r.evaluations = best.evaluations;
    std::vector<SubTimeline> subs;
    for (std::size_t i = 0; i < sets.size(); ++i) subs.push_back(sets[i][r.choice[i]]);
    r.best = compose_timelines(std::move(subs), music_ref);
    return r;
}

// --- synthetic instances --------------------------------------------------

SyntheticInstance make_synthetic_instance(std::uint64_t seed, int m, int k) {
    if (m < 1 || k < 1) throw PreconditionError("synthetic instance needs m, k >= 1");
    std::mt19937_64 rng(seed);
    auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
    constexpr double beat = 0.5;

    SyntheticInstance inst;
    inst.intent = {"synthetic on beat montage", IntentLevel::general, TaskFamily::on_beat};
    double t = 0.0;
    std::vector<double> all_beats;
    for (int i = 0; i < m; ++i) {
        MusicSegment s;
        s.index = i;
        s.start = t;
        s.end = t + beat * uniform_int(8, 12); // 4 to 6 s
        const int nb = static_cast<int>(std::lround((s.end - s.start) / beat));
        for (int b = 0; b < nb; ++b) s.attributes.beats.push_back(s.start + beat * b);
        all_beats.insert(all_beats.end(), s.attributes.beats.begin(), s.attributes.beats.end());
        s.attributes.emotion = kAllEmotions[uniform_int(0, 6)];
        s.attributes.energy_profile = EnergyProfile::mid;
        s.attributes.mean_energy = 0.5;
        s.attributes.tempo_bpm = 120.0;
        t = s.end;
        inst.segments.push_back(std::move(s));
    }
    inst.track.music_id = "synthetic-" + std::to_string(seed);
    inst.track.duration = t;
    inst.track.annotation = MusicAnnotation{all_beats, {}};
    for (const auto &s : inst.segments) {
        inst.track.annotation->segments.push_back({s.start, s.end, s.attributes.emotion, 0.5});
    }

    // Shots live in a shared pool; the same slot always maps to the same
    // source span, so picking it twice across segments repeats a shot.
    const int slots = 24 * m;
    for (int i = 0; i < m; ++i) {
        const auto &seg = inst.segments[i];
        const int total_beats = static_cast<int>(std::lround(seg.length() / beat));
        std::vector<SubTimeline> cands;
        for (int c = 0; c < k; ++c) {
            // split into pieces of 2..4 beats (1 to 2 s)
            std::vector<int> pieces;
            int left = total_beats;
            while (left > 0) {
                int p = left <= 4 ? left : uniform_int(2, std::min(4, left - 2));
                pieces.push_back(p);
                left -= p;
            }
            SubTimeline sub;
            sub.segment_index = i;
            std::vector<int> used;
            double at = seg.start;
            for (int p : pieces) {
                int slot = 0;
                do {
                    slot = uniform_int(0, slots - 1);
                } while (std::find(used.begin(), used.end(), slot) != used.end());
                used.push_back(slot);
                TimelineUnit u;
                u.source_id = "v" + std::to_string(slot % 3);
                u.source_in = 10.0 * (slot / 3);
                u.source_out = u.source_in + beat * p;
                u.timeline_start = at;
                u.caption = "shot " + std::to_string(slot);
                u.emotion = uniform(0.0, 1.0) < 0.7 ? seg.attributes.emotion : kAllEmotions[uniform_int(0, 6)];
                u.relevance = uniform(0.3, 1.0);
                at += beat * p;
                sub.units.push_back(std::move(u));
            }
            sub.memo = recompute_memo(sub);
            cands.push_back(std::move(sub));
        }
        inst.candidates.push_back(std::move(cands));
    }

    for (int i = 0; i < m; ++i) inst.tasks.nodes.push_back({i, i, "segment " + std::to_string(i), planner::TaskStatus::done});
    for (int i = 0; i + 1 < m; ++i) inst.tasks.edges.emplace_back(i, i + 1);
    return inst;
}

// --- oracle repair --------------------------------------------------------

namespace {

/// Objective over the region and its current conflict partners only, so a
/// proposal is judged by the conflicts it was asked to fix.
double focused_objective(const std::vector<SubTimeline> &subs, const std::vector<int> &focus,
                         const NegotiationContext &ctx, double weight) {
    double j = 0.0;
    for (int i : focus) j += segment_quality(subs[i], ctx.segments[i], ctx.scorer);
    for (std::size_t a = 0; a < focus.size(); ++a) {
        for (std::size_t b = a + 1; b < focus.size(); ++b) {
            const int p = focus[a];
            const int q = focus[b];
            j += pairwise_penalty(subs[p], subs[q], ctx.segments[p], ctx.segments[q], ctx.scorer);
            if (!conflict_predicate(subs[p], subs[q], ctx.segments[p], ctx.segments[q], ctx.intent.family,
                                    ctx.thresholds)
                     .empty())
                j -= weight;
        }
    }
    return j;
}

} // namespace

Proposal OracleRepairer::propose(const RepairRegion &region, const RepairDirective &,
                                 const std::vector<SubTimeline> &current, const NegotiationContext &ctx) {
    std::vector<int> sizes;
    for (int v : region.members) sizes.push_back(static_cast<int>(sets_.at(v).size()));
    std::int64_t n = 1;
    for (int s : sizes) n *= s;

    std::set<int> focus(region.members.begin(), region.members.end());
    const auto graph = detect_conflicts(current, ctx.segments, ctx.tasks, ctx.intent.family, ctx.thresholds);
    for (const auto &e : graph.edges) {
        if (focus.contains(e.p) || focus.contains(e.q)) {
            focus.insert(e.p);
            focus.insert(e.q);
        }
    }
    const std::vector<int> f(focus.begin(), focus.end());

    Proposal p;
    auto trial = current;
    double best = focused_objective(current, f, ctx, conflict_weight_);
    std::vector<SubTimeline> best_members;
    for (int v : region.members) best_members.push_back(current[v]);
    for (std::int64_t idx = 0; idx < n; ++idx) {
        const auto c = kernels::decode(idx, sizes);
        for (std::size_t k = 0; k < c.size(); ++k) trial[region.members[k]] = sets_[region.members[k]][c[k]];
        ++p.evaluations;
        const double j = focused_objective(trial, f, ctx, conflict_weight_);
        // strict improvement only, so a region at its optimum stays put
        if (j > best + 1e-12) {
            best = j;
            for (std::size_t k = 0; k < c.size(); ++k) best_members[k] = trial[region.members[k]];
        }
    }
    p.members = std::move(best_members);
    return p;
}

CorrectiveRun run_corrective_oracle(const SyntheticInstance &inst, const NegotiationParams &params,
                                    const ScorerConfig &scorer, bool preventive) {
    CorrectiveRun run;
    const auto m = inst.candidates.size();
    std::vector<SubTimeline> subs(m);
    run.start_choice.assign(m, 0);
    // Each task in DAG order sees its finished ancestors, as the controller
    // would show them, and picks the candidate that fits best with them.
    for (int i : planner::topological_order(inst.tasks)) {
        const auto &set = inst.candidates[i];
        const auto ancestors = inst.tasks.ancestors(i);
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < set.size(); ++a) {
            double q = segment_quality(set[a], inst.segments[i], scorer);
            if (preventive) {
                for (int j : ancestors) q += pairwise_penalty(subs[j], set[a], inst.segments[j], inst.segments[i], scorer);
            }
            ++run.preventive_evaluations;
            if (q > best_q) {
                best_q = q;
                best = static_cast<int>(a);
            }
        }
        run.start_choice[i] = best;
        subs[i] = set[best];
    }
    const NegotiationContext ctx{inst.segments, inst.intent, inst.tasks, scorer, {scorer.epsilon_beat}};
    {
        Timeline start;
        start.segments = subs;
        run.start_score = global_score(start, inst.intent, inst.segments, scorer).total;
    }
    agent::ScriptedBackend backend(0);
    register_scripted(backend);
    OracleRepairer repairer(inst.candidates, params.conflict_weight);
    run.report = negotiate(subs, ctx, repairer, backend, run.ledger, params);
    run.final = global_refine(compose_timelines(std::move(subs), inst.track.music_id), inst.track,
                              inst.segments);
    run.score = global_score(run.final, inst.intent, inst.segments, scorer).total;
    return run;
}

} // namespace beatcut::coord
