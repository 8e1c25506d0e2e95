// SPDX-License-Identifier: Apache-2.0
#include "beatcut/coordinator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/ingest.hpp"
#include "beatcut/kernels.hpp"
#include "beatcut/text.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut::coord {

namespace {

std::string join_ints(const std::vector<int> &v, std::string_view sep = ",") {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) out += sep;
        out += std::to_string(v[k]);
    }
    return out;
}

std::string join_set(const std::set<std::string> &s) {
    return s.empty() ? "none" : text::join({s.begin(), s.end()}, ",");
}

agent::Payload span_json(const ClipSpan &s) {
    return {{"source", s.source_id}, {"in", s.in}, {"out", s.out}};
}

ClipSpan parse_span(const agent::Payload &p) {
    if (!p.is_object() || !p.contains("source") || !p.contains("in") || !p.contains("out"))
        throw AgentProtocolError("malformed span: " + p.dump());
    return {p.at("source").get<std::string>(), p.at("in").get<double>(), p.at("out").get<double>()};
}

std::string span_str(const ClipSpan &s) {
    return s.source_id + "@" + text::fmt_seconds(s.in) + "-" + text::fmt_seconds(s.out);
}

} // namespace

// --- controller -----------------------------------------------------------

Digest make_digest(const planner::CompletedTask &task) {
    const auto &m = task.memo;
    std::ostringstream os;
    os << "segment " << task.segment_index << ": " << m.used_clip_spans.size() << " shots; emotion="
       << (m.dominant_emotion ? to_string(*m.dominant_emotion) : "none")
       << "; cast=" << join_set(m.main_characters) << "; last: " << m.last_shot_summary;
    Digest d;
    d.segments = {task.segment_index};
    d.text = text::cap_words(os.str(), kMemoSummaryWords);
    d.used_spans = m.used_clip_spans;
    return d;
}

Digest aggregate_digest(std::span<const planner::CompletedTask> tasks) {
    Digest d;
    d.aggregate = true;
    std::set<std::string> emotions;
    std::set<std::string> cast;
    std::size_t shots = 0;
    for (const auto &t : tasks) {
        d.segments.push_back(t.segment_index);
        if (t.memo.dominant_emotion) emotions.insert(std::string(to_string(*t.memo.dominant_emotion)));
        cast.insert(t.memo.main_characters.begin(), t.memo.main_characters.end());
        shots += t.memo.used_clip_spans.size();
        d.used_spans.insert(d.used_spans.end(), t.memo.used_clip_spans.begin(),
                            t.memo.used_clip_spans.end());
    }
    std::ostringstream os;
    os << "segments " << join_ints(d.segments) << ": " << shots << " shots; emotions=" << join_set(emotions)
       << "; cast=" << join_set(cast);
    d.text = text::cap_words(os.str(), kMemoSummaryWords);
    return d;
}

std::set<std::string> instruction_keywords(const std::string &instruction) {
    static const std::set<std::string> noise = {"segment", "theme", "emotion", "pace", "beats", "focus",
                                                "low", "mid", "high", "general", "after", "repair"};
    std::set<std::string> out;
    for (auto &w : text::content_words(instruction)) {
        if (noise.contains(w)) continue;
        if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) continue;
        out.insert(std::move(w));
    }
    return out;
}

namespace {

std::set<std::string> video_keywords(const VideoMeta &v) {
    std::set<std::string> out;
    for (const auto &s : v.scenes) {
        for (const auto &k : s.keywords) {
            for (auto &w : text::content_words(k)) out.insert(std::move(w));
        }
    }
    return out;
}

agent::Payload scripted_controller(const agent::Payload &ctx, std::uint64_t) {
    const auto keys = instruction_keywords(ctx.at("instruction").get<std::string>());
    agent::Payload scope = agent::Payload::array();
    agent::Payload all = agent::Payload::array();
    for (const auto &v : ctx.at("videos")) {
        all.push_back(v.at("id"));
        for (const auto &k : v.at("keywords")) {
            if (keys.contains(k.get<std::string>())) {
                scope.push_back(v.at("id"));
                break;
            }
        }
    }
    return {{"scope", scope.empty() ? all : scope}, {"objective", ctx.at("objective")}};
}

} // namespace

ContextBundle build_context_bundle(const planner::TaskNode &task, const MusicSegment &segment,
                                   const std::vector<planner::CompletedTask> &done_ancestors,
                                   std::span<const VideoMeta> videos, const EditIntent &intent,
                                   agent::Backend &backend, agent::TokenLedger &ledger,
                                   const ControllerParams &params) {
    ContextBundle b;
    b.segment_index = task.segment_index;
    b.segment = segment;
    b.instruction = task.instruction;
    b.family = intent.family;
    {
        std::ostringstream os;
        os << "fill segment " << segment.index << " (" << text::fmt_seconds(segment.start) << "-"
           << text::fmt_seconds(segment.end) << " s, " << segment.attributes.beats.size()
           << " beats) with cuts on the beat";
        b.objective = os.str();
    }
    std::set<std::string> all;
    for (const auto &v : videos) all.insert(v.video_id);

    if (!params.preventive) {
        b.retrieval_scope = all;
        return b;
    }

    const auto n = done_ancestors.size();
    const auto w = static_cast<std::size_t>(std::max(0, params.window));
    if (n > w) {
        b.prior_summaries.push_back(
            aggregate_digest(std::span(done_ancestors).first(n - w)));
    }
    for (std::size_t k = n > w ? n - w : 0; k < n; ++k) b.prior_summaries.push_back(make_digest(done_ancestors[k]));

    agent::Payload vids = agent::Payload::array();
    for (const auto &v : videos) {
        const auto kw = video_keywords(v);
        vids.push_back({{"id", v.video_id}, {"keywords", std::vector<std::string>(kw.begin(), kw.end())}});
    }
    agent::Payload digests = agent::Payload::array();
    for (const auto &d : b.prior_summaries) digests.push_back(d.text);
    agent::Payload ctx = {{"segment_index", task.segment_index},
                          {"instruction", task.instruction},
                          {"objective", b.objective},
                          {"videos", vids},
                          {"digests", digests}};
    const auto res = agent::invoke({agent::Role::controller, ctx, "context_selection"}, backend, ledger);
    for (const auto &id : res.payload.at("scope")) {
        if (all.contains(id.get<std::string>())) b.retrieval_scope.insert(id.get<std::string>());
    }
    if (b.retrieval_scope.empty()) b.retrieval_scope = all;
    const auto objective = res.payload.at("objective").get<std::string>();
    if (!objective.empty()) b.objective = objective;
    return b;
}

// --- conflicts ------------------------------------------------------------

std::string_view to_string(ConflictType t) noexcept {
    switch (t) {
    case ConflictType::rhythm: return "rhythm";
    case ConflictType::emotion: return "emotion";
    case ConflictType::character: return "character";
    case ConflictType::story: return "story";
    }
    return "story";
}

ConflictType parse_conflict_type(std::string_view s) {
    for (auto t : {ConflictType::rhythm, ConflictType::emotion, ConflictType::character, ConflictType::story}) {
        if (to_string(t) == s) return t;
    }
    throw AgentProtocolError("unknown conflict type '" + std::string(s) + "'");
}

namespace {

std::uint8_t bits(const ConflictSet &s) {
    std::uint8_t b = 0;
    for (auto t : s) b |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(t));
    return b;
}

ConflictSet from_bits(std::uint8_t b) {
    ConflictSet s;
    for (auto t : {ConflictType::rhythm, ConflictType::emotion, ConflictType::character, ConflictType::story}) {
        if (b & (1u << static_cast<unsigned>(t))) s.insert(t);
    }
    return s;
}

agent::Payload types_json(const ConflictSet &s) {
    agent::Payload a = agent::Payload::array();
    for (auto t : s) a.push_back(std::string(to_string(t)));
    return a;
}

} // namespace

ConflictSet conflict_predicate(const SubTimeline &p, const SubTimeline &q, const MusicSegment &mp,
                               const MusicSegment &mq, TaskFamily family, const ConflictThresholds &th) {
    ConflictSet out;
    const MusicSegment *first = &mp;
    const MusicSegment *second = &mq;
    const SubTimeline *a = &p;
    const SubTimeline *b = &q;
    if (mq.index + 1 == mp.index) {
        std::swap(first, second);
        std::swap(a, b);
    }
    if (first->index + 1 == second->index) {
        // rhythm
        std::vector<double> grid = first->attributes.beats;
        grid.insert(grid.end(), second->attributes.beats.begin(), second->attributes.beats.end());
        grid.push_back(first->end);
        std::sort(grid.begin(), grid.end());
        std::vector<double> cuts;
        if (!a->units.empty()) cuts.push_back(a->units.back().timeline_end());
        if (!b->units.empty()) cuts.push_back(b->units.front().timeline_start);
        for (double c : cuts) {
            if (distance_to_nearest_beat(c, grid) > th.epsilon_beat + kTimeEps) {
                out.insert(ConflictType::rhythm);
                break;
            }
        }
    }
    const bool neighbours = first->index + 1 == second->index;
    if (neighbours && emotion_clash(p, q, mp, mq)) out.insert(ConflictType::emotion);
    if (neighbours && family == TaskFamily::story_driven) {
        const auto cp = main_characters(p);
        const auto cq = main_characters(q);
        if (!cp.empty() && !cq.empty() &&
            std::none_of(cp.begin(), cp.end(), [&](const auto &x) { return cq.contains(x); }))
            out.insert(ConflictType::character);
    }
    if (duplicate_span_count(p, q) > 0) out.insert(ConflictType::story);
    return out;
}

agent::Payload ConflictGraph::to_json() const {
    agent::Payload es = agent::Payload::array();
    for (const auto &e : edges) es.push_back({{"p", e.p}, {"q", e.q}, {"types", types_json(e.types)}});
    return {{"nodes", node_count}, {"edges", es}};
}

std::vector<std::pair<int, int>> candidate_pairs(int n, const planner::TaskGraph &tasks) {
    std::set<std::pair<int, int>> s;
    for (int i = 0; i + 1 < n; ++i) s.emplace(i, i + 1);
    // connected in the task graph: one is an ancestor of the other
    for (const auto &node : tasks.nodes) {
        const int b = node.task_id;
        if (b < 0 || b >= n) continue;
        for (int a : tasks.ancestors(b)) {
            if (a < 0 || a >= n || a == b) continue;
            s.emplace(std::min(a, b), std::max(a, b));
        }
    }
    return {s.begin(), s.end()};
}

ConflictGraph detect_conflicts(std::span<const SubTimeline> subs, std::span<const MusicSegment> segments,
                               const planner::TaskGraph &tasks, TaskFamily family,
                               const ConflictThresholds &th, bool parallel) {
    if (subs.size() != segments.size())
        throw PreconditionError("conflict detection needs one sub-timeline per segment");
    const int n = static_cast<int>(subs.size());
    const auto pairs = candidate_pairs(n, tasks);
    const kernels::PairFn fn = [&](int p, int q) {
        return bits(conflict_predicate(subs[p], subs[q], segments[p], segments[q], family, th));
    };
    const auto found = parallel ? kernels::pairs_parallel(pairs, fn) : kernels::pairs_serial(pairs, fn);
    ConflictGraph g;
    g.node_count = n;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (found[k]) g.edges.push_back({pairs[k].first, pairs[k].second, from_bits(found[k])});
    }
    return g;
}

namespace {

agent::Payload scripted_diagnostic(const agent::Payload &, std::uint64_t) {
    // The algorithmic detectors already ran; nothing to add offline.
    return {{"edges", agent::Payload::array()}};
}

} // namespace

ConflictGraph build_conflict_graph(std::span<const SubTimeline> subs, std::span<const MusicSegment> segments,
                                   const planner::TaskGraph &tasks, const EditIntent &intent,
                                   agent::Backend &backend, agent::TokenLedger &ledger,
                                   const ConflictThresholds &th) {
    auto g = detect_conflicts(subs, segments, tasks, intent.family, th);
    agent::Payload nodes = agent::Payload::array();
    for (const auto &s : subs) {
        nodes.push_back({{"index", s.segment_index},
                         {"emotion", s.memo.dominant_emotion ? to_string(*s.memo.dominant_emotion) : "none"},
                         {"cast", join_set(s.memo.main_characters)},
                         {"shots", s.units.size()},
                         {"last", s.memo.last_shot_summary}});
    }
    agent::Payload ctx = {{"task_family", std::string(to_string(intent.family))},
                          {"nodes", nodes},
                          {"detected", g.to_json().at("edges")}};
    const auto res = agent::invoke({agent::Role::diagnostic, ctx, "conflict_edges"}, backend, ledger);

    std::map<std::pair<int, int>, ConflictSet> merged;
    for (const auto &e : g.edges) merged[{e.p, e.q}] = e.types;
    const int n = g.node_count;
    for (const auto &e : res.payload.at("edges")) {
        if (!e.is_object() || !e.contains("p") || !e.contains("q") || !e.contains("types"))
            throw AgentProtocolError("malformed conflict edge: " + e.dump());
        const int p = e.at("p").get<int>();
        const int q = e.at("q").get<int>();
        if (p == q || p < 0 || q < 0 || p >= n || q >= n)
            throw AgentProtocolError("conflict edge with bad endpoints: " + e.dump());
        auto &slot = merged[{std::min(p, q), std::max(p, q)}];
        for (const auto &t : e.at("types")) slot.insert(parse_conflict_type(t.get<std::string>()));
    }
    g.edges.clear();
    for (auto &[k, t] : merged) {
        if (!t.empty()) g.edges.push_back({k.first, k.second, std::move(t)});
    }
    return g;
}

// --- regions --------------------------------------------------------------

int region_cap(int node_count) noexcept { return std::max(1, std::min(4, node_count / 4)); }

namespace {

std::vector<int> task_neighbours(const planner::TaskGraph &tasks, int v) {
    std::set<int> s;
    for (const auto &[a, b] : tasks.edges) {
        if (a == v) s.insert(b);
        if (b == v) s.insert(a);
    }
    return {s.begin(), s.end()};
}

std::vector<int> typed_neighbours(const ConflictGraph &g, int v, ConflictType t) {
    std::set<int> s;
    for (const auto &e : g.edges) {
        if (!e.types.contains(t)) continue;
        if (e.p == v) s.insert(e.q);
        if (e.q == v) s.insert(e.p);
    }
    return {s.begin(), s.end()};
}

RepairRegion expand(const ConflictEdge &e, ConflictType t, const ConflictGraph &g,
                    const planner::TaskGraph &tasks, int cap) {
    std::vector<int> members;
    auto add = [&](int v) {
        if (static_cast<int>(members.size()) >= cap) return false;
        if (std::find(members.begin(), members.end(), v) != members.end()) return false;
        members.push_back(v);
        return true;
    };
    add(e.p);
    add(e.q);
    auto bfs = [&](auto neighbours) {
        std::deque<int> queue(members.begin(), members.end());
        while (!queue.empty() && static_cast<int>(members.size()) < cap) {
            const int v = queue.front();
            queue.pop_front();
            for (int w : neighbours(v)) {
                if (add(w)) queue.push_back(w);
            }
        }
    };
    bfs([&](int v) { return typed_neighbours(g, v, t); });
    bfs([&](int v) { return task_neighbours(tasks, v); });
    std::sort(members.begin(), members.end());
    RepairRegion r;
    r.members = std::move(members);
    r.type = t;
    r.types = {t};
    return r;
}

std::vector<RepairRegion> dedupe(std::vector<RepairRegion> regions) {
    std::vector<RepairRegion> out;
    for (auto &r : regions) {
        const bool seen = std::any_of(out.begin(), out.end(), [&](const auto &o) {
            return o.members == r.members && o.type == r.type && o.types == r.types;
        });
        if (!seen) out.push_back(std::move(r));
    }
    for (std::size_t k = 0; k < out.size(); ++k) out[k].region_id = static_cast<int>(k);
    return out;
}

} // namespace

std::vector<RepairRegion> decompose_regions(const ConflictGraph &graph, const planner::TaskGraph &tasks) {
    const int cap = region_cap(graph.node_count);
    std::vector<RepairRegion> out;
    for (const auto &e : graph.edges) {
        for (auto t : e.types) out.push_back(expand(e, t, graph, tasks, cap));
    }
    return dedupe(std::move(out));
}

std::vector<RepairRegion> pair_regions(const ConflictGraph &graph) {
    std::vector<RepairRegion> out;
    for (const auto &e : graph.edges) {
        RepairRegion r;
        r.members = {e.p, e.q};
        r.type = *e.types.begin();
        r.types = e.types;
        out.push_back(std::move(r));
    }
    return dedupe(std::move(out));
}

std::vector<RepairRegion> merge_regions(const std::vector<RepairRegion> &regions,
                                        const ConflictGraph &residual, const ConflictGraph &previous,
                                        const planner::TaskGraph &tasks,
                                        const std::vector<ConflictEdge> &provoked) {
    const int cap = region_cap(residual.node_count);
    auto holds = [](const RepairRegion &r, int v) {
        return std::binary_search(r.members.begin(), r.members.end(), v);
    };
    auto is_new = [&](const ConflictEdge &e) {
        for (const auto &o : previous.edges) {
            if (o.p == e.p && o.q == e.q)
                return !std::includes(o.types.begin(), o.types.end(), e.types.begin(), e.types.end());
        }
        return true;
    };
    std::vector<RepairRegion> out;
    std::vector<std::pair<ConflictEdge, bool>> work; // edge, provoked
    for (const auto &e : residual.edges) work.emplace_back(e, false);
    for (const auto &e : provoked) work.emplace_back(e, true);
    for (const auto &[e, forced] : work) {
        std::vector<const RepairRegion *> hit;
        for (const auto &r : regions) {
            if (holds(r, e.p) || holds(r, e.q)) hit.push_back(&r);
        }
        if (hit.empty()) {
            if (!forced) {
                for (auto t : e.types) out.push_back(expand(e, t, residual, tasks, cap));
            }
            continue;
        }
        const bool escalate = std::any_of(hit.begin(), hit.end(), [](const auto *r) { return !r->merged; });
        if (!forced && !is_new(e) && !escalate) continue; // already tried jointly; retire
        // union over the regions as they were, so merges do not chain
        std::set<int> members{e.p, e.q};
        RepairRegion m;
        m.type = hit.front()->type;
        m.types = e.types;
        for (const auto *r : hit) {
            members.insert(r->members.begin(), r->members.end());
            m.types.insert(r->types.begin(), r->types.end());
        }
        m.members.assign(members.begin(), members.end());
        m.merged = true;
        out.push_back(std::move(m));
    }
    // same members: one region carrying every type
    std::vector<RepairRegion> collapsed;
    for (auto &r : out) {
        auto it = std::find_if(collapsed.begin(), collapsed.end(),
                               [&](const auto &o) { return o.members == r.members && o.merged == r.merged; });
        if (it == collapsed.end()) {
            collapsed.push_back(std::move(r));
        } else {
            it->types.insert(r.types.begin(), r.types.end());
        }
    }
    return dedupe(std::move(collapsed));
}

// --- negotiation ----------------------------------------------------------

agent::Payload NegotiationReport::to_json() const {
    return {{"skipped", skipped},
            {"initial_edges", initial_edges},
            {"iterations", iterations},
            {"regions_attempted", regions_attempted},
            {"regions_repaired", regions_repaired},
            {"residual_edges", residual_edges},
            {"terminal", terminal},
            {"evaluations", evaluations},
            {"region_sizes", region_sizes},
            {"log", log}};
}

double repair_objective(std::span<const SubTimeline> subs, const NegotiationContext &ctx,
                        double conflict_weight) {
    Timeline t;
    t.segments.assign(subs.begin(), subs.end());
    const double score = global_score(t, ctx.intent, ctx.segments, ctx.scorer).total;
    const auto g = detect_conflicts(subs, ctx.segments, ctx.tasks, ctx.intent.family, ctx.thresholds);
    return score - conflict_weight * static_cast<double>(g.edges.size());
}

namespace {

agent::Payload scripted_negotiator(const agent::Payload &ctx, std::uint64_t) {
    const auto &region = ctx.at("region");
    std::vector<std::string> types;
    for (const auto &t : region.at("types")) types.push_back(t.get<std::string>());
    std::vector<int> members = region.at("members").get<std::vector<int>>();

    std::ostringstream os;
    os << "resolve " << text::join(types, "/") << " between segments " << join_ints(members);
    agent::Payload out = agent::Payload::object();
    auto has = [&](const char *t) { return std::find(types.begin(), types.end(), t) != types.end(); };
    if (has("story")) {
        const auto &dups = ctx.at("duplicates");
        std::vector<std::string> parts;
        for (const auto &d : dups) parts.push_back(span_str(parse_span(d)));
        os << ": avoid spans " << (parts.empty() ? "none" : text::join(parts, ", "));
        out["avoid_spans"] = dups;
    }
    if (has("emotion")) {
        const auto e = ctx.at("music_emotion").get<std::string>();
        os << " / target emotion " << e;
        out["target_emotion"] = e;
    }
    if (has("rhythm")) {
        std::vector<std::string> beats;
        for (const auto &b : ctx.at("beats")) beats.push_back(text::fmt_seconds(b.get<double>()));
        os << " / cut on beat " << (beats.empty() ? "grid" : text::join(beats, ", "));
    }
    if (has("character")) {
        const auto cast = ctx.at("partner_cast").get<std::vector<std::string>>();
        os << " / keep characters " << (cast.empty() ? "none" : text::join(cast, ","));
        out["target_characters"] = cast;
    }
    out["instruction"] = os.str();
    return out;
}

/// Facts the negotiator gets about one region in the current state.
agent::Payload region_context(const RepairRegion &r, std::span<const SubTimeline> subs,
                              const ConflictGraph &g, const NegotiationContext &ctx) {
    auto member = [&](int v) { return std::binary_search(r.members.begin(), r.members.end(), v); };
    agent::Payload conflicts = agent::Payload::array();
    agent::Payload dups = agent::Payload::array();
    std::set<std::string> partner_cast;
    std::set<double> beats;
    for (const auto &e : g.edges) {
        if (!member(e.p) && !member(e.q)) continue;
        bool relevant = false;
        for (auto t : e.types) relevant = relevant || r.types.contains(t);
        if (!relevant) continue;
        conflicts.push_back({{"p", e.p}, {"q", e.q}, {"types", types_json(e.types)}});
        if (e.types.contains(ConflictType::story)) {
            for (const auto &a : subs[e.p].units) {
                for (const auto &b : subs[e.q].units) {
                    if (!is_duplicate(a.span(), b.span())) continue;
                    // name the shot as used by the member side
                    const auto &own = member(e.q) ? b : a;
                    const auto j = span_json(own.span());
                    if (std::find(dups.begin(), dups.end(), j) == dups.end()) dups.push_back(j);
                }
            }
        }
        if (e.types.contains(ConflictType::character)) {
            for (int side : {e.p, e.q}) {
                if (member(side)) continue;
                const auto c = main_characters(subs[side]);
                partner_cast.insert(c.begin(), c.end());
            }
        }
        if (e.types.contains(ConflictType::rhythm)) {
            const int lo = std::min(e.p, e.q);
            if (!subs[lo].units.empty()) {
                const double cut = subs[lo].units.back().timeline_end();
                std::vector<double> grid = ctx.segments[lo].attributes.beats;
                grid.push_back(ctx.segments[lo].end);
                if (auto b = nearest_beat(cut, grid)) beats.insert(*b);
            }
        }
    }
    if (partner_cast.empty()) {
        for (int v : r.members) {
            for (int w : {v - 1, v + 1}) {
                if (w < 0 || w >= static_cast<int>(subs.size()) || member(w)) continue;
                const auto c = main_characters(subs[w]);
                partner_cast.insert(c.begin(), c.end());
            }
        }
    }
    return {{"region", {{"id", r.region_id},
                        {"members", r.members},
                        {"type", std::string(to_string(r.type))},
                        {"types", types_json(r.types)}}},
            {"conflicts", conflicts},
            {"duplicates", dups},
            {"music_emotion", std::string(to_string(ctx.segments[r.members.front()].attributes.emotion))},
            {"beats", std::vector<double>(beats.begin(), beats.end())},
            {"partner_cast", std::vector<std::string>(partner_cast.begin(), partner_cast.end())}};
}

RepairDirective to_directive(const agent::Payload &p) {
    RepairDirective d;
    d.instruction = p.at("instruction").get<std::string>();
    if (p.contains("avoid_spans") && p.at("avoid_spans").is_array()) {
        for (const auto &s : p.at("avoid_spans")) d.avoid_spans.push_back(parse_span(s));
    }
    if (p.contains("target_emotion") && p.at("target_emotion").is_string()) {
        auto e = try_parse_emotion(p.at("target_emotion").get<std::string>());
        if (!e) throw AgentProtocolError("negotiator proposed an unknown emotion");
        d.target_emotion = e;
    }
    if (p.contains("target_characters") && p.at("target_characters").is_array()) {
        for (const auto &c : p.at("target_characters")) d.target_characters.insert(c.get<std::string>());
    }
    return d;
}

bool same_regions(std::vector<RepairRegion> a, std::vector<RepairRegion> b) {
    for (auto &r : a) r.repair_instruction.reset();
    for (auto &r : b) r.repair_instruction.reset();
    return a == b;
}

} // namespace

NegotiationReport negotiate(std::vector<SubTimeline> &subs, const NegotiationContext &ctx,
                            RegionRepairer &repairer, agent::Backend &backend,
                            agent::TokenLedger &ledger, const NegotiationParams &params) {
    if (params.budget < 1) throw PreconditionError("negotiation budget must be at least 1");
    NegotiationReport rep;
    auto graph = build_conflict_graph(subs, ctx.segments, ctx.tasks, ctx.intent, backend, ledger,
                                      ctx.thresholds);
    rep.initial_edges = static_cast<int>(graph.edges.size());
    if (graph.edgeless()) {
        rep.terminal = "no_conflicts";
        return rep;
    }
    auto regions = params.decompose ? decompose_regions(graph, ctx.tasks) : pair_regions(graph);
    // (members, state) pairs already searched; a repeat would return the same proposal
    std::vector<std::pair<std::vector<int>, std::vector<SubTimeline>>> tried;

    while (rep.iterations < params.budget) {
        ++rep.iterations;
        const auto before = subs;
        const auto before_graph = graph;
        agent::Payload round = {{"iteration", rep.iterations}, {"regions", agent::Payload::array()}};
        std::vector<ConflictEdge> provoked;
        for (auto &region : regions) {
            const bool repeat = std::any_of(tried.begin(), tried.end(), [&](const auto &t) {
                return t.first == region.members && t.second == subs;
            });
            if (repeat) {
                round["regions"].push_back({{"id", region.region_id}, {"members", region.members}, {"skipped", true}});
                continue;
            }
            tried.emplace_back(region.members, subs);
            const auto now = detect_conflicts(subs, ctx.segments, ctx.tasks, ctx.intent.family, ctx.thresholds);
            const auto req = region_context(region, subs, now, ctx);
            const auto res = agent::invoke({agent::Role::negotiator, req, "repair_instruction"}, backend, ledger);
            const auto directive = to_directive(res.payload);
            region.repair_instruction = directive.instruction;

            auto proposal = repairer.propose(region, directive, subs, ctx);
            if (proposal.members.size() != region.members.size())
                throw PreconditionError("repairer returned the wrong number of segments");
            rep.evaluations += proposal.evaluations;
            rep.region_sizes.push_back(region.members.size());
            ++rep.regions_attempted;

            auto trial = subs;
            for (std::size_t k = 0; k < region.members.size(); ++k) {
                auto s = std::move(proposal.members[k]);
                s.segment_index = region.members[k];
                trial[region.members[k]] = std::move(s);
            }
            const double old_j = repair_objective(subs, ctx, params.conflict_weight);
            const double new_j = repair_objective(trial, ctx, params.conflict_weight);
            const bool accepted = new_j > old_j + 1e-12;
            if (accepted) {
                subs = std::move(trial);
                ++rep.regions_repaired;
            } else if (trial != subs) {
                // what the rejected proposal would have broken outside the region
                const auto would = detect_conflicts(trial, ctx.segments, ctx.tasks, ctx.intent.family, ctx.thresholds);
                auto member = [&](int v) {
                    return std::binary_search(region.members.begin(), region.members.end(), v);
                };
                for (const auto &e : would.edges) {
                    if (member(e.p) == member(e.q)) continue;
                    const bool existed = std::any_of(now.edges.begin(), now.edges.end(), [&](const auto &o) {
                        return o.p == e.p && o.q == e.q &&
                               std::includes(o.types.begin(), o.types.end(), e.types.begin(), e.types.end());
                    });
                    if (!existed) provoked.push_back(e);
                }
            }
            round["regions"].push_back({{"id", region.region_id},
                                        {"members", region.members},
                                        {"types", types_json(region.types)},
                                        {"merged", region.merged},
                                        {"instruction", directive.instruction},
                                        {"accepted", accepted},
                                        {"objective_before", old_j},
                                        {"objective_after", accepted ? new_j : old_j}});
        }
        graph = build_conflict_graph(subs, ctx.segments, ctx.tasks, ctx.intent, backend, ledger,
                                     ctx.thresholds);
        round["edges_after"] = graph.edges.size();
        rep.log.push_back(std::move(round));
        if (graph.edgeless()) {
            rep.terminal = "resolved";
            break;
        }
        if (!params.merge) {
            rep.terminal = "single_pass";
            break;
        }
        auto next = params.decompose ? merge_regions(regions, graph, before_graph, ctx.tasks, provoked) : pair_regions(graph);
        if (next.empty() || (subs == before && same_regions(next, regions))) {
            rep.terminal = "stalled";
            break;
        }
        regions = std::move(next);
    }
    if (rep.terminal.empty()) rep.terminal = "budget";
    rep.residual_edges = static_cast<int>(graph.edges.size());
    return rep;
}

LiveRepairer::LiveRepairer(std::vector<ContextBundle> bundles, std::span<const VideoMeta> pool,
                           agent::Backend &backend, agent::TokenLedger &ledger,
                           editor::EditorParams params)
    : bundles_(std::move(bundles)), pool_(pool), backend_(backend), ledger_(ledger),
      params_(std::move(params)) {}

Proposal LiveRepairer::propose(const RepairRegion &region, const RepairDirective &directive,
                               const std::vector<SubTimeline> &current, const NegotiationContext &) {
    Proposal p;
    auto working = current;
    for (int m : region.members) {
        auto bundle = bundles_.at(m);
        bundle.instruction += "; repair=" + directive.instruction;
        bundle.avoid_spans = directive.avoid_spans;
        for (std::size_t j = 0; j < working.size(); ++j) {
            if (static_cast<int>(j) == m) continue;
            for (const auto &u : working[j].units) bundle.avoid_spans.push_back(u.span());
        }
        bundle.target_emotion = directive.target_emotion;
        bundle.target_characters = directive.target_characters;
        ++p.evaluations;
        try {
            auto out = editor::inner_loop_edit(bundle, pool_, backend_, ledger_, params_);
            out.sub.segment_index = m;
            out.sub.memo.revision_count += working[m].memo.revision_count + 1;
            working[m] = std::move(out.sub);
        } catch (const EmptySegmentError &) {
            // keep what we had
        }
    }
    for (int m : region.members) p.members.push_back(working[m]);
    return p;
}

// --- global refine --------------------------------------------------------

Timeline global_refine(const Timeline &timeline, const MusicTrack &track,
                       std::span<const MusicSegment> segments, const editor::EditorParams &params) {
    Timeline t = timeline;
    if (t.segments.empty()) return t;

    // trim the tail down to the track length
    double excess = timeline_duration(t) - track.duration;
    for (auto s = t.segments.rbegin(); s != t.segments.rend() && excess > kTimeEps; ++s) {
        while (!s->units.empty() && excess > kTimeEps) {
            auto &u = s->units.back();
            if (u.duration() - excess >= params.min_clip - kTimeEps) {
                u.source_out -= excess;
                excess = 0.0;
            } else {
                excess -= u.duration();
                s->units.pop_back();
            }
        }
    }

    // boundary cuts that drifted off the grid go back to the previous beat
    for (auto &s : t.segments) {
        if (s.units.empty()) continue;
        const auto idx = static_cast<std::size_t>(s.segment_index);
        if (idx >= segments.size()) continue;
        const auto &seg = segments[idx];
        std::vector<double> grid = seg.attributes.beats;
        if (idx + 1 < segments.size())
            grid.insert(grid.end(), segments[idx + 1].attributes.beats.begin(),
                        segments[idx + 1].attributes.beats.end());
        grid.push_back(seg.end);
        std::sort(grid.begin(), grid.end());
        if (grid.size() < 3) continue;
        auto &u = s.units.back();
        const double cut = u.timeline_end();
        if (distance_to_nearest_beat(cut, grid) <= params.epsilon_beat + kTimeEps) continue;
        for (auto b = grid.rbegin(); b != grid.rend(); ++b) {
            if (*b >= cut) continue;
            if (*b - u.timeline_start >= params.min_clip - kTimeEps) u.source_out -= cut - *b;
            break;
        }
    }

    for (auto &s : t.segments) s.memo = recompute_memo(s);
    return t;
}

void register_scripted(agent::ScriptedBackend &backend) {
    backend.on(agent::Role::controller, scripted_controller);
    backend.on(agent::Role::diagnostic, scripted_diagnostic);
    backend.on(agent::Role::negotiator, scripted_negotiator);
}

} // namespace beatcut::coord
