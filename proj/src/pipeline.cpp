// SPDX-License-Identifier: Apache-2.0
#include "beatcut/pipeline.hpp"

#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/evalbench.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut {

using json = nlohmann::json;

// --- toggles and variants -------------------------------------------------

std::string_view to_string(Variant v) noexcept {
    switch (v) {
    case Variant::only_preventive: return "only_preventive";
    case Variant::no_negotiation: return "no_negotiation";
    case Variant::no_region_decomp: return "no_region_decomp";
    case Variant::no_preventive: return "no_preventive";
    case Variant::full: return "full";
    case Variant::custom: return "custom";
    }
    return "custom";
}

Variant variant_of(const Toggles &t) noexcept {
    for (auto v : named_variants()) {
        if (toggles_of(v) == t) return v;
    }
    return Variant::custom;
}

Toggles toggles_of(Variant v) {
    switch (v) {
    case Variant::only_preventive: return {true, false, false};
    case Variant::no_negotiation: return {true, true, false};
    case Variant::no_region_decomp: return {true, false, true};
    case Variant::no_preventive: return {false, true, true};
    case Variant::full: return {true, true, true};
    case Variant::custom: break;
    }
    throw ConfigError("the custom variant has no fixed toggles");
}

const std::vector<Variant> &named_variants() {
    static const std::vector<Variant> v = {Variant::only_preventive, Variant::no_negotiation,
                                           Variant::no_region_decomp, Variant::no_preventive, Variant::full};
    return v;
}

// --- run configuration ----------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

json RunConfig::to_json() const {
    json j = {
        {"backend", backend},
        {"seed", seed},
        {"parallel", parallel},
        {"toggles",
         {{"preventive", toggles.preventive},
          {"region_decomposition", toggles.region_decomposition},
          {"negotiation", toggles.negotiation}}},
        {"scorer",
         {{"p_dup", scorer.p_dup},
          {"p_emo", scorer.p_emo},
          {"w_dur", scorer.w_dur},
          {"beat_bonus", scorer.beat_bonus},
          {"epsilon_beat", scorer.epsilon_beat}}},
        {"editor",
         {{"n_r_max", editor.n_r_max},
          {"n_c_max", editor.n_c_max},
          {"min_clip", editor.min_clip},
          {"epsilon_beat", editor.epsilon_beat},
          {"max_iter", editor.max_iter},
          {"tau_dur_fallback", editor.tau_dur_fallback},
          {"drift_threshold", editor.drift_threshold},
          {"beat_bonus", editor.beat_bonus},
          {"flag_penalty", editor.flag_penalty}}},
        {"segmentation",
         {{"theta_seg", segmentation.theta_seg},
          {"min_beats_per_segment", segmentation.min_beats_per_segment},
          {"fallback_min_length", segmentation.fallback_min_length},
          {"delta", segmentation.beats.delta},
          {"min_gap", segmentation.beats.min_gap}}},
        {"controller_window", controller_window},
        {"budget", budget},
        {"conflict_weight", conflict_weight},
        {"paths", json::object()},
    };
    if (music_path) j["paths"]["music"] = *music_path;
    if (manifest_path) j["paths"]["manifest"] = *manifest_path;
    return j;
}

namespace {

// Reads `obj[key]` into `out` when present.
template <class T> void take(const json &obj, const char *key, T &out, const std::string &where) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception &) {
        throw ConfigError("config field '" + where + key + "' has the wrong type");
    }
}

void only_keys(const json &obj, std::initializer_list<const char *> keys, const std::string &where) {
    if (!obj.is_object()) throw ConfigError("config section '" + where + "' must be an object");
    for (const auto &[k, v] : obj.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char *x) { return k == x; }))
            throw ConfigError("unknown config field '" + where + k + "'");
    }
}

} // namespace

RunConfig RunConfig::from_json(const json &j) {
    RunConfig c;
    only_keys(j,
              {"backend", "seed", "parallel", "toggles", "scorer", "editor", "segmentation", "controller_window",
               "budget", "conflict_weight", "paths"},
              "");
    take(j, "backend", c.backend, "");
    take(j, "seed", c.seed, "");
    take(j, "parallel", c.parallel, "");
    take(j, "controller_window", c.controller_window, "");
    take(j, "budget", c.budget, "");
    take(j, "conflict_weight", c.conflict_weight, "");
    if (j.contains("toggles")) {
        const auto &t = j.at("toggles");
        only_keys(t, {"preventive", "region_decomposition", "negotiation"}, "toggles.");
        take(t, "preventive", c.toggles.preventive, "toggles.");
        take(t, "region_decomposition", c.toggles.region_decomposition, "toggles.");
        take(t, "negotiation", c.toggles.negotiation, "toggles.");
    }
    if (j.contains("scorer")) {
        const auto &s = j.at("scorer");
        only_keys(s, {"p_dup", "p_emo", "w_dur", "beat_bonus", "epsilon_beat"}, "scorer.");
        take(s, "p_dup", c.scorer.p_dup, "scorer.");
        take(s, "p_emo", c.scorer.p_emo, "scorer.");
        take(s, "w_dur", c.scorer.w_dur, "scorer.");
        take(s, "beat_bonus", c.scorer.beat_bonus, "scorer.");
        take(s, "epsilon_beat", c.scorer.epsilon_beat, "scorer.");
    }
    if (j.contains("editor")) {
        const auto &e = j.at("editor");
        only_keys(e,
                  {"n_r_max", "n_c_max", "min_clip", "epsilon_beat", "max_iter", "tau_dur_fallback",
                   "drift_threshold", "beat_bonus", "flag_penalty"},
                  "editor.");
        take(e, "n_r_max", c.editor.n_r_max, "editor.");
        take(e, "n_c_max", c.editor.n_c_max, "editor.");
        take(e, "min_clip", c.editor.min_clip, "editor.");
        take(e, "epsilon_beat", c.editor.epsilon_beat, "editor.");
        take(e, "max_iter", c.editor.max_iter, "editor.");
        take(e, "tau_dur_fallback", c.editor.tau_dur_fallback, "editor.");
        take(e, "drift_threshold", c.editor.drift_threshold, "editor.");
        take(e, "beat_bonus", c.editor.beat_bonus, "editor.");
        take(e, "flag_penalty", c.editor.flag_penalty, "editor.");
    }
    if (j.contains("segmentation")) {
        const auto &s = j.at("segmentation");
        only_keys(s, {"theta_seg", "min_beats_per_segment", "fallback_min_length", "delta", "min_gap"},
                  "segmentation.");
        take(s, "theta_seg", c.segmentation.theta_seg, "segmentation.");
        take(s, "min_beats_per_segment", c.segmentation.min_beats_per_segment, "segmentation.");
        take(s, "fallback_min_length", c.segmentation.fallback_min_length, "segmentation.");
        take(s, "delta", c.segmentation.beats.delta, "segmentation.");
        take(s, "min_gap", c.segmentation.beats.min_gap, "segmentation.");
    }
    if (j.contains("paths")) {
        const auto &p = j.at("paths");
        only_keys(p, {"music", "manifest"}, "paths.");
        std::string s;
        if (p.contains("music")) {
            take(p, "music", s, "paths.");
            c.music_path = s;
        }
        if (p.contains("manifest")) {
            take(p, "manifest", s, "paths.");
            c.manifest_path = s;
        }
    }
    validate(c);
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error &e) {
        throw ConfigError("config " + path.string() + ": " + e.what());
    }
    return from_json(j);
}

std::string RunConfig::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json().dump())));
    return buf;
}

void validate(const RunConfig &c) {
    if (c.backend != "scripted" && c.backend != "remote")
        throw ConfigError("backend must be scripted or remote, got '" + c.backend + "'");
    if (c.budget < 1) throw ConfigError("budget must be at least 1");
    if (c.controller_window < 0) throw ConfigError("controller_window must be non-negative");
    if (c.conflict_weight < 0.0) throw ConfigError("conflict_weight must be non-negative");
    if (c.editor.n_r_max < 1 || c.editor.n_c_max < 1 || c.editor.max_iter < 0)
        throw ConfigError("editor caps must be positive");
    if (!(c.editor.min_clip > 0.0) || !(c.editor.epsilon_beat > 0.0) || !(c.scorer.epsilon_beat > 0.0))
        throw ConfigError("min_clip and epsilon_beat must be positive");
    if (c.scorer.p_dup < 0.0 || c.scorer.p_emo < 0.0 || c.scorer.w_dur < 0.0)
        throw ConfigError("penalty weights must be non-negative");
    if (c.segmentation.min_beats_per_segment < 1 || !(c.segmentation.beats.min_gap > 0.0))
        throw ConfigError("segmentation constants out of range");
}

// --- backends -------------------------------------------------------------

std::unique_ptr<agent::ScriptedBackend> make_scripted_backend(std::uint64_t seed) {
    auto b = std::make_unique<agent::ScriptedBackend>(seed);
    planner::register_scripted(*b);
    editor::register_scripted(*b);
    coord::register_scripted(*b);
    eval::register_scripted(*b);
    return b;
}

std::unique_ptr<agent::Backend> make_backend(const RunConfig &config) {
    validate(config);
    if (config.backend == "remote") return std::make_unique<agent::RemoteBackend>(agent::RemoteConfig::from_env());
    return make_scripted_backend(config.seed);
}

// --- outer loop -----------------------------------------------------------

namespace {

template <class F> auto in_stage(const char *stage, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError &) {
        throw;
    } catch (const Error &e) {
        throw StageError(stage, e);
    }
}

ContextBundle fallback_bundle(const planner::TaskNode &node, const MusicSegment &seg,
                              std::span<const VideoMeta> videos, const EditIntent &intent) {
    ContextBundle b;
    b.segment_index = node.segment_index;
    b.segment = seg;
    b.instruction = node.instruction;
    b.family = intent.family;
    for (const auto &v : videos) b.retrieval_scope.insert(v.video_id);
    return b;
}

} // namespace

json RunResult::report(const RunConfig &config) const {
    json pen = json::array();
    for (const auto &[k, v] : score.pairwise_penalties) pen.push_back({{"i", k.first}, {"j", k.second}, {"g", v}});
    json failed = json::array();
    for (const auto &n : graph.nodes) {
        if (n.status == planner::TaskStatus::failed) failed.push_back(n.task_id);
    }
    return {{"config_hash", config.hash()},
            {"seed", config.seed},
            {"variant", std::string(to_string(variant_of(config.toggles)))},
            {"toggles", config.to_json().at("toggles")},
            {"segments", segments.size()},
            {"failed_tasks", failed},
            {"units", unit_count(final)},
            {"duration", timeline_duration(final)},
            {"negotiation", negotiation.to_json()},
            {"score",
             {{"local", score.local_scores},
              {"pairwise", pen},
              {"global_term", score.global_term},
              {"total", score.total}}},
            {"ledger", ledger.to_json()}};
}

RunResult run_outer_loop(const EditIntent &intent, const MusicTrack &track, std::span<const VideoMeta> videos,
                         const RunConfig &config, agent::Backend &backend) {
    in_stage("config", [&] {
        validate(config);
        validate(intent);
        validate(track);
        for (const auto &v : videos) validate(v);
    });
    RunResult r;
    r.trace.emit("run", "start",
                 {{"config_hash", config.hash()},
                  {"variant", std::string(to_string(variant_of(config.toggles)))},
                  {"videos", videos.size()}});

    r.segments = in_stage("segmentation", [&] { return ingest::segment_music(track, config.segmentation); });
    r.trace.emit("segmentation", "done", {{"segments", r.segments.size()}});

    std::vector<SegmentAttributes> attrs;
    for (const auto &s : r.segments) attrs.push_back(s.attributes);
    r.instructions =
        in_stage("planning", [&] { return planner::plan_instructions(attrs, intent, backend, r.ledger); });
    r.trace.emit("planning", "done", {{"instructions", r.instructions}});

    auto graph = in_stage("graph", [&] { return planner::build_task_graph(r.instructions, backend, r.ledger); });
    r.trace.emit("graph", "done", {{"edges", graph.edges}, {"order", planner::topological_order(graph)}});

    // bundles are kept for repairs during negotiation
    std::vector<std::optional<ContextBundle>> bundles(r.segments.size());
    std::mutex bundles_mu;
    const coord::ControllerParams ctrl{config.toggles.preventive, config.controller_window};
    planner::TaskWorker worker = [&](const planner::TaskNode &node,
                                     const std::vector<planner::CompletedTask> &done) -> planner::TaskOutcome {
        const auto &seg = r.segments.at(node.segment_index);
        auto bundle = coord::build_context_bundle(node, seg, done, videos, intent, backend, r.ledger, ctrl);
        {
            std::lock_guard lock(bundles_mu);
            bundles[node.segment_index] = bundle;
        }
        auto out = editor::inner_loop_edit(bundle, videos, backend, r.ledger, config.editor);
        planner::TaskOutcome o;
        o.events = std::move(out.events);
        o.events.insert(o.events.begin(), json{{"stage", "controller"},
                                               {"event", "bundle"},
                                               {"task_id", node.task_id},
                                               {"digests", bundle.prior_summaries.size()},
                                               {"scope", bundle.retrieval_scope}});
        o.sub = std::move(out.sub);
        o.sub.segment_index = node.segment_index;
        return o;
    };
    auto sched = in_stage("editing", [&] { return planner::execute_dag(graph, worker, r.trace, config.parallel); });
    r.graph = std::move(sched.graph);

    r.composed = in_stage("composition",
                          [&] { return compose_timelines(sched.subtimelines, track.music_id); });
    r.trace.emit("composition", "done", {{"units", unit_count(r.composed)}});

    const bool corrective = config.toggles.region_decomposition || config.toggles.negotiation;
    if (!corrective) {
        r.negotiation.skipped = true;
        r.negotiation.terminal = "skipped";
        r.final = r.composed;
        r.trace.emit("corrective", "skipped");
    } else {
        std::vector<ContextBundle> repair_bundles;
        for (std::size_t i = 0; i < bundles.size(); ++i) {
            repair_bundles.push_back(bundles[i] ? *bundles[i]
                                                : fallback_bundle(r.graph.nodes[i], r.segments[i], videos, intent));
        }
        std::vector<SubTimeline> subs = r.composed.segments;
        coord::NegotiationContext ctx{r.segments, intent, r.graph, config.scorer,
                                      coord::ConflictThresholds{config.editor.epsilon_beat}};
        coord::LiveRepairer repairer(std::move(repair_bundles), videos, backend, r.ledger, config.editor);
        coord::NegotiationParams np;
        np.budget = config.budget;
        np.merge = config.toggles.negotiation;
        np.decompose = config.toggles.region_decomposition;
        np.conflict_weight = config.conflict_weight;
        r.negotiation = in_stage("negotiation",
                                 [&] { return coord::negotiate(subs, ctx, repairer, backend, r.ledger, np); });
        r.trace.emit("negotiation", "done",
                     {{"terminal", r.negotiation.terminal},
                      {"iterations", r.negotiation.iterations},
                      {"residual_edges", r.negotiation.residual_edges}});
        r.final = in_stage("refine", [&] {
            return coord::global_refine(compose_timelines(std::move(subs), track.music_id), track, r.segments,
                                        config.editor);
        });
        r.trace.emit("refine", "done", {{"units", unit_count(r.final)}, {"duration", timeline_duration(r.final)}});
    }

    r.score = in_stage("scoring", [&] { return global_score(r.final, intent, r.segments, config.scorer); });
    r.trace.emit("run", "done", {{"score", r.score.total}, {"tokens", r.ledger.total()}});
    return r;
}

} // namespace beatcut
