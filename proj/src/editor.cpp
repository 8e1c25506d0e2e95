// SPDX-License-Identifier: Apache-2.0
#include "beatcut/editor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "beatcut/errors.hpp"
#include "beatcut/ingest.hpp"
#include "beatcut/kernels.hpp"
#include "beatcut/text.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut::editor {

std::string_view to_string(ConsistencyFlag f) noexcept {
    switch (f) {
    case ConsistencyFlag::emotion_mismatch: return "emotion_mismatch";
    case ConsistencyFlag::character_break: return "character_break";
    case ConsistencyFlag::semantic_drift: return "semantic_drift";
    }
    return "semantic_drift";
}

bool LocalDiagnosis::duration_ok() const noexcept {
    return std::abs(duration_error) <= tau_dur + kTimeEps;
}

bool LocalDiagnosis::pass() const noexcept {
    return duration_ok() && offbeat_cuts.empty() && flags.empty();
}

agent::Payload LocalDiagnosis::to_json() const {
    agent::Payload f = agent::Payload::array();
    for (auto x : flags) f.push_back(std::string(to_string(x)));
    return {{"duration_error", duration_error},
            {"tau_dur", tau_dur},
            {"offbeat_cuts", offbeat_cuts},
            {"flags", f},
            {"pass", pass()}};
}

TimelineUnit make_unit(const ClipCandidate &c, double start, double length) {
    TimelineUnit u;
    u.source_id = c.source_id;
    u.source_in = c.in;
    u.source_out = c.in + length;
    u.timeline_start = start;
    u.tags = {c.keywords.begin(), c.keywords.end()};
    u.characters = {c.characters.begin(), c.characters.end()};
    u.emotion = c.emotion;
    u.caption = c.caption;
    u.relevance = c.relevance;
    return u;
}

// --- scripted decisions ---------------------------------------------------

namespace {

/// key=value fields of a template instruction ("segment 2: theme=...; ...").
std::map<std::string, std::string> instruction_fields(const std::string &instruction) {
    std::map<std::string, std::string> out;
    auto body = instruction;
    if (auto colon = body.find(':'); colon != std::string::npos) body = body.substr(colon + 1);
    std::stringstream ss(body);
    std::string part;
    while (std::getline(ss, part, ';')) {
        const auto eq = part.find('=');
        if (eq == std::string::npos) continue;
        auto key = text::join(text::tokenize(part.substr(0, eq)), "_");
        auto val = part.substr(eq + 1);
        const auto b = val.find_first_not_of(" \t");
        const auto e = val.find_last_not_of(" \t");
        val = b == std::string::npos ? "" : val.substr(b, e - b + 1);
        if (!key.empty() && !val.empty()) out[key] = out.contains(key) ? out[key] + " " + val : val;
    }
    return out;
}

std::vector<std::string> action_words(const std::string &focus) {
    std::vector<std::string> out;
    for (auto &w : text::content_words(focus)) {
        if (w == "after" || w == "segment") continue;
        if (std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); })) continue;
        out.push_back(std::move(w));
    }
    return out;
}

agent::Payload scripted_retrieval(const agent::Payload &ctx, std::uint64_t) {
    const auto instruction = ctx.at("instruction").get<std::string>();
    const bool relaxed = ctx.value("relaxed", false);
    const auto fields = instruction_fields(instruction);

    std::vector<std::string> theme;
    std::string emotion;
    if (auto it = fields.find("emotion"); it != fields.end()) emotion = it->second;
    if (ctx.contains("target_emotion")) emotion = ctx.at("target_emotion").get<std::string>();
    if (auto it = fields.find("theme"); it != fields.end()) {
        theme = text::content_words(it->second);
    } else {
        // Free-form instruction: everything except taxonomy words is theme.
        for (auto &w : text::content_words(instruction)) {
            if (try_parse_emotion(w)) {
                if (emotion.empty()) emotion = w;
            } else {
                theme.push_back(std::move(w));
            }
        }
    }
    std::vector<std::string> action;
    if (auto it = fields.find("focus"); it != fields.end()) action = action_words(it->second);

    agent::Payload qs = agent::Payload::array();
    if (!theme.empty()) qs.push_back({{"text", text::join(theme, " ")}, {"weight", 1.0}, {"kind", "theme"}});
    if (!relaxed && !emotion.empty())
        qs.push_back({{"text", emotion}, {"weight", 0.6}, {"kind", "emotion"}});
    if (!action.empty())
        qs.push_back({{"text", text::join(action, " ")}, {"weight", 0.8}, {"kind", "action"}});
    if (qs.empty()) {
        auto words = text::content_words(instruction);
        if (!words.empty()) qs.push_back({{"text", text::join(words, " ")}, {"weight", 1.0}, {"kind", "free"}});
    }
    return {{"queries", qs}};
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

agent::Payload scripted_roughcut(const agent::Payload &ctx, std::uint64_t seed) {
    const auto &cands = ctx.at("candidates");
    std::vector<std::tuple<double, std::uint64_t, int>> keys;
    for (const auto &c : cands) {
        const int i = c.at("index").get<int>();
        // equal relevance: the seed decides, seed 0 keeps rank order
        const std::uint64_t tie = seed == 0 ? static_cast<std::uint64_t>(i) : mix64(seed ^ mix64(i));
        keys.emplace_back(-c.at("relevance").get<double>(), tie, i);
    }
    std::sort(keys.begin(), keys.end());
    agent::Payload order = agent::Payload::array();
    for (const auto &k : keys) order.push_back(std::get<2>(k));
    return {{"order", order}};
}

agent::Payload scripted_refine(const agent::Payload &ctx, std::uint64_t) {
    const auto &d = ctx.at("diagnosis");
    agent::Payload steps = agent::Payload::array();
    if (!d.at("offbeat_cuts").empty()) steps.push_back("snap");
    if (std::abs(d.at("duration_error").get<double>()) > d.at("tau_dur").get<double>() + kTimeEps)
        steps.push_back("duration");
    for (const auto &f : d.at("flags")) {
        if (f == "emotion_mismatch") steps.push_back("emotion");
        if (f == "character_break") steps.push_back("character");
    }
    return {{"steps", steps}};
}

} // namespace

void register_scripted(agent::ScriptedBackend &backend) {
    backend.on(agent::Role::retrieval, scripted_retrieval);
    backend.on(agent::Role::roughcut, scripted_roughcut);
    backend.on(agent::Role::refine, scripted_refine);
}

// --- queries and retrieval ------------------------------------------------

std::vector<RetrievalQuery> generate_queries(int segment_index, const std::string &instruction,
                                             agent::Backend &backend, agent::TokenLedger &ledger,
                                             const EditorParams &params, bool relaxed,
                                             std::optional<Emotion> target_emotion) {
    if (instruction.empty()) throw PreconditionError("generate_queries needs an instruction");
    agent::Payload ctx = {{"segment_index", segment_index},
                          {"instruction", instruction},
                          {"n_r_max", params.n_r_max},
                          {"relaxed", relaxed}};
    if (target_emotion) ctx["target_emotion"] = std::string(to_string(*target_emotion));
    const auto res = agent::invoke({agent::Role::retrieval, ctx, "queries"}, backend, ledger);

    std::vector<RetrievalQuery> out;
    for (const auto &q : res.payload.at("queries")) {
        RetrievalQuery rq{segment_index, "", 1.0, "free"};
        if (q.is_string()) {
            rq.text = q.get<std::string>();
        } else if (q.is_object() && q.contains("text") && q.at("text").is_string()) {
            rq.text = q.at("text").get<std::string>();
            if (q.contains("weight")) {
                if (!q.at("weight").is_number()) throw AgentProtocolError("query weight is not a number");
                rq.weight = q.at("weight").get<double>();
            }
            rq.kind = q.value("kind", std::string("free"));
        } else {
            throw AgentProtocolError("malformed query: " + q.dump());
        }
        if (text::content_words(rq.text).empty()) continue;
        if (!(rq.weight > 0.0 && rq.weight <= 1.0))
            throw AgentProtocolError("query weight outside (0, 1]: " + q.dump());
        out.push_back(std::move(rq));
        if (static_cast<int>(out.size()) >= params.n_r_max) break;
    }
    if (out.empty()) throw AgentProtocolError("retrieval agent produced no usable query");
    return out;
}

std::vector<ClipCandidate> retrieve_clips(std::span<const RetrievalQuery> queries,
                                          std::span<const VideoMeta> videos,
                                          const std::set<std::string> &scope) {
    if (scope.empty()) throw RetrievalError("retrieval scope is empty");
    std::set<std::string> known;
    for (const auto &v : videos) known.insert(v.video_id);
    for (const auto &id : scope) {
        if (!known.contains(id)) throw RetrievalError("scope names unknown video '" + id + "'");
    }

    std::vector<kernels::TokenSet> qsets;
    std::vector<double> weights;
    for (const auto &q : queries) {
        const auto words = text::content_words(q.text);
        qsets.emplace_back(words.begin(), words.end());
        weights.push_back(q.weight);
    }
    std::vector<kernels::TokenSet> docs;
    std::vector<std::pair<const VideoMeta *, const Scene *>> where;
    for (const auto &v : videos) {
        if (!scope.contains(v.video_id)) continue;
        for (const auto &s : v.scenes) {
            kernels::TokenSet d;
            for (auto &w : text::content_words(s.caption)) d.insert(std::move(w));
            for (const auto &k : s.keywords) {
                for (auto &w : text::content_words(k)) d.insert(std::move(w));
            }
            docs.push_back(std::move(d));
            where.emplace_back(&v, &s);
        }
    }
    const auto rel = kernels::relevance_parallel(qsets, weights, docs);

    std::vector<ClipCandidate> out;
    for (std::size_t k = 0; k < docs.size(); ++k) {
        if (rel[k] <= 0.0) continue;
        const auto &[v, s] = where[k];
        out.push_back({v->video_id, s->start, s->end, s->caption, s->keywords, s->characters,
                       s->emotion, std::min(1.0, rel[k])});
    }
    std::stable_sort(out.begin(), out.end(), [](const auto &a, const auto &b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        if (a.source_id != b.source_id) return a.source_id < b.source_id;
        return a.in < b.in;
    });
    return out;
}

std::vector<ClipCandidate> rank_and_filter(std::vector<ClipCandidate> candidates,
                                           const EditorParams &params) {
    std::erase_if(candidates, [&](const auto &c) { return c.duration() < params.min_clip - kTimeEps; });
    std::stable_sort(candidates.begin(), candidates.end(), [](const auto &a, const auto &b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        if (a.source_id != b.source_id) return a.source_id < b.source_id;
        return a.in < b.in;
    });
    std::vector<ClipCandidate> out;
    for (auto &c : candidates) {
        const bool dup = std::any_of(out.begin(), out.end(),
                                     [&](const auto &k) { return is_duplicate(k.span(), c.span()); });
        if (dup) continue;
        out.push_back(std::move(c));
        if (static_cast<int>(out.size()) >= params.n_c_max) break;
    }
    return out;
}

// --- placement ------------------------------------------------------------

namespace {

/// Latest admissible end for a clip placed at t with `avail` seconds of
/// material, or nothing when no beat (or the segment end) is reachable.
std::optional<double> pick_end(double t, double avail, const MusicSegment &seg,
                               const EditorParams &p) {
    const double e = seg.end;
    const double reach = std::min(t + avail, e);
    if (reach < t + p.min_clip - kTimeEps) return std::nullopt;
    std::vector<double> targets;
    if (t + avail >= e - kTimeEps) targets.push_back(e);
    const auto &beats = seg.attributes.beats;
    if (beats.empty()) {
        if (targets.empty()) targets.push_back(reach);
    } else {
        for (double b : beats) {
            if (b >= t + p.min_clip - kTimeEps && b <= reach + kTimeEps && b < e - kTimeEps)
                targets.push_back(b);
        }
    }
    if (targets.empty()) return std::nullopt;
    std::sort(targets.begin(), targets.end(), std::greater<>());
    for (double x : targets) {
        const double gap = e - x;
        if (gap <= kTimeEps || gap >= p.min_clip - kTimeEps) return x;
    }
    return targets.front();
}

bool in_use(const SubTimeline &sub, const ClipCandidate &c) {
    return std::any_of(sub.units.begin(), sub.units.end(), [&](const auto &u) {
        return span_overlap(u.span(), c.span()) > kTimeEps;
    });
}

/// Candidate the unit was cut from, if it is still in the list.
const ClipCandidate *source_of(const TimelineUnit &u, const std::vector<ClipCandidate> &cands) {
    for (const auto &c : cands) {
        if (c.source_id == u.source_id && u.source_in >= c.in - kTimeEps &&
            u.source_out <= c.out + kTimeEps)
            return &c;
    }
    return nullptr;
}

double fill_end(const SubTimeline &sub, const MusicSegment &seg) {
    return sub.units.empty() ? seg.start : sub.units.back().timeline_end();
}

/// Appends unused candidates greedily from the current end of `sub`.
void fill(SubTimeline &sub, const std::vector<ClipCandidate> &ordered, const MusicSegment &seg,
          const EditorParams &p) {
    double t = fill_end(sub, seg);
    for (const auto &c : ordered) {
        if (seg.end - t < p.min_clip - kTimeEps) break;
        if (in_use(sub, c)) continue;
        const auto end = pick_end(t, c.duration(), seg, p);
        if (!end) continue;
        sub.units.push_back(make_unit(c, t, *end - t));
        t = *end;
    }
}

} // namespace

SubTimeline rough_cut(const std::vector<ClipCandidate> &candidates, const MusicSegment &segment,
                      const std::string &instruction, agent::Backend &backend,
                      agent::TokenLedger &ledger, const EditorParams &params,
                      std::vector<ClipCandidate> *order_out) {
    if (candidates.empty())
        throw EmptySegmentError("no candidates for segment " + std::to_string(segment.index));
    agent::Payload cs = agent::Payload::array();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto &c = candidates[i];
        cs.push_back({{"index", static_cast<int>(i)},
                      {"source", c.source_id},
                      {"in", c.in},
                      {"out", c.out},
                      {"relevance", c.relevance},
                      {"caption", c.caption}});
    }
    agent::Payload ctx = {{"instruction", instruction},
                          {"segment", {{"index", segment.index},
                                       {"start", segment.start},
                                       {"end", segment.end},
                                       {"beats", segment.attributes.beats.size()}}},
                          {"candidates", cs}};
    const auto res = agent::invoke({agent::Role::roughcut, ctx, "clip_order"}, backend, ledger);

    std::vector<ClipCandidate> ordered;
    std::vector<bool> taken(candidates.size(), false);
    for (const auto &x : res.payload.at("order")) {
        if (!x.is_number_integer()) throw AgentProtocolError("clip order holds a non-integer");
        const auto i = x.get<long long>();
        if (i < 0 || i >= static_cast<long long>(candidates.size()) || taken[i])
            throw AgentProtocolError("clip order index out of range or repeated: " + x.dump());
        taken[i] = true;
        ordered.push_back(candidates[i]);
    }
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!taken[i]) ordered.push_back(candidates[i]);
    }

    SubTimeline sub;
    sub.segment_index = segment.index;
    fill(sub, ordered, segment, params);
    if (sub.units.empty())
        throw EmptySegmentError("no candidate fits the beat grid of segment " +
                                std::to_string(segment.index));
    sub.memo = recompute_memo(sub);
    if (order_out) *order_out = std::move(ordered);
    return sub;
}

// --- diagnosis ------------------------------------------------------------

double duration_tolerance(const MusicSegment &segment, const EditorParams &params) {
    const double ibi = ingest::median_beat_interval(segment.attributes.beats);
    return ibi > 0.0 ? ibi : params.tau_dur_fallback;
}

LocalDiagnosis diagnose_local(const SubTimeline &sub, const MusicSegment &segment, TaskFamily family,
                              const EditorParams &params) {
    LocalDiagnosis d;
    d.tau_dur = duration_tolerance(segment, params);
    d.duration_error = filled_duration(sub) - segment.length();
    const auto &beats = segment.attributes.beats;
    if (beats.size() >= 2) {
        for (double c : internal_cuts(sub)) {
            if (distance_to_nearest_beat(c, beats) > params.epsilon_beat + kTimeEps)
                d.offbeat_cuts.push_back(c);
        }
    }
    if (sub.units.empty()) return d;

    std::size_t against = 0;
    for (const auto &u : sub.units) {
        if (u.emotion && antagonistic(*u.emotion, segment.attributes.emotion)) ++against;
    }
    if (2 * against > sub.units.size()) d.flags.insert(ConsistencyFlag::emotion_mismatch);

    if (family == TaskFamily::story_driven) {
        for (std::size_t k = 1; k < sub.units.size(); ++k) {
            const auto &a = sub.units[k - 1].characters;
            const auto &b = sub.units[k].characters;
            if (a.empty() || b.empty()) continue;
            if (std::none_of(a.begin(), a.end(), [&](const auto &x) { return b.contains(x); })) {
                d.flags.insert(ConsistencyFlag::character_break);
                break;
            }
        }
    }

    double rel = 0.0;
    for (const auto &u : sub.units) rel += u.relevance;
    if (rel / static_cast<double>(sub.units.size()) < params.drift_threshold)
        d.flags.insert(ConsistencyFlag::semantic_drift);
    return d;
}

double local_score(const SubTimeline &sub, const LocalDiagnosis &d, const MusicSegment &segment,
                   const EditorParams &params) {
    double s = 0.0;
    if (!sub.units.empty()) {
        double rel = 0.0;
        for (const auto &u : sub.units) rel += u.relevance;
        s = rel / static_cast<double>(sub.units.size());
        const auto cuts = internal_cuts(sub).size();
        const double off = cuts && segment.attributes.beats.size() >= 2
                               ? static_cast<double>(d.offbeat_cuts.size()) / static_cast<double>(cuts)
                               : 0.0;
        s += params.beat_bonus * (1.0 - off);
    }
    const auto failed = d.flags.size() + (d.duration_ok() ? 0 : 1);
    return s - params.flag_penalty * static_cast<double>(failed);
}

// --- refine ---------------------------------------------------------------

namespace {

void shift_after(SubTimeline &sub, std::size_t k, double delta) {
    for (std::size_t j = k + 1; j < sub.units.size(); ++j) sub.units[j].timeline_start += delta;
}

/// Keeps the last unit inside the segment; drops it if that leaves too little.
void clamp_tail(SubTimeline &sub, const MusicSegment &seg, const EditorParams &p) {
    while (!sub.units.empty()) {
        auto &u = sub.units.back();
        const double over = u.timeline_end() - seg.end;
        if (over <= kTimeEps) return;
        if (u.duration() - over >= p.min_clip - kTimeEps) {
            u.source_out -= over;
            return;
        }
        sub.units.pop_back();
    }
}

void snap_cuts(SubTimeline &sub, const std::vector<ClipCandidate> &cands, const MusicSegment &seg,
               const EditorParams &p) {
    const auto &beats = seg.attributes.beats;
    if (beats.size() < 2) return;
    for (std::size_t k = 0; k + 1 < sub.units.size(); ++k) {
        auto &u = sub.units[k];
        const double cut = u.timeline_end();
        if (distance_to_nearest_beat(cut, beats) <= p.epsilon_beat + kTimeEps) continue;
        std::vector<double> by_distance(beats.begin(), beats.end());
        std::stable_sort(by_distance.begin(), by_distance.end(), [&](double a, double b) {
            return std::abs(a - cut) < std::abs(b - cut);
        });
        const auto *src = source_of(u, cands);
        for (double b : by_distance) {
            const double delta = b - cut;
            if (b >= seg.end - kTimeEps || b <= u.timeline_start) continue;
            if (u.duration() + delta < p.min_clip - kTimeEps) continue;
            if (delta > 0.0 && (!src || u.source_out + delta > src->out + kTimeEps)) continue;
            u.source_out += delta;
            shift_after(sub, k, delta);
            break;
        }
    }
    clamp_tail(sub, seg, p);
}

void fix_duration(SubTimeline &sub, const std::vector<ClipCandidate> &cands, const MusicSegment &seg,
                  double tau, const EditorParams &p) {
    double err = filled_duration(sub) - seg.length();
    if (err > tau + kTimeEps && !sub.units.empty()) {
        auto &u = sub.units.back();
        if (u.duration() - err >= p.min_clip - kTimeEps) {
            u.source_out -= err;
        } else {
            sub.units.pop_back();
        }
        err = filled_duration(sub) - seg.length();
    }
    if (err >= -tau - kTimeEps) return;
    if (!sub.units.empty()) {
        auto &u = sub.units.back();
        if (const auto *src = source_of(u, cands)) {
            const auto end = pick_end(u.timeline_start, src->out - u.source_in, seg, p);
            if (end && *end > u.timeline_end() + kTimeEps) u.source_out = u.source_in + (*end - u.timeline_start);
        }
    }
    fill(sub, cands, seg, p);
}

bool duplicates_any(const SubTimeline &sub, const ClipCandidate &c) {
    return std::any_of(sub.units.begin(), sub.units.end(),
                       [&](const auto &u) { return is_duplicate(u.span(), c.span()); });
}

void swap_emotions(SubTimeline &sub, const std::vector<ClipCandidate> &cands, const MusicSegment &seg) {
    const auto target = seg.attributes.emotion;
    for (auto &u : sub.units) {
        if (!u.emotion || !antagonistic(*u.emotion, target)) continue;
        for (const auto &c : cands) {
            if (c.emotion && antagonistic(*c.emotion, target)) continue;
            if (c.duration() < u.duration() - kTimeEps) continue;
            if (in_use(sub, c) || duplicates_any(sub, c)) continue;
            u = make_unit(c, u.timeline_start, u.duration());
            break;
        }
    }
}

void mend_characters(SubTimeline &sub, const std::vector<ClipCandidate> &cands,
                     const MusicSegment &seg) {
    for (std::size_t k = 1; k < sub.units.size(); ++k) {
        const auto &prev = sub.units[k - 1].characters;
        auto &u = sub.units[k];
        if (prev.empty() || u.characters.empty()) continue;
        if (std::any_of(prev.begin(), prev.end(), [&](const auto &x) { return u.characters.contains(x); }))
            continue;
        for (const auto &c : cands) {
            if (std::none_of(c.characters.begin(), c.characters.end(),
                             [&](const auto &x) { return prev.contains(x); }))
                continue;
            if (c.emotion && antagonistic(*c.emotion, seg.attributes.emotion)) continue;
            if (c.duration() < u.duration() - kTimeEps) continue;
            if (in_use(sub, c) || duplicates_any(sub, c)) continue;
            u = make_unit(c, u.timeline_start, u.duration());
            break;
        }
    }
}

} // namespace

SubTimeline refine(const SubTimeline &sub, const LocalDiagnosis &diagnosis,
                   const std::vector<ClipCandidate> &candidates, const MusicSegment &segment,
                   agent::Backend &backend, agent::TokenLedger &ledger, const EditorParams &params) {
    if (diagnosis.pass()) return sub;
    agent::Payload ctx = {{"segment_index", segment.index},
                          {"diagnosis", diagnosis.to_json()},
                          {"units", sub.units.size()},
                          {"unused_candidates",
                           std::count_if(candidates.begin(), candidates.end(),
                                         [&](const auto &c) { return !in_use(sub, c); })}};
    const auto res = agent::invoke({agent::Role::refine, ctx, "refine_plan"}, backend, ledger);
    std::set<std::string> steps;
    for (const auto &s : res.payload.at("steps")) {
        const auto name = s.get<std::string>();
        if (name != "snap" && name != "duration" && name != "emotion" && name != "character")
            throw AgentProtocolError("unknown refine step '" + name + "'");
        steps.insert(name);
    }

    SubTimeline out = sub;
    if (steps.contains("snap")) snap_cuts(out, candidates, segment, params);
    if (steps.contains("duration")) fix_duration(out, candidates, segment, diagnosis.tau_dur, params);
    if (steps.contains("emotion")) swap_emotions(out, candidates, segment);
    if (steps.contains("character")) mend_characters(out, candidates, segment);

    if (out.units == sub.units)
        throw NeedMoreClips("segment " + std::to_string(segment.index) +
                            ": no admissible repair with the current candidates");
    out.memo.revision_count = sub.memo.revision_count + 1;
    out.memo = recompute_memo(out);
    return out;
}

// --- inner loop -----------------------------------------------------------

EditOutcome inner_loop_edit(const ContextBundle &bundle, std::span<const VideoMeta> pool,
                            agent::Backend &backend, agent::TokenLedger &ledger,
                            const EditorParams &params) {
    EditOutcome out;
    const auto &seg = bundle.segment;
    auto ev = [&](const std::string &event, agent::Payload f) {
        f["stage"] = "edit";
        f["event"] = event;
        f["task_id"] = bundle.segment_index;
        out.events.push_back(std::move(f));
    };

    std::vector<ClipSpan> avoid = bundle.avoid_spans;
    for (const auto &d : bundle.prior_summaries)
        avoid.insert(avoid.end(), d.used_spans.begin(), d.used_spans.end());

    std::set<std::string> everything;
    for (const auto &v : pool) everything.insert(v.video_id);

    auto retrieve = [&](bool relaxed) {
        const auto queries = generate_queries(bundle.segment_index, bundle.instruction, backend,
                                              ledger, params, relaxed, bundle.target_emotion);
        const auto &scope = relaxed || bundle.retrieval_scope.empty() ? everything : bundle.retrieval_scope;
        auto found = retrieve_clips(queries, pool, scope);
        agent::Payload texts = agent::Payload::array();
        for (const auto &q : queries) texts.push_back(q.text);
        ev("retrieve", {{"relaxed", relaxed}, {"queries", texts}, {"found", found.size()}});
        return found;
    };
    auto arrange = [&](std::vector<ClipCandidate> raw) {
        auto big = params;
        big.n_c_max = std::numeric_limits<int>::max();
        auto ranked = rank_and_filter(std::move(raw), big);
        auto key = [&](const ClipCandidate &c) {
            const bool avoided = std::any_of(avoid.begin(), avoid.end(), [&](const auto &s) {
                return is_duplicate(s, c.span());
            });
            const bool off_target = bundle.target_emotion && c.emotion &&
                                    antagonistic(*c.emotion, *bundle.target_emotion);
            const bool no_cast =
                !bundle.target_characters.empty() &&
                std::none_of(c.characters.begin(), c.characters.end(),
                             [&](const auto &x) { return bundle.target_characters.contains(x); });
            return std::make_tuple(avoided, off_target, no_cast);
        };
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](const auto &a, const auto &b) { return key(a) < key(b); });
        if (static_cast<int>(ranked.size()) > params.n_c_max) ranked.resize(params.n_c_max);
        return ranked;
    };
    auto widen = [&](std::vector<ClipCandidate> have) {
        out.relaxed = true;
        auto more = retrieve(true);
        have.insert(have.end(), more.begin(), more.end());
        return arrange(std::move(have));
    };

    auto cands = arrange(retrieve(false));
    if (cands.empty()) cands = widen({});
    if (cands.empty())
        throw EmptySegmentError("no relevant clips for segment " + std::to_string(bundle.segment_index));

    std::vector<ClipCandidate> order;
    SubTimeline rough;
    try {
        rough = rough_cut(cands, seg, bundle.instruction, backend, ledger, params, &order);
    } catch (const EmptySegmentError &) {
        if (out.relaxed) throw;
        cands = widen(cands);
        rough = rough_cut(cands, seg, bundle.instruction, backend, ledger, params, &order);
    }
    rough.segment_index = bundle.segment_index;

    std::vector<SubTimeline> iterates{rough};
    std::vector<LocalDiagnosis> diags{diagnose_local(rough, seg, bundle.family, params)};
    ev("rough_cut", {{"units", rough.units.size()}, {"diagnosis", diags.back().to_json()}});

    while (!diags.back().pass() && out.refine_rounds < params.max_iter) {
        try {
            auto next = refine(iterates.back(), diags.back(), order, seg, backend, ledger, params);
            ++out.refine_rounds;
            diags.push_back(diagnose_local(next, seg, bundle.family, params));
            iterates.push_back(std::move(next));
            ev("refine", {{"round", out.refine_rounds}, {"diagnosis", diags.back().to_json()}});
        } catch (const NeedMoreClips &e) {
            if (out.relaxed) {
                ev("exhausted", {{"reason", e.what()}});
                break;
            }
            order = widen(order);
        }
    }

    std::size_t best = 0;
    double best_score = local_score(iterates[0], diags[0], seg, params);
    for (std::size_t k = 1; k < iterates.size(); ++k) {
        const double s = local_score(iterates[k], diags[k], seg, params);
        if (s >= best_score) {
            best = k;
            best_score = s;
        }
    }
    out.sub = std::move(iterates[best]);
    out.diagnosis = diags[best];
    out.passed = out.diagnosis.pass();
    ev("result", {{"iterate", best},
                  {"local_score", best_score},
                  {"passed", out.passed},
                  {"units", out.sub.units.size()}});
    return out;
}

} // namespace beatcut::editor
