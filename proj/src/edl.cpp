// SPDX-License-Identifier: Apache-2.0
#include "beatcut/edl.hpp"

#include <fstream>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut {

using json = nlohmann::json;

namespace {

json opt_emotion(const std::optional<Emotion> &e) {
    return e ? json(std::string(to_string(*e))) : json(nullptr);
}

std::optional<Emotion> read_emotion(const json &j) {
    if (j.is_null()) return std::nullopt;
    return parse_emotion(j.get<std::string>());
}

json memo_json(const TimelineMemo &m) {
    json spans = json::array();
    for (const auto &s : m.used_clip_spans) spans.push_back({{"source_id", s.source_id}, {"in", s.in}, {"out", s.out}});
    return {{"used_clip_spans", spans},
            {"dominant_emotion", opt_emotion(m.dominant_emotion)},
            {"main_characters", m.main_characters},
            {"last_shot_summary", m.last_shot_summary},
            {"revision_count", m.revision_count}};
}

TimelineMemo read_memo(const json &j) {
    TimelineMemo m;
    for (const auto &s : j.at("used_clip_spans"))
        m.used_clip_spans.push_back({s.at("source_id").get<std::string>(), s.at("in").get<double>(),
                                     s.at("out").get<double>()});
    m.dominant_emotion = read_emotion(j.at("dominant_emotion"));
    m.main_characters = j.at("main_characters").get<std::set<std::string>>();
    m.last_shot_summary = j.at("last_shot_summary").get<std::string>();
    m.revision_count = j.at("revision_count").get<int>();
    return m;
}

} // namespace

json EdlDocument::to_json() const {
    json segs = json::array();
    json cuts = json::array();
    for (const auto &sub : timeline.segments) {
        segs.push_back({{"index", sub.segment_index}, {"memo", memo_json(sub.memo)}});
        for (const auto &u : sub.units) {
            cuts.push_back({{"segment", sub.segment_index},
                            {"source_id", u.source_id},
                            {"source_in", u.source_in},
                            {"source_out", u.source_out},
                            {"timeline_start", u.timeline_start},
                            {"tags", u.tags},
                            {"characters", u.characters},
                            {"emotion", opt_emotion(u.emotion)},
                            {"caption", u.caption},
                            {"relevance", u.relevance}});
        }
    }
    json j = {{"format", "beatcut-edl"},
              {"version", version},
              {"music_id", timeline.music_ref},
              {"segments", segs},
              {"cuts", cuts}};
    if (provenance) {
        j["provenance"] = {{"config_hash", provenance->config_hash},
                           {"seed", provenance->seed},
                           {"tokens_in", provenance->tokens_in},
                           {"tokens_out", provenance->tokens_out},
                           {"tokens_total", provenance->tokens_in + provenance->tokens_out}};
    }
    return j;
}

std::string serialize_edl(const EdlDocument &doc) { return doc.to_json().dump(2) + "\n"; }

EdlDocument parse_edl(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error &e) {
        throw IngestError(std::string("EDL: ") + e.what());
    }
    EdlDocument doc;
    try {
        if (j.value("format", "") != "beatcut-edl") throw ValidationError("EDL: not a beatcut EDL");
        doc.version = j.at("version").get<int>();
        if (doc.version != kEdlVersion)
            throw ValidationError("EDL: unsupported version " + std::to_string(doc.version));
        std::vector<SubTimeline> subs;
        std::map<int, std::size_t> where;
        for (const auto &s : j.at("segments")) {
            SubTimeline sub;
            sub.segment_index = s.at("index").get<int>();
            sub.memo = read_memo(s.at("memo"));
            if (!where.emplace(sub.segment_index, subs.size()).second)
                throw ValidationError("EDL: segment " + std::to_string(sub.segment_index) + " listed twice");
            subs.push_back(std::move(sub));
        }
        double last = -1.0;
        int last_seg = -1;
        for (const auto &c : j.at("cuts")) {
            TimelineUnit u;
            const int seg = c.at("segment").get<int>();
            u.source_id = c.at("source_id").get<std::string>();
            u.source_in = c.at("source_in").get<double>();
            u.source_out = c.at("source_out").get<double>();
            u.timeline_start = c.at("timeline_start").get<double>();
            u.tags = c.at("tags").get<std::set<std::string>>();
            u.characters = c.at("characters").get<std::set<std::string>>();
            u.emotion = read_emotion(c.at("emotion"));
            u.caption = c.at("caption").get<std::string>();
            u.relevance = c.at("relevance").get<double>();
            if (u.timeline_start < last || seg < last_seg)
                throw ValidationError("EDL: cut records are not sorted by timeline_start");
            last = u.timeline_start;
            last_seg = seg;
            const auto it = where.find(seg);
            if (it == where.end()) throw ValidationError("EDL: cut names unknown segment " + std::to_string(seg));
            subs[it->second].units.push_back(std::move(u));
        }
        doc.timeline = compose_timelines(std::move(subs), j.at("music_id").get<std::string>());
        if (j.contains("provenance")) {
            const auto &p = j.at("provenance");
            doc.provenance = EdlProvenance{p.at("config_hash").get<std::string>(), p.at("seed").get<std::uint64_t>(),
                                           p.at("tokens_in").get<std::int64_t>(),
                                           p.at("tokens_out").get<std::int64_t>()};
        }
    } catch (const json::exception &e) {
        throw IngestError(std::string("EDL: ") + e.what());
    } catch (const CompositionError &e) {
        throw ValidationError(std::string("EDL: ") + e.what());
    }
    return doc;
}

EdlDocument load_edl(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open EDL " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_edl(ss.str());
}

void write_text_file(const std::filesystem::path &path, std::string_view text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IngestError("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IngestError("short write to " + path.string());
}

} // namespace beatcut
