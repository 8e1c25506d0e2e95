// SPDX-License-Identifier: Apache-2.0
#include "beatcut/evalbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/ingest.hpp"
#include "beatcut/planner.hpp"
#include "beatcut/text.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut::eval {

using json = nlohmann::json;

// --- taxonomy -------------------------------------------------------------

std::string BenchConfig::key() const {
    std::string k = family == Family::O ? "O" : "S";
    k += music == MusicLength::Sh ? "-Sh" : music == MusicLength::Me ? "-Me" : "-Lo";
    k += prompt == Prompt::GP ? "-GP" : "-DP";
    return k;
}

BenchConfig parse_config(std::string_view key) {
    const std::string k(key);
    auto bad = [&] { return ValidationError("malformed configuration '" + k + "'"); };
    if (k.size() != 7 || k[1] != '-' || k[4] != '-') throw bad();
    BenchConfig c;
    if (k[0] == 'O') c.family = Family::O;
    else if (k[0] == 'S') c.family = Family::S;
    else throw bad();
    const auto len = k.substr(2, 2);
    if (len == "Sh") c.music = MusicLength::Sh;
    else if (len == "Me") c.music = MusicLength::Me;
    else if (len == "Lo") c.music = MusicLength::Lo;
    else throw bad();
    const auto p = k.substr(5, 2);
    if (p == "GP") c.prompt = Prompt::GP;
    else if (p == "DP") c.prompt = Prompt::DP;
    else throw bad();
    return c;
}

namespace {

const char *exclusion_reason(const BenchConfig &c) noexcept {
    if (c.family == Family::O && c.music == MusicLength::Lo && c.prompt == Prompt::GP)
        return "long music with a general prompt leaves the edit underspecified";
    if (c.family == Family::O && c.music == MusicLength::Sh && c.prompt == Prompt::DP)
        return "short music cannot hold a detailed prompt";
    if (c.family == Family::S && c.music == MusicLength::Sh)
        return "story-driven edits need more than short music";
    return nullptr;
}

} // namespace

bool admitted(const BenchConfig &c) noexcept { return exclusion_reason(c) == nullptr; }

const std::vector<BenchConfig> &admitted_configs() {
    static const std::vector<BenchConfig> v = {
        {Family::O, MusicLength::Sh, Prompt::GP}, {Family::O, MusicLength::Me, Prompt::GP},
        {Family::O, MusicLength::Me, Prompt::DP}, {Family::O, MusicLength::Lo, Prompt::DP},
        {Family::S, MusicLength::Me, Prompt::GP}, {Family::S, MusicLength::Lo, Prompt::GP},
        {Family::S, MusicLength::Me, Prompt::DP}, {Family::S, MusicLength::Lo, Prompt::DP},
    };
    return v;
}

std::vector<BenchConfig> all_configs() {
    std::vector<BenchConfig> v;
    for (auto f : {Family::O, Family::S}) {
        for (auto l : {MusicLength::Sh, MusicLength::Me, MusicLength::Lo}) {
            for (auto p : {Prompt::GP, Prompt::DP}) v.push_back({f, l, p});
        }
    }
    return v;
}

void check_admitted(const BenchConfig &c) {
    if (const char *why = exclusion_reason(c))
        throw ValidationError("excluded configuration " + c.key() + ": " + why);
}

MusicLength length_class(double seconds) noexcept {
    if (seconds < 30.0) return MusicLength::Sh;
    if (seconds <= 90.0) return MusicLength::Me;
    return MusicLength::Lo;
}

TaskFamily task_family(Family f) noexcept { return f == Family::O ? TaskFamily::on_beat : TaskFamily::story_driven; }
IntentLevel intent_level(Prompt p) noexcept { return p == Prompt::GP ? IntentLevel::general : IntentLevel::detailed; }

// --- manifest -------------------------------------------------------------

namespace {

template <class T> T need(const json &j, const char *name, const std::string &where) {
    if (!j.is_object() || !j.contains(name)) throw ValidationError(where + ": missing '" + name + "'");
    try {
        return j.at(name).get<T>();
    } catch (const json::exception &) {
        throw ValidationError(where + ": field '" + name + "' has the wrong type");
    }
}

} // namespace

std::vector<BenchSample> parse_benchmark(std::istream &in) {
    std::vector<BenchSample> out;
    std::set<std::string> ids;
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        if (raw.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = "line " + std::to_string(line);
        json j;
        try {
            j = json::parse(raw);
        } catch (const json::parse_error &e) {
            throw IngestError(where + ": " + e.what());
        }
        BenchSample s;
        s.id = need<std::string>(j, "id", where);
        if (!ids.insert(s.id).second) throw ValidationError(where + ": duplicate sample id '" + s.id + "'");
        s.config = parse_config(need<std::string>(j, "config", where));
        check_admitted(s.config);
        s.intent.text = need<std::string>(j, "intent", where);
        s.intent.family = task_family(s.config.family);
        s.intent.level = intent_level(s.config.prompt);
        validate(s.intent);
        const auto music = need<json>(j, "music", where);
        s.music_id = need<std::string>(music, "id", where);
        s.music_duration = need<double>(music, "duration", where);
        if (!(s.music_duration > 0.0)) throw ValidationError(where + ": music duration must be positive");
        if (length_class(s.music_duration) != s.config.music)
            throw ValidationError(where + ": music of " + text::fmt_seconds(s.music_duration, 1) +
                                  " s does not fit length class of " + s.config.key());
        if (music.contains("path")) s.music_path = need<std::string>(music, "path", where);
        for (const auto &v : need<json>(j, "videos", where)) {
            s.video_ids.push_back(need<std::string>(v, "id", where));
            const double d = need<double>(v, "duration", where);
            if (!(d > 0.0)) throw ValidationError(where + ": video duration must be positive");
            s.video_seconds += d;
        }
        if (j.contains("video_manifest")) s.video_manifest = need<std::string>(j, "video_manifest", where);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<BenchSample> load_benchmark(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open benchmark manifest " + path.string());
    return parse_benchmark(in);
}

std::vector<ConfigStats> benchmark_stats(std::span<const BenchSample> samples) {
    std::vector<ConfigStats> out;
    for (const auto &c : admitted_configs()) {
        ConfigStats st{c};
        double music = 0.0;
        double video = 0.0;
        for (const auto &s : samples) {
            if (s.config != c) continue;
            ++st.samples;
            music += s.music_duration;
            video += s.video_seconds;
        }
        if (st.samples == 0) continue;
        st.avg_music_seconds = music / st.samples;
        st.avg_video_hours = video / st.samples / 3600.0;
        out.push_back(st);
    }
    return out;
}

std::string format_stats(std::span<const ConfigStats> stats) {
    std::ostringstream os;
    os << std::left << std::setw(10) << "config" << std::right << std::setw(8) << "samples" << std::setw(12)
       << "avg music" << std::setw(12) << "avg source" << '\n';
    os << std::fixed << std::setprecision(1);
    for (const auto &s : stats) {
        os << std::left << std::setw(10) << s.config.key() << std::right << std::setw(8) << s.samples
           << std::setw(11) << s.avg_music_seconds << 's' << std::setw(11) << s.avg_video_hours << "h\n";
    }
    return os.str();
}

// --- evidence -------------------------------------------------------------

int identity_switches(const std::vector<std::set<std::string>> &track) {
    int switches = 0;
    const std::set<std::string> *prev = nullptr;
    for (const auto &cur : track) {
        if (cur.empty()) continue;
        if (prev && std::none_of(cur.begin(), cur.end(), [&](const auto &c) { return prev->contains(c); }))
            ++switches;
        prev = &cur;
    }
    return switches;
}

namespace {

std::string caption_for(const TimelineUnit &u, std::span<const VideoMeta> videos) {
    if (!u.caption.empty()) return u.caption;
    const double mid = 0.5 * (u.source_in + u.source_out);
    for (const auto &v : videos) {
        if (v.video_id != u.source_id) continue;
        for (const auto &s : v.scenes) {
            if (s.start - kTimeEps <= mid && mid <= s.end + kTimeEps) return s.caption;
        }
    }
    return {};
}

std::vector<MusicSegment> try_segments(const MusicTrack &track) {
    try {
        return ingest::segment_music(track);
    } catch (const Error &) {
        return {}; // evidence without music emotions
    }
}

} // namespace

Evidence extract_evidence(const Timeline &timeline, const MusicTrack &track, std::span<const VideoMeta> videos,
                          double epsilon_beat) {
    Evidence ev;
    ev.epsilon_beat = epsilon_beat;
    try {
        ev.beats = ingest::track_beats(track);
    } catch (const Error &) {
        ev.beats.clear();
    }
    const auto units = flatten(timeline);
    ev.unit_count = units.size();
    for (std::size_t k = 0; k + 1 < units.size(); ++k) {
        const double cut = units[k].timeline_end();
        ev.cuts.push_back(cut);
        ev.alignment.push_back({cut, distance_to_nearest_beat(cut, ev.beats)});
    }
    for (const auto &u : units) {
        ev.character_track.push_back(u.characters);
        ev.duration += u.duration();
    }
    ev.identity_switches = identity_switches(ev.character_track);
    {
        const std::set<std::string> *prev = nullptr;
        for (const auto &cur : ev.character_track) {
            if (cur.empty()) continue;
            if (prev) ++ev.character_transitions;
            prev = &cur;
        }
    }
    const auto music = timeline.segments.empty() ? std::vector<MusicSegment>{} : try_segments(track);
    for (const auto &sub : timeline.segments) {
        SegmentEvidence se;
        se.segment_index = sub.segment_index;
        se.units = static_cast<int>(sub.units.size());
        std::vector<std::string> caps;
        for (const auto &u : sub.units) {
            auto c = caption_for(u, videos);
            if (!c.empty()) caps.push_back(std::move(c));
        }
        se.summary = text::join(caps, "; ");
        se.emotion = dominant_emotion(sub);
        if (music.size() == timeline.segments.size() && sub.segment_index >= 0 &&
            static_cast<std::size_t>(sub.segment_index) < music.size())
            se.music_emotion = music[sub.segment_index].attributes.emotion;
        ev.segments.push_back(std::move(se));
    }
    return ev;
}

json Evidence::to_json() const {
    json align = json::array();
    for (const auto &a : alignment) {
        align.push_back({{"cut", a.time},
                         {"distance", std::isfinite(a.distance) ? json(a.distance) : json(nullptr)}});
    }
    json segs = json::array();
    for (const auto &s : segments) {
        segs.push_back({{"segment", s.segment_index},
                        {"units", s.units},
                        {"summary", s.summary},
                        {"emotion", s.emotion ? json(std::string(to_string(*s.emotion))) : json(nullptr)},
                        {"music_emotion",
                         s.music_emotion ? json(std::string(to_string(*s.music_emotion))) : json(nullptr)}});
    }
    json chars = json::array();
    for (const auto &c : character_track) chars.push_back(std::vector<std::string>(c.begin(), c.end()));
    return {{"beats", beats},
            {"cuts", cuts},
            {"alignment", align},
            {"segments", segs},
            {"characters", chars},
            {"identity_switches", identity_switches},
            {"character_transitions", character_transitions},
            {"units", unit_count},
            {"duration", duration},
            {"epsilon_beat", epsilon_beat}};
}

// --- judge ----------------------------------------------------------------

const std::vector<std::string> &dimensions(TaskFamily family) {
    static const std::vector<std::string> on_beat = {"rhythm_alignment", "emotion_alignment",
                                                     "instruction_following", "overall_quality"};
    static const std::vector<std::string> story = {"story_completeness", "character_continuity",
                                                   "instruction_following", "overall_quality"};
    return family == TaskFamily::on_beat ? on_beat : story;
}

json JudgeReport::to_json() const {
    return {{"family", std::string(to_string(family))}, {"scores", scores}};
}

namespace {

double scale(double fraction) { return std::clamp(1.0 + 4.0 * fraction, 1.0, 5.0); }

// Share of `words` that occur in `haystack`; 0 for no words.
double coverage(const std::vector<std::string> &words, const std::set<std::string> &haystack) {
    if (words.empty()) return 0.0;
    const auto hit = std::count_if(words.begin(), words.end(), [&](const auto &w) { return haystack.contains(w); });
    return static_cast<double>(hit) / static_cast<double>(words.size());
}

} // namespace

json scripted_judge(const json &ctx) {
    const auto family = parse_task_family(ctx.at("family").get<std::string>());
    const auto intent = ctx.at("intent").get<std::string>();
    const auto &ev = ctx.at("evidence");
    json scores = json::object();
    if (ev.at("units").get<std::size_t>() == 0) {
        for (const auto &d : dimensions(family)) scores[d] = 1.0;
        return {{"scores", scores}};
    }

    std::set<std::string> summary_words;
    std::map<int, std::set<std::string>> per_segment;
    for (const auto &s : ev.at("segments")) {
        for (auto &w : text::content_words(s.at("summary").get<std::string>())) {
            per_segment[s.at("segment").get<int>()].insert(w);
            summary_words.insert(std::move(w));
        }
    }
    const double instruction = scale(coverage(planner::intent_keywords(intent, 8), summary_words));

    if (family == TaskFamily::on_beat) {
        const double eps = ev.at("epsilon_beat").get<double>();
        const auto &align = ev.at("alignment");
        std::size_t on = 0;
        for (const auto &a : align) {
            if (!a.at("distance").is_null() && a.at("distance").get<double>() <= eps + kTimeEps) ++on;
        }
        const double rhythm = scale(align.empty() ? 0.0 : static_cast<double>(on) / align.size());
        std::size_t judged = 0;
        std::size_t match = 0;
        for (const auto &s : ev.at("segments")) {
            if (s.at("units").get<int>() == 0 || s.at("music_emotion").is_null()) continue;
            ++judged;
            if (s.at("emotion") == s.at("music_emotion")) ++match;
        }
        const double emotion = scale(judged == 0 ? 0.0 : static_cast<double>(match) / judged);
        scores["rhythm_alignment"] = rhythm;
        scores["emotion_alignment"] = emotion;
        scores["instruction_following"] = instruction;
        scores["overall_quality"] = (rhythm + emotion + instruction) / 3.0;
    } else {
        const auto directives = planner::parse_directives(intent);
        double story = 0.0;
        if (directives.empty()) {
            story = scale(coverage(planner::intent_keywords(intent, 8), summary_words));
        } else {
            std::size_t covered = 0;
            for (const auto &[k, d] : directives) {
                const auto words = text::content_words(d);
                const auto it = per_segment.find(k);
                if (it != per_segment.end() &&
                    std::any_of(words.begin(), words.end(), [&](const auto &w) { return it->second.contains(w); }))
                    ++covered;
            }
            story = scale(static_cast<double>(covered) / directives.size());
        }
        const int transitions = ev.at("character_transitions").get<int>();
        const double rate = transitions == 0 ? 0.0 : ev.at("identity_switches").get<double>() / transitions;
        const double continuity = scale(1.0 - rate);
        scores["story_completeness"] = story;
        scores["character_continuity"] = continuity;
        scores["instruction_following"] = instruction;
        scores["overall_quality"] = (story + continuity + instruction) / 3.0;
    }
    return {{"scores", scores}};
}

JudgeReport judge(const Evidence &evidence, const EditIntent &intent, TaskFamily family, agent::Backend &backend,
                  agent::TokenLedger &ledger) {
    if (family != intent.family)
        throw JudgeError("judge asked for " + std::string(to_string(family)) + " dimensions on a " +
                         std::string(to_string(intent.family)) + " intent");
    const auto &dims = dimensions(family);
    json ctx = {{"family", std::string(to_string(family))},
                {"intent", intent.text},
                {"dimensions", dims},
                {"evidence", evidence.to_json()}};
    const auto res = agent::invoke({agent::Role::judge, ctx, "judge_scores"}, backend, ledger);
    const auto &scores = res.payload.at("scores");
    JudgeReport r;
    r.family = family;
    for (const auto &[k, v] : scores.items()) {
        if (std::find(dims.begin(), dims.end(), k) == dims.end())
            throw JudgeError("judge scored unknown dimension '" + k + "'");
        if (!v.is_number()) throw JudgeError("judge score for '" + k + "' is not a number");
        r.scores[k] = std::clamp(v.get<double>(), 1.0, 5.0);
    }
    if (r.scores.size() != dims.size()) throw JudgeError("judge left dimensions unscored");
    return r;
}

void register_scripted(agent::ScriptedBackend &backend) {
    backend.on(agent::Role::judge, [](const json &ctx, std::uint64_t) { return scripted_judge(ctx); });
}

// --- aggregation ----------------------------------------------------------

namespace {

AggregateRow mean_row(std::string group, const std::vector<const ScoredSample *> &rows) {
    AggregateRow out;
    out.group = std::move(group);
    out.samples = static_cast<int>(rows.size());
    std::map<std::string, std::pair<double, int>> acc;
    for (const auto *r : rows) {
        for (const auto &[d, v] : r->report.scores) {
            acc[d].first += v;
            acc[d].second += 1;
        }
    }
    for (const auto &[d, a] : acc) out.means[d] = a.first / a.second;
    return out;
}

} // namespace

BenchmarkReport aggregate_report(std::span<const ScoredSample> samples) {
    if (samples.empty()) throw ReportError("nothing to aggregate");
    BenchmarkReport rep;
    auto ordered = all_configs();
    const auto &adm = admitted_configs();
    // table order first; excluded combos cannot occur in loaded data but may in hand-built input
    std::stable_partition(ordered.begin(), ordered.end(), [&](const auto &c) { return admitted(c); });
    std::sort(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(adm.size()),
              [&](const auto &a, const auto &b) {
                  return std::find(adm.begin(), adm.end(), a) < std::find(adm.begin(), adm.end(), b);
              });
    for (const auto &c : ordered) {
        std::vector<const ScoredSample *> rows;
        for (const auto &s : samples) {
            if (s.config == c) rows.push_back(&s);
        }
        if (!rows.empty()) rep.by_config.push_back(mean_row(c.key(), rows));
    }
    for (auto f : {Family::O, Family::S}) {
        std::vector<const ScoredSample *> rows;
        for (const auto &s : samples) {
            if (s.config.family == f) rows.push_back(&s);
        }
        if (!rows.empty()) rep.by_family.push_back(mean_row(f == Family::O ? "O" : "S", rows));
    }
    return rep;
}

json BenchmarkReport::to_json() const {
    auto rows = [](const std::vector<AggregateRow> &v) {
        json a = json::array();
        for (const auto &r : v) a.push_back({{"group", r.group}, {"samples", r.samples}, {"means", r.means}});
        return a;
    };
    return {{"by_config", rows(by_config)}, {"by_family", rows(by_family)}};
}

std::string BenchmarkReport::to_table() const {
    std::set<std::string> dims;
    for (const auto &r : by_config) {
        for (const auto &[d, v] : r.means) dims.insert(d);
    }
    std::ostringstream os;
    os << std::left << std::setw(10) << "group" << std::right << std::setw(8) << "n";
    for (const auto &d : dims) os << std::setw(std::max<int>(8, static_cast<int>(d.size()) + 2)) << d;
    os << '\n' << std::fixed << std::setprecision(2);
    auto emit = [&](const AggregateRow &r) {
        os << std::left << std::setw(10) << r.group << std::right << std::setw(8) << r.samples;
        for (const auto &d : dims) {
            const int w = std::max<int>(8, static_cast<int>(d.size()) + 2);
            const auto it = r.means.find(d);
            if (it == r.means.end()) os << std::setw(w) << "-";
            else os << std::setw(w) << it->second;
        }
        os << '\n';
    };
    for (const auto &r : by_config) emit(r);
    for (const auto &r : by_family) emit(r);
    return os.str();
}

} // namespace beatcut::eval
