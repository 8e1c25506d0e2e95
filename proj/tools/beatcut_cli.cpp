// SPDX-License-Identifier: Apache-2.0
// beatcut: edit / evaluate / render / bench / synth.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "beatcut/edl.hpp"
#include "beatcut/errors.hpp"
#include "beatcut/evalbench.hpp"
#include "beatcut/fixtures.hpp"
#include "beatcut/ingest.hpp"
#include "beatcut/pipeline.hpp"
#include "beatcut/render.hpp"
#include "beatcut/timeline.hpp"

namespace fs = std::filesystem;
using namespace beatcut;

namespace {

struct EditArgs {
    std::string intent;
    std::string family = "on_beat";
    std::string level = "general";
    std::string music;
    std::string manifest;
    std::string out = "out";
    std::string config;
    std::optional<std::string> backend;
    std::optional<std::uint64_t> seed;
    std::optional<int> budget;
    bool no_preventive = false;
    bool no_region_decomp = false;
    bool no_negotiation = false;
};

struct EvalArgs {
    std::string edl;
    std::string music;
    std::string manifest;
    std::string intent;
    std::string family = "on_beat";
    std::string level = "general";
    std::string backend = "scripted";
    std::uint64_t seed = 7;
    std::string out;
};

struct RenderArgs {
    std::string edl;
    RenderOptions options;
    bool dry_run = false;
};

struct SynthArgs {
    std::uint64_t seed = 7;
    int segments = 0; // 0 = seeded
    std::string family;
    std::string out = "fixture";
};

template <class F> auto stage(const char *name, F &&f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError &) {
        throw;
    } catch (const Error &e) {
        throw StageError(name, e);
    }
}

EditIntent make_intent(const std::string &text, const std::string &family, const std::string &level) {
    EditIntent in{text, parse_intent_level(level), parse_task_family(family)};
    validate(in);
    return in;
}

int cmd_edit(const EditArgs &a) {
    auto cfg = a.config.empty() ? RunConfig{} : stage("config", [&] { return RunConfig::load(a.config); });
    if (a.backend) cfg.backend = *a.backend;
    if (a.seed) cfg.seed = *a.seed;
    if (a.budget) cfg.budget = *a.budget;
    if (a.no_preventive) cfg.toggles.preventive = false;
    if (a.no_region_decomp) cfg.toggles.region_decomposition = false;
    if (a.no_negotiation) cfg.toggles.negotiation = false;
    if (!a.music.empty()) cfg.music_path = a.music;
    if (!a.manifest.empty()) cfg.manifest_path = a.manifest;
    stage("config", [&] {
        validate(cfg);
        if (!cfg.music_path) throw ConfigError("no music given (--music or paths.music)");
        if (!cfg.manifest_path) throw ConfigError("no manifest given (--manifest or paths.manifest)");
    });
    const auto intent = stage("config", [&] { return make_intent(a.intent, a.family, a.level); });
    const auto track = stage("ingest", [&] { return ingest::load_music(*cfg.music_path); });
    const auto videos = stage("ingest", [&] { return ingest::load_video_manifest(*cfg.manifest_path); });

    auto backend = stage("config", [&] { return make_backend(cfg); });
    const auto run = run_outer_loop(intent, track, videos, cfg, *backend);

    EdlDocument doc;
    doc.timeline = run.final;
    doc.provenance = EdlProvenance{cfg.hash(), cfg.seed, run.ledger.total_in(), run.ledger.total_out()};
    const fs::path out(a.out);
    stage("output", [&] {
        write_text_file(out / "edl.json", serialize_edl(doc));
        write_text_file(out / "trace.jsonl", run.trace.to_jsonl());
        write_text_file(out / "report.json", run.report(cfg).dump(2) + "\n");
        write_text_file(out / "ledger.json", run.ledger.to_json().dump(2) + "\n");
    });
    std::cout << "variant " << to_string(variant_of(cfg.toggles)) << ", " << run.segments.size() << " segments, "
              << unit_count(run.final) << " cuts, score " << run.score.total << ", negotiation "
              << run.negotiation.terminal << ", tokens " << run.ledger.total() << "\n"
              << "wrote " << (out / "edl.json").string() << "\n";
    return 0;
}

int cmd_evaluate(const EvalArgs &a) {
    const auto intent = stage("config", [&] { return make_intent(a.intent, a.family, a.level); });
    const auto doc = stage("ingest", [&] { return load_edl(a.edl); });
    const auto track = stage("ingest", [&] { return ingest::load_music(a.music); });
    const auto videos = stage("ingest", [&] { return ingest::load_video_manifest(a.manifest); });
    RunConfig cfg;
    cfg.backend = a.backend;
    cfg.seed = a.seed;
    auto backend = stage("config", [&] { return make_backend(cfg); });
    agent::TokenLedger ledger;
    const auto ev = stage("evidence", [&] { return eval::extract_evidence(doc.timeline, track, videos); });
    const auto rep = stage("judge", [&] { return eval::judge(ev, intent, intent.family, *backend, ledger); });
    nlohmann::json j = rep.to_json();
    j["evidence"] = ev.to_json();
    j["tokens"] = ledger.total();
    const auto text = j.dump(2) + "\n";
    if (a.out.empty()) {
        std::cout << text;
    } else {
        stage("output", [&] { write_text_file(a.out, text); });
        for (const auto &[d, v] : rep.scores) std::cout << d << " " << v << "\n";
    }
    return 0;
}

int cmd_render(const RenderArgs &a) {
    const auto doc = stage("ingest", [&] { return load_edl(a.edl); });
    const auto plan = stage("render", [&] { return render(doc.timeline, a.options, a.dry_run); });
    if (a.dry_run) {
        for (const auto &c : plan.commands) std::cout << c << "\n";
    } else {
        std::cout << "ran " << plan.commands.size() << " commands\n";
    }
    return 0;
}

int cmd_bench(const std::string &manifest) {
    const auto samples = stage("ingest", [&] { return eval::load_benchmark(manifest); });
    const auto stats = eval::benchmark_stats(samples);
    std::cout << eval::format_stats(stats);
    return 0;
}

int cmd_synth(const SynthArgs &a) {
    fixtures::FixtureShape shape;
    if (a.segments > 0) shape.min_segments = shape.max_segments = a.segments;
    if (!a.family.empty()) shape.family = parse_task_family(a.family) == TaskFamily::on_beat ? 0 : 1;
    const auto f = fixtures::make_fixture(a.seed, shape);
    const fs::path out(a.out);
    write_text_file(out / "music.json", fixtures::music_annotation_json(f.track));
    write_text_file(out / "videos.jsonl", fixtures::video_manifest_jsonl(f.videos));
    nlohmann::json in = {{"text", f.intent.text},
                         {"family", std::string(to_string(f.intent.family))},
                         {"level", std::string(to_string(f.intent.level))}};
    write_text_file(out / "intent.json", in.dump(2) + "\n");
    std::cout << f.intent.text << "\n";
    return 0;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"beatcut: music-grounded mashup editing"};
    app.require_subcommand(1);

    EditArgs ea;
    auto *edit = app.add_subcommand("edit", "plan, edit and coordinate a timeline; writes EDL, trace, report, ledger");
    edit->add_option("--intent", ea.intent, "edit intent text")->required();
    edit->add_option("--family", ea.family, "on_beat | story_driven")->capture_default_str();
    edit->add_option("--level", ea.level, "general | detailed")->capture_default_str();
    edit->add_option("--music", ea.music, "music annotation (.json) or envelope file");
    edit->add_option("--manifest", ea.manifest, "video manifest (JSON lines)");
    edit->add_option("--out", ea.out, "output directory")->capture_default_str();
    edit->add_option("--config", ea.config, "run config (JSON)");
    edit->add_option("--backend", ea.backend, "scripted | remote");
    edit->add_option("--seed", ea.seed, "backend seed");
    edit->add_option("--budget", ea.budget, "negotiation iteration budget");
    edit->add_flag("--no-preventive", ea.no_preventive, "disable the context controller");
    edit->add_flag("--no-region-decomp", ea.no_region_decomp, "repair conflicting pairs, not regions");
    edit->add_flag("--no-negotiation", ea.no_negotiation, "one left-to-right repair pass");

    EvalArgs va;
    auto *evaluate = app.add_subcommand("evaluate", "judge an EDL");
    evaluate->add_option("--edl", va.edl)->required();
    evaluate->add_option("--music", va.music)->required();
    evaluate->add_option("--manifest", va.manifest)->required();
    evaluate->add_option("--intent", va.intent)->required();
    evaluate->add_option("--family", va.family)->capture_default_str();
    evaluate->add_option("--level", va.level)->capture_default_str();
    evaluate->add_option("--backend", va.backend)->capture_default_str();
    evaluate->add_option("--seed", va.seed)->capture_default_str();
    evaluate->add_option("--out", va.out, "report file; stdout when omitted");

    RenderArgs ra;
    auto *rend = app.add_subcommand("render", "cut and concatenate with an external tool");
    rend->add_option("--edl", ra.edl)->required();
    rend->add_option("--cut-template", ra.options.cut_template, "{source} {in} {out} {output}");
    rend->add_option("--concat-template", ra.options.concat_template, "{list} {output}");
    rend->add_option("--source-pattern", ra.options.source_pattern, "{id}")->capture_default_str();
    rend->add_option("--media-dir", ra.options.media_dir)->capture_default_str();
    rend->add_option("--work-dir", ra.options.work_dir)->capture_default_str();
    rend->add_option("--output", ra.options.output)->capture_default_str();
    rend->add_flag("--dry-run", ra.dry_run, "print commands only");

    std::string bench_manifest;
    auto *bench = app.add_subcommand("bench", "per-configuration statistics of a benchmark manifest");
    bench->add_option("--manifest", bench_manifest)->required();

    SynthArgs sa;
    auto *synth = app.add_subcommand("synth", "write a seeded fixture (music.json, videos.jsonl, intent.json)");
    synth->add_option("--seed", sa.seed)->capture_default_str();
    synth->add_option("--segments", sa.segments, "0 lets the seed decide");
    synth->add_option("--family", sa.family, "on_beat | story_driven");
    synth->add_option("--out", sa.out)->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*edit) return cmd_edit(ea);
        if (*evaluate) return cmd_evaluate(va);
        if (*rend) return cmd_render(ra);
        if (*bench) return cmd_bench(bench_manifest);
        if (*synth) return cmd_synth(sa);
    } catch (const StageError &e) {
        std::cerr << "beatcut: " << e.what() << "\n";
        return e.exit_code();
    } catch (const Error &e) {
        std::cerr << "beatcut: " << e.kind() << ": " << e.what() << "\n";
        return e.exit_code();
    }
    return 1;
}
