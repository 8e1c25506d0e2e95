// SPDX-License-Identifier: Apache-2.0
#include "beatcut/render.hpp"

#include <array>
#include <cstdio>
#include <filesystem>
#include <sys/wait.h>

#include "beatcut/edl.hpp"
#include "beatcut/errors.hpp"
#include "beatcut/text.hpp"
#include "beatcut/timeline.hpp"

namespace beatcut {

namespace {

std::string fill(std::string tpl, const std::string &key, const std::string &value) {
    const std::string ph = "{" + key + "}";
    for (auto pos = tpl.find(ph); pos != std::string::npos; pos = tpl.find(ph, pos + value.size()))
        tpl.replace(pos, ph.size(), value);
    return tpl;
}

void require(const std::string &tpl, std::initializer_list<const char *> keys, const char *what) {
    for (const char *k : keys) {
        if (tpl.find(std::string("{") + k + "}") == std::string::npos)
            throw ConfigError(std::string(what) + " template lacks the {" + k + "} placeholder");
    }
}

// Runs through the shell; returns exit status and merged output.
std::pair<int, std::string> run_command(const std::string &cmd) {
    std::string out;
    FILE *p = ::popen((cmd + " 2>&1").c_str(), "r");
    if (!p) throw RenderError("cannot start: " + cmd);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) out += buf.data();
    const int st = ::pclose(p);
    const int code = WIFEXITED(st) ? WEXITSTATUS(st) : 128;
    return {code, out};
}

} // namespace

std::string shell_quote(const std::string &word) {
    std::string q = "'";
    for (char c : word) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    return q + "'";
}

void validate(const RenderOptions &o) {
    require(o.cut_template, {"source", "in", "out", "output"}, "cut");
    require(o.concat_template, {"list", "output"}, "concat");
    require(o.source_pattern, {"id"}, "source");
}

RenderPlan plan_render(const Timeline &timeline, const RenderOptions &o) {
    validate(o);
    RenderPlan plan;
    const auto units = flatten(timeline);
    if (units.empty()) return plan;
    const std::filesystem::path work(o.work_dir);
    for (std::size_t k = 0; k < units.size(); ++k) {
        const auto &u = units[k];
        char name[32];
        std::snprintf(name, sizeof name, "part_%04zu.mp4", k);
        const auto part = (work / name).string();
        const auto source = (std::filesystem::path(o.media_dir) / fill(o.source_pattern, "id", u.source_id)).string();
        auto cmd = fill(o.cut_template, "source", shell_quote(source));
        cmd = fill(cmd, "in", text::fmt_seconds(u.source_in));
        cmd = fill(cmd, "out", text::fmt_seconds(u.source_out));
        cmd = fill(cmd, "output", shell_quote(part));
        plan.commands.push_back(std::move(cmd));
        plan.parts.push_back(part);
    }
    plan.list_file = (work / "parts.txt").string();
    auto cat = fill(o.concat_template, "list", shell_quote(plan.list_file));
    plan.commands.push_back(fill(cat, "output", shell_quote(o.output)));
    return plan;
}

RenderPlan render(const Timeline &timeline, const RenderOptions &options, bool dry_run) {
    auto plan = plan_render(timeline, options);
    if (dry_run || plan.commands.empty()) return plan;
    std::string list;
    for (const auto &p : plan.parts) {
        // concat lists resolve relative names against the list's own directory
        list += "file '" + std::filesystem::path(p).filename().string() + "'\n";
    }
    try {
        write_text_file(plan.list_file, list);
    } catch (const IngestError &e) {
        throw RenderError(e.what());
    }
    for (const auto &cmd : plan.commands) {
        const auto [code, out] = run_command(cmd);
        if (code != 0) throw RenderError("exit " + std::to_string(code) + " from: " + cmd + "\n" + out);
    }
    return plan;
}

} // namespace beatcut
