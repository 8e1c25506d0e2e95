// SPDX-License-Identifier: Apache-2.0
#pragma once

// Template-driven hand-off to an external media tool: one command per cut
// and one concatenation step. Nothing here decodes media.

#include <string>
#include <vector>

#include "beatcut/types.hpp"

namespace beatcut {

struct RenderOptions {
    // {source} {in} {out} {output}
    std::string cut_template = "ffmpeg -y -loglevel error -ss {in} -to {out} -i {source} -c copy {output}";
    // {list} is a text file naming the parts, one "file '<path>'" line each; {output}
    std::string concat_template = "ffmpeg -y -loglevel error -f concat -safe 0 -i {list} -c copy {output}";
    std::string source_pattern = "{id}.mp4"; // {id} is the source video id
    std::string media_dir = ".";
    std::string work_dir = "render_parts";
    std::string output = "mashup.mp4";
};

struct RenderPlan {
    std::vector<std::string> commands; // cuts first, then the concatenation
    std::vector<std::string> parts;    // cut outputs, in order
    std::string list_file;
};

/// Shell-quotes a word with single quotes.
[[nodiscard]] std::string shell_quote(const std::string &word);

/// Throws ConfigError when a template lacks one of its placeholders.
void validate(const RenderOptions &options);

/// Commands for every unit in timeline order. An empty timeline plans nothing.
[[nodiscard]] RenderPlan plan_render(const Timeline &timeline, const RenderOptions &options);

/// Runs the plan (writing the concat list first) or, with `dry_run`, only
/// returns it. Throws RenderError with the captured output of the first
/// failing command.
RenderPlan render(const Timeline &timeline, const RenderOptions &options, bool dry_run);

} // namespace beatcut
