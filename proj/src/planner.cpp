// SPDX-License-Identifier: Apache-2.0
#include "beatcut/planner.hpp"

#include <algorithm>
#include <queue>
#include <regex>
#include <set>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/text.hpp"

namespace beatcut::planner {

std::string_view to_string(TaskStatus s) noexcept {
    switch (s) {
    case TaskStatus::pending: return "pending";
    case TaskStatus::running: return "running";
    case TaskStatus::done: return "done";
    case TaskStatus::failed: return "failed";
    }
    return "pending";
}

// --- graph ----------------------------------------------------------------

std::vector<int> TaskGraph::predecessors(int task_id) const {
    std::vector<int> out;
    for (const auto &[a, b] : edges) {
        if (b == task_id) out.push_back(a);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> TaskGraph::successors(int task_id) const {
    std::vector<int> out;
    for (const auto &[a, b] : edges) {
        if (a == task_id) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> TaskGraph::ancestors(int task_id) const {
    std::set<int> seen;
    std::vector<int> stack{task_id};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int p : predecessors(v)) {
            if (seen.insert(p).second) stack.push_back(p);
        }
    }
    seen.erase(task_id);
    return {seen.begin(), seen.end()};
}

namespace {

std::string edge_str(int a, int b) { return std::to_string(a) + "->" + std::to_string(b); }

} // namespace

std::vector<int> topological_order(const TaskGraph &graph) {
    const int n = static_cast<int>(graph.nodes.size());
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> succ(n);
    for (const auto &[a, b] : graph.edges) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw GraphError("edge " + edge_str(a, b) + " references a missing task");
        succ[a].push_back(b);
        ++indeg[b];
    }
    // min-heap keyed on segment index; ids equal indices after validation,
    // but keep the key explicit.
    using Item = std::pair<int, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> ready;
    for (int i = 0; i < n; ++i) {
        if (indeg[i] == 0) ready.emplace(graph.nodes[i].segment_index, i);
    }
    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        const int v = ready.top().second;
        ready.pop();
        order.push_back(graph.nodes[v].task_id);
        for (int w : succ[v]) {
            if (--indeg[w] == 0) ready.emplace(graph.nodes[w].segment_index, w);
        }
    }
    if (static_cast<int>(order.size()) != n) {
        std::vector<int> stuck;
        for (int i = 0; i < n; ++i) {
            if (indeg[i] > 0) stuck.push_back(i);
        }
        std::string names;
        for (int s : stuck) names += (names.empty() ? "" : ",") + std::to_string(s);
        throw GraphError("task graph has a cycle through tasks {" + names + "}");
    }
    return order;
}

void validate(const TaskGraph &graph) {
    const int n = static_cast<int>(graph.nodes.size());
    for (int i = 0; i < n; ++i) {
        if (graph.nodes[i].task_id != i || graph.nodes[i].segment_index != i)
            throw GraphError("task " + std::to_string(i) + " is not keyed by its segment index");
    }
    std::set<std::pair<int, int>> seen;
    for (const auto &[a, b] : graph.edges) {
        if (a < 0 || a >= n || b < 0 || b >= n)
            throw GraphError("edge " + edge_str(a, b) + " references a missing task");
        if (a == b) throw GraphError("self-loop on task " + std::to_string(a));
        if (!seen.emplace(a, b).second) throw GraphError("duplicate edge " + edge_str(a, b));
    }
    (void)topological_order(graph);
}

// --- instruction parsing --------------------------------------------------

namespace {

const std::regex &directive_re() {
    static const std::regex re(R"(segment\s+(\d+)\s*:)", std::regex::icase);
    return re;
}

std::string trim(std::string s) {
    const auto keep = [](unsigned char c) { return !std::isspace(c) && c != '.' && c != ','; };
    auto b = std::find_if(s.begin(), s.end(), keep);
    auto e = std::find_if(s.rbegin(), s.rend(), keep).base();
    return b < e ? std::string(b, e) : std::string();
}

struct DirectiveSpan {
    int index;
    std::size_t header_begin;
    std::size_t body_begin;
    std::size_t body_end;
};

std::vector<DirectiveSpan> directive_spans(const std::string &s) {
    std::vector<DirectiveSpan> out;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), directive_re());
         it != std::sregex_iterator(); ++it) {
        const auto &m = *it;
        DirectiveSpan d{};
        d.index = std::stoi(m[1].str());
        d.header_begin = static_cast<std::size_t>(m.position(0));
        d.body_begin = d.header_begin + static_cast<std::size_t>(m.length(0));
        d.body_end = s.size();
        out.push_back(d);
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::size_t end = k + 1 < out.size() ? out[k + 1].header_begin : s.size();
        const auto stop = s.find_first_of(";\n", out[k].body_begin);
        if (stop != std::string::npos && stop < end) end = stop;
        out[k].body_end = end;
    }
    return out;
}

} // namespace

std::map<int, std::string> parse_directives(std::string_view intent_text) {
    const std::string s(intent_text);
    std::map<int, std::string> out;
    for (const auto &d : directive_spans(s)) {
        auto body = trim(s.substr(d.body_begin, d.body_end - d.body_begin));
        if (body.empty()) continue;
        auto &slot = out[d.index];
        slot = slot.empty() ? body : slot + "; " + body;
    }
    return out;
}

std::vector<std::string> intent_keywords(std::string_view intent_text, std::size_t limit) {
    const std::string s(intent_text);
    std::string rest;
    std::size_t pos = 0;
    for (const auto &d : directive_spans(s)) {
        rest += s.substr(pos, d.header_begin - pos);
        rest += ' ';
        pos = d.body_end;
    }
    rest += s.substr(std::min(pos, s.size()));
    auto words = text::content_words(rest);
    if (words.size() > limit) words.resize(limit);
    return words;
}

std::vector<int> explicit_dependencies(std::string_view instruction) {
    static const std::regex re(R"(after\s+segment\s+(\d+))", std::regex::icase);
    const std::string s(instruction);
    std::set<int> deps;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it)
        deps.insert(std::stoi((*it)[1].str()));
    return {deps.begin(), deps.end()};
}

// --- agents ---------------------------------------------------------------

namespace {

agent::Payload scripted_plan(const agent::Payload &ctx, std::uint64_t) {
    const auto intent = ctx.at("intent").get<std::string>();
    const auto directives = parse_directives(intent);
    auto theme = text::join(intent_keywords(intent), " ");
    if (theme.empty()) theme = "general";
    agent::Payload out = agent::Payload::array();
    for (const auto &seg : ctx.at("segments")) {
        const int i = seg.at("index").get<int>();
        std::ostringstream q;
        q << "segment " << i << ": theme=" << theme
          << "; emotion=" << seg.at("emotion").get<std::string>()
          << "; pace=" << seg.at("pace").get<std::string>()
          << "; beats=" << seg.at("beats").get<int>();
        if (auto it = directives.find(i); it != directives.end()) q << "; focus=" << it->second;
        out.push_back(q.str());
    }
    return {{"instructions", out}};
}

agent::Payload scripted_construct(const agent::Payload &ctx, std::uint64_t) {
    const auto &instructions = ctx.at("instructions");
    const int n = static_cast<int>(instructions.size());
    std::set<std::pair<int, int>> edges;
    for (int i = 0; i + 1 < n; ++i) edges.emplace(i, i + 1);
    for (int i = 0; i < n; ++i) {
        for (int k : explicit_dependencies(instructions[i].get<std::string>())) edges.emplace(k, i);
    }
    agent::Payload out = agent::Payload::array();
    for (const auto &[a, b] : edges) out.push_back({a, b});
    return {{"edges", out}};
}

} // namespace

void register_scripted(agent::ScriptedBackend &backend) {
    backend.on(agent::Role::plan, scripted_plan);
    backend.on(agent::Role::construct, scripted_construct);
}

std::vector<std::string> plan_instructions(std::span<const SegmentAttributes> attributes,
                                           const EditIntent &intent, agent::Backend &backend,
                                           agent::TokenLedger &ledger) {
    if (attributes.empty()) throw PreconditionError("plan_instructions needs at least one segment");
    validate(intent);
    agent::Payload segs = agent::Payload::array();
    for (std::size_t i = 0; i < attributes.size(); ++i) {
        const auto &a = attributes[i];
        segs.push_back({{"index", static_cast<int>(i)},
                        {"emotion", std::string(to_string(a.emotion))},
                        {"pace", std::string(to_string(a.energy_profile))},
                        {"beats", static_cast<int>(a.beats.size())},
                        {"tempo_bpm", a.tempo_bpm}});
    }
    agent::AgentRequest req{agent::Role::plan,
                            {{"intent", intent.text},
                             {"intent_level", std::string(to_string(intent.level))},
                             {"task_family", std::string(to_string(intent.family))},
                             {"segments", segs}},
                            "instructions"};
    const auto res = agent::invoke(req, backend, ledger);
    auto out = res.payload.at("instructions").get<std::vector<std::string>>();
    if (out.size() != attributes.size())
        throw AgentProtocolError("plan agent returned " + std::to_string(out.size()) +
                                 " instructions for " + std::to_string(attributes.size()) +
                                 " segments");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i].empty())
            throw AgentProtocolError("plan agent returned an empty instruction for segment " +
                                     std::to_string(i));
    }
    return out;
}

TaskGraph build_task_graph(const std::vector<std::string> &instructions, agent::Backend &backend,
                           agent::TokenLedger &ledger) {
    if (instructions.empty()) throw PreconditionError("build_task_graph needs instructions");
    agent::AgentRequest req{agent::Role::construct, {{"instructions", instructions}}, "task_edges"};
    const auto res = agent::invoke(req, backend, ledger);

    TaskGraph g;
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        const int id = static_cast<int>(i);
        g.nodes.push_back({id, id, instructions[i], TaskStatus::pending});
    }
    for (const auto &e : res.payload.at("edges")) {
        if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
            throw AgentProtocolError("construct agent returned a malformed edge: " + e.dump());
        g.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    validate(g);
    std::sort(g.edges.begin(), g.edges.end());
    return g;
}

// --- trace ----------------------------------------------------------------

Trace::Trace(const Trace &other) {
    std::lock_guard lock(other.mu_);
    events_ = other.events_;
}

Trace &Trace::operator=(const Trace &other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mu_, other.mu_);
    events_ = other.events_;
    return *this;
}

void Trace::emit(std::string stage, std::string event, agent::Payload fields) {
    std::lock_guard lock(mu_);
    agent::Payload e = {{"seq", events_.size()}, {"stage", std::move(stage)}, {"event", std::move(event)}};
    for (auto &[k, v] : fields.items()) e[k] = v;
    events_.push_back(std::move(e));
}

void Trace::append(const std::vector<agent::Payload> &events) {
    std::lock_guard lock(mu_);
    for (auto e : events) {
        e["seq"] = events_.size();
        events_.push_back(std::move(e));
    }
}

std::vector<agent::Payload> Trace::events() const {
    std::lock_guard lock(mu_);
    return events_;
}

std::string Trace::to_jsonl() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto &e : events_) {
        out += e.dump();
        out += '\n';
    }
    return out;
}

// --- scheduler ------------------------------------------------------------

namespace {

TaskOutcome run_task(const TaskWorker &worker, const TaskNode &node,
                     const std::vector<CompletedTask> &anc) {
    TaskOutcome out;
    try {
        out = worker(node, anc);
    } catch (const std::exception &e) {
        out = TaskOutcome{};
        out.ok = false;
        out.error = e.what();
    }
    if (!out.ok) out.sub = SubTimeline{};
    if (out.ok && out.sub.segment_index != node.segment_index) {
        out = TaskOutcome{};
        out.ok = false;
        out.error = "worker returned the wrong segment";
    }
    out.sub.segment_index = node.segment_index;
    return out;
}

} // namespace

ScheduleResult execute_dag(TaskGraph graph, const TaskWorker &worker, Trace &trace, bool parallel) {
    validate(graph);
    const auto order = topological_order(graph);
    const int n = static_cast<int>(graph.nodes.size());
    std::vector<int> pos(n);
    for (int k = 0; k < n; ++k) pos[order[k]] = k;

    std::vector<std::vector<int>> anc(n), preds(n);
    for (int i = 0; i < n; ++i) {
        anc[i] = graph.ancestors(i);
        std::sort(anc[i].begin(), anc[i].end(), [&](int a, int b) { return pos[a] < pos[b]; });
        preds[i] = graph.predecessors(i);
    }

    std::vector<SubTimeline> results(n);
    auto ancestors_done = [&](int id) {
        std::vector<CompletedTask> out;
        for (int a : anc[id]) {
            if (graph.nodes[a].status == TaskStatus::done)
                out.push_back({a, graph.nodes[a].segment_index, results[a].memo});
        }
        return out;
    };
    auto finish = [&](int id, TaskOutcome &o) {
        results[id] = std::move(o.sub);
        graph.nodes[id].status = o.ok ? TaskStatus::done : TaskStatus::failed;
        trace.append(o.events);
        agent::Payload f = {{"task_id", id}, {"units", results[id].units.size()}};
        if (!o.ok) f["error"] = o.error;
        trace.emit("schedule", o.ok ? "done" : "failed", std::move(f));
    };

    if (!parallel) {
        for (int id : order) {
            graph.nodes[id].status = TaskStatus::running;
            trace.emit("schedule", "start", {{"task_id", id}});
            auto o = run_task(worker, graph.nodes[id], ancestors_done(id));
            finish(id, o);
        }
        return {std::move(results), std::move(graph)};
    }

    auto finished = [&](int id) {
        const auto s = graph.nodes[id].status;
        return s == TaskStatus::done || s == TaskStatus::failed;
    };
    int remaining = n;
    while (remaining > 0) {
        std::vector<int> wave;
        for (int id : order) {
            if (graph.nodes[id].status != TaskStatus::pending) continue;
            if (std::all_of(preds[id].begin(), preds[id].end(), finished)) wave.push_back(id);
        }
        std::vector<std::vector<CompletedTask>> inputs;
        for (int id : wave) {
            graph.nodes[id].status = TaskStatus::running;
            trace.emit("schedule", "start", {{"task_id", id}});
            inputs.push_back(ancestors_done(id));
        }
        std::vector<TaskOutcome> outcomes(wave.size());
        const int w = static_cast<int>(wave.size());
#pragma omp parallel for schedule(dynamic)
        for (int k = 0; k < w; ++k) outcomes[k] = run_task(worker, graph.nodes[wave[k]], inputs[k]);
        for (int k = 0; k < w; ++k) finish(wave[k], outcomes[k]);
        remaining -= w;
    }
    return {std::move(results), std::move(graph)};
}

} // namespace beatcut::planner
