// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beatcut/agent.hpp"
#include "beatcut/types.hpp"

namespace beatcut::planner {

enum class TaskStatus { pending, running, done, failed };

[[nodiscard]] std::string_view to_string(TaskStatus s) noexcept;

struct TaskNode {
    int task_id = 0;
    int segment_index = 0;
    std::string instruction;
    TaskStatus status = TaskStatus::pending;

    bool operator==(const TaskNode &) const = default;
};

/// Edges point from prerequisite to dependent task.
struct TaskGraph {
    std::vector<TaskNode> nodes;
    std::vector<std::pair<int, int>> edges;

    [[nodiscard]] std::vector<int> predecessors(int task_id) const;
    [[nodiscard]] std::vector<int> successors(int task_id) const;
    /// Transitive predecessors, ascending.
    [[nodiscard]] std::vector<int> ancestors(int task_id) const;

    bool operator==(const TaskGraph &) const = default;
};

/// Throws GraphError on dangling endpoints, self-loops, duplicate edges or
/// cycles. Node i must carry task_id = segment_index = i.
void validate(const TaskGraph &graph);

/// "segment k: ..." fragments of a detailed intent, keyed by k (0-based).
[[nodiscard]] std::map<int, std::string> parse_directives(std::string_view intent_text);

/// Up to `limit` content words of the intent with directive text removed.
[[nodiscard]] std::vector<std::string> intent_keywords(std::string_view intent_text,
                                                       std::size_t limit = 4);

/// Segment indices k named as "after segment k" in an instruction.
[[nodiscard]] std::vector<int> explicit_dependencies(std::string_view instruction);

/// One instruction per segment via the plan agent. Throws PreconditionError
/// on empty input and AgentProtocolError when the count is wrong.
[[nodiscard]] std::vector<std::string> plan_instructions(std::span<const SegmentAttributes> attributes,
                                                         const EditIntent &intent,
                                                         agent::Backend &backend,
                                                         agent::TokenLedger &ledger);

/// DAG over the instructions via the construct agent. Cycles and malformed
/// edges proposed by the backend are rejected with GraphError.
[[nodiscard]] TaskGraph build_task_graph(const std::vector<std::string> &instructions,
                                         agent::Backend &backend, agent::TokenLedger &ledger);

/// Kahn's algorithm; among ready tasks the smallest segment index goes first.
[[nodiscard]] std::vector<int> topological_order(const TaskGraph &graph);

/// Registers the deterministic plan and construct handlers.
void register_scripted(agent::ScriptedBackend &backend);

// --- run trace ------------------------------------------------------------

/// Append-only JSONL event stream. Events carry a logical sequence number
/// instead of wall-clock time so that traces of equal runs are identical.
class Trace {
  public:
    Trace() = default;
    Trace(const Trace &other);
    Trace &operator=(const Trace &other);

    void emit(std::string stage, std::string event, agent::Payload fields = agent::Payload::object());
    void append(const std::vector<agent::Payload> &events);

    [[nodiscard]] std::vector<agent::Payload> events() const;
    [[nodiscard]] std::string to_jsonl() const;

  private:
    mutable std::mutex mu_;
    std::vector<agent::Payload> events_;
};

// --- scheduler ------------------------------------------------------------

/// What a worker may see of a finished ancestor: its memo, never its units.
struct CompletedTask {
    int task_id = 0;
    int segment_index = 0;
    TimelineMemo memo;
};

struct TaskOutcome {
    SubTimeline sub;
    bool ok = true;
    std::string error;
    std::vector<agent::Payload> events; // appended to the trace after the task
};

using TaskWorker =
    std::function<TaskOutcome(const TaskNode &node, const std::vector<CompletedTask> &done_ancestors)>;

struct ScheduleResult {
    std::vector<SubTimeline> subtimelines; // by segment index
    TaskGraph graph;                       // with final statuses
};

/// Runs every task once its predecessors have finished. Serial mode follows
/// topological_order; parallel mode runs ready waves concurrently. Both hand
/// workers the same ancestor lists (ordered by topological position), so the
/// results do not depend on the mode. A worker that throws or reports
/// failure leaves an empty sub-timeline and a failed node.
ScheduleResult execute_dag(TaskGraph graph, const TaskWorker &worker, Trace &trace,
                           bool parallel = false);

} // namespace beatcut::planner
