// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace beatcut {

/// Base for every error the engine raises. `exit_code()` is what the CLI
/// returns when the error escapes a command.
class Error : public std::runtime_error {
  public:
    explicit Error(const std::string &what) : std::runtime_error(what) {}
    [[nodiscard]] virtual int exit_code() const noexcept { return 1; }
    [[nodiscard]] virtual const char *kind() const noexcept { return "Error"; }
};

#define BEATCUT_DEFINE_ERROR(Name, Code)                                        \
    class Name : public Error {                                                 \
      public:                                                                   \
        explicit Name(const std::string &what) : Error(what) {}                 \
        [[nodiscard]] int exit_code() const noexcept override { return Code; }  \
        [[nodiscard]] const char *kind() const noexcept override { return #Name; } \
    }

BEATCUT_DEFINE_ERROR(ConfigError, 2);
BEATCUT_DEFINE_ERROR(IngestError, 3);
BEATCUT_DEFINE_ERROR(ValidationError, 4);
BEATCUT_DEFINE_ERROR(AnalysisError, 5);
BEATCUT_DEFINE_ERROR(CompositionError, 6);
BEATCUT_DEFINE_ERROR(ScoreError, 7);
BEATCUT_DEFINE_ERROR(AgentUnavailable, 8);
BEATCUT_DEFINE_ERROR(AgentProtocolError, 9);
BEATCUT_DEFINE_ERROR(GraphError, 10);
BEATCUT_DEFINE_ERROR(RetrievalError, 11);
BEATCUT_DEFINE_ERROR(EmptySegmentError, 12);
BEATCUT_DEFINE_ERROR(NeedMoreClips, 13);
BEATCUT_DEFINE_ERROR(OracleError, 14);
BEATCUT_DEFINE_ERROR(JudgeError, 15);
BEATCUT_DEFINE_ERROR(StatsError, 16);
BEATCUT_DEFINE_ERROR(ReportError, 17);
BEATCUT_DEFINE_ERROR(RenderError, 18);
BEATCUT_DEFINE_ERROR(PreconditionError, 19);

#undef BEATCUT_DEFINE_ERROR

/// Wraps an error that escaped a pipeline stage. Keeps the original exit
/// code so the CLI can still distinguish the cause.
class StageError : public Error {
  public:
    StageError(std::string stage, const Error &cause)
        : Error("stage '" + stage + "' failed: " + cause.kind() + ": " + cause.what()),
          stage_(std::move(stage)), code_(cause.exit_code()), cause_kind_(cause.kind()) {}

    [[nodiscard]] int exit_code() const noexcept override { return code_; }
    [[nodiscard]] const char *kind() const noexcept override { return "StageError"; }
    [[nodiscard]] const std::string &stage() const noexcept { return stage_; }
    [[nodiscard]] const std::string &cause_kind() const noexcept { return cause_kind_; }

  private:
    std::string stage_;
    int code_;
    std::string cause_kind_;
};

} // namespace beatcut
