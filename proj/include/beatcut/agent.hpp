// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace beatcut::agent {

using Payload = nlohmann::json;

enum class Role {
    music,
    plan,
    construct,
    video,
    retrieval,
    roughcut,
    refine,
    controller,
    diagnostic,
    negotiator,
    judge
};

inline constexpr Role kAllRoles[] = {Role::music,      Role::plan,       Role::construct,
                                     Role::video,      Role::retrieval,  Role::roughcut,
                                     Role::refine,     Role::controller, Role::diagnostic,
                                     Role::negotiator, Role::judge};

[[nodiscard]] std::string_view to_string(Role r) noexcept;
/// Throws ConfigError for names outside the closed role set.
[[nodiscard]] Role parse_role(std::string_view name);

struct AgentRequest {
    Role role = Role::plan;
    Payload context = Payload::object();
    std::string expected_schema;
};

struct AgentResponse {
    Payload payload;
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;

    bool operator==(const AgentResponse &) const = default;
};

// --- schemas --------------------------------------------------------------

enum class FieldType { string, number, integer, boolean, array, string_array, object };

struct FieldSpec {
    std::string name;
    FieldType type = FieldType::string;
    bool required = true;
};

using Schema = std::vector<FieldSpec>;

class SchemaRegistry {
  public:
    void add(std::string name, Schema schema);
    [[nodiscard]] bool contains(std::string_view name) const;
    /// Empty when the payload conforms, otherwise a one-line reason.
    [[nodiscard]] std::optional<std::string> check(std::string_view name, const Payload &payload) const;

    /// Registry holding every response shape the engine asks for.
    [[nodiscard]] static const SchemaRegistry &builtin();

  private:
    std::map<std::string, Schema, std::less<>> schemas_;
};

// --- token accounting -----------------------------------------------------

/// Whitespace word count; the offline stand-in for backend token counts.
[[nodiscard]] std::int64_t count_tokens(std::string_view text) noexcept;

struct RoleTokens {
    std::int64_t tokens_in = 0;
    std::int64_t tokens_out = 0;
    std::int64_t calls = 0;

    bool operator==(const RoleTokens &) const = default;
};

/// Per-role cumulative token usage. Safe for concurrent `record` calls.
class TokenLedger {
  public:
    TokenLedger() = default;
    TokenLedger(const TokenLedger &other);
    TokenLedger &operator=(const TokenLedger &other);

    void record(Role role, std::int64_t tokens_in, std::int64_t tokens_out);

    [[nodiscard]] std::map<Role, RoleTokens> per_role() const;
    [[nodiscard]] std::int64_t total_in() const;
    [[nodiscard]] std::int64_t total_out() const;
    [[nodiscard]] std::int64_t total() const;

    [[nodiscard]] Payload to_json() const;

  private:
    mutable std::mutex mu_;
    std::map<Role, RoleTokens> roles_;
    std::int64_t total_in_ = 0;
    std::int64_t total_out_ = 0;
};

/// full.total / variant.total; higher means the variant is cheaper.
/// Throws ReportError when either ledger is empty.
[[nodiscard]] double efficiency_report(const TokenLedger &full, const TokenLedger &variant);

struct AggregateEfficiency {
    double mean_of_ratios = 0.0; // per-run normalization, averaged
    double pooled = 0.0;         // corpus totals, then normalized
};

[[nodiscard]] AggregateEfficiency
efficiency_aggregate(std::span<const std::pair<std::int64_t, std::int64_t>> full_and_variant_totals);

// --- backends -------------------------------------------------------------

struct RawReply {
    Payload payload;
    std::optional<std::int64_t> tokens_in;
    std::optional<std::int64_t> tokens_out;
};

/// Text form of a request, as sent to a remote model and counted for tokens.
[[nodiscard]] std::string render_prompt(const AgentRequest &request);
[[nodiscard]] std::string render_payload(const Payload &payload);

class Backend {
  public:
    virtual ~Backend() = default;
    virtual RawReply complete(const AgentRequest &request, const std::string &prompt) = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

/// Deterministic backend: each role maps to a pure handler of
/// (context, seed). Handlers are registered by the consuming modules.
class ScriptedBackend final : public Backend {
  public:
    using Handler = std::function<Payload(const Payload &context, std::uint64_t seed)>;

    explicit ScriptedBackend(std::uint64_t seed = 0) : seed_(seed) {}

    void on(Role role, Handler handler);
    [[nodiscard]] bool handles(Role role) const { return handlers_.contains(role); }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Pure decision for a request; throws ConfigError for unregistered roles.
    [[nodiscard]] Payload decide(const AgentRequest &request) const;

    RawReply complete(const AgentRequest &request, const std::string &prompt) override;
    [[nodiscard]] std::string name() const override { return "scripted"; }

  private:
    std::uint64_t seed_;
    std::map<Role, Handler> handlers_;
};

struct RemoteConfig {
    std::string endpoint; // http://host:port/path
    std::string api_key;
    std::string model;
    int retries = 2;
    std::chrono::milliseconds timeout{30000};
    std::chrono::milliseconds backoff{500};

    /// BEATCUT_ENDPOINT, BEATCUT_API_KEY, BEATCUT_MODEL.
    [[nodiscard]] static RemoteConfig from_env();
};

/// JSON-over-HTTP text-generation service. The request body carries
/// {role, prompt, schema, model}; the reply is either {"payload": ...,
/// "tokens_in"?, "tokens_out"?} or the bare payload.
class RemoteBackend final : public Backend {
  public:
    explicit RemoteBackend(RemoteConfig config);
    RawReply complete(const AgentRequest &request, const std::string &prompt) override;
    [[nodiscard]] std::string name() const override { return "remote"; }

  private:
    RemoteConfig config_;
    std::string host_;
    std::string path_;
};

/// Dispatches a request, validates the payload (one repair re-prompt on a
/// schema violation) and books the tokens of every attempt in `ledger`.
/// Throws ConfigError for an unknown schema, AgentProtocolError after a
/// failed repair, and lets AgentUnavailable from the backend through.
AgentResponse invoke(const AgentRequest &request, Backend &backend, TokenLedger &ledger,
                     const SchemaRegistry &schemas = SchemaRegistry::builtin());

} // namespace beatcut::agent
