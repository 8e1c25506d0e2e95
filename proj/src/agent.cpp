// SPDX-License-Identifier: Apache-2.0
#include "beatcut/agent.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "beatcut/errors.hpp"
#include "beatcut/text.hpp"

namespace beatcut::agent {

std::string_view to_string(Role r) noexcept {
    switch (r) {
    case Role::music: return "music";
    case Role::plan: return "plan";
    case Role::construct: return "construct";
    case Role::video: return "video";
    case Role::retrieval: return "retrieval";
    case Role::roughcut: return "roughcut";
    case Role::refine: return "refine";
    case Role::controller: return "controller";
    case Role::diagnostic: return "diagnostic";
    case Role::negotiator: return "negotiator";
    case Role::judge: return "judge";
    }
    return "plan";
}

Role parse_role(std::string_view name) {
    for (auto r : kAllRoles) {
        if (to_string(r) == name) return r;
    }
    throw ConfigError("unknown agent role '" + std::string(name) + "'");
}

// --- schemas --------------------------------------------------------------

void SchemaRegistry::add(std::string name, Schema schema) {
    schemas_[std::move(name)] = std::move(schema);
}

bool SchemaRegistry::contains(std::string_view name) const {
    return schemas_.find(name) != schemas_.end();
}

namespace {

bool matches(const Payload &v, FieldType t) {
    switch (t) {
    case FieldType::string: return v.is_string();
    case FieldType::number: return v.is_number();
    case FieldType::integer: return v.is_number_integer();
    case FieldType::boolean: return v.is_boolean();
    case FieldType::array: return v.is_array();
    case FieldType::object: return v.is_object();
    case FieldType::string_array:
        if (!v.is_array()) return false;
        for (const auto &e : v) {
            if (!e.is_string()) return false;
        }
        return true;
    }
    return false;
}

} // namespace

std::optional<std::string> SchemaRegistry::check(std::string_view name, const Payload &payload) const {
    auto it = schemas_.find(name);
    if (it == schemas_.end()) return "unknown schema '" + std::string(name) + "'";
    if (!payload.is_object()) return "payload is not an object";
    for (const auto &f : it->second) {
        if (!payload.contains(f.name) || payload.at(f.name).is_null()) {
            if (f.required) return "missing field '" + f.name + "'";
            continue;
        }
        if (!matches(payload.at(f.name), f.type)) return "field '" + f.name + "' has the wrong type";
    }
    return std::nullopt;
}

const SchemaRegistry &SchemaRegistry::builtin() {
    static const SchemaRegistry reg = [] {
        SchemaRegistry r;
        r.add("instructions", {{"instructions", FieldType::string_array}});
        r.add("task_edges", {{"edges", FieldType::array}});
        r.add("queries", {{"queries", FieldType::array}});
        r.add("clip_order", {{"order", FieldType::array}});
        r.add("refine_plan", {{"steps", FieldType::string_array}});
        r.add("context_selection",
              {{"scope", FieldType::string_array}, {"objective", FieldType::string}});
        r.add("conflict_edges", {{"edges", FieldType::array}});
        r.add("repair_instruction", {{"instruction", FieldType::string},
                                     {"avoid_spans", FieldType::array, false},
                                     {"target_emotion", FieldType::string, false},
                                     {"target_characters", FieldType::string_array, false}});
        r.add("judge_scores", {{"scores", FieldType::object}});
        return r;
    }();
    return reg;
}

// --- token accounting -----------------------------------------------------

std::int64_t count_tokens(std::string_view text) noexcept {
    return static_cast<std::int64_t>(text::count_words(text));
}

TokenLedger::TokenLedger(const TokenLedger &other) {
    std::lock_guard lock(other.mu_);
    roles_ = other.roles_;
    total_in_ = other.total_in_;
    total_out_ = other.total_out_;
}

TokenLedger &TokenLedger::operator=(const TokenLedger &other) {
    if (this == &other) return *this;
    std::scoped_lock lock(mu_, other.mu_);
    roles_ = other.roles_;
    total_in_ = other.total_in_;
    total_out_ = other.total_out_;
    return *this;
}

void TokenLedger::record(Role role, std::int64_t tokens_in, std::int64_t tokens_out) {
    std::lock_guard lock(mu_);
    auto &e = roles_[role];
    e.tokens_in += tokens_in;
    e.tokens_out += tokens_out;
    ++e.calls;
    total_in_ += tokens_in;
    total_out_ += tokens_out;
}

std::map<Role, RoleTokens> TokenLedger::per_role() const {
    std::lock_guard lock(mu_);
    return roles_;
}

std::int64_t TokenLedger::total_in() const {
    std::lock_guard lock(mu_);
    return total_in_;
}

std::int64_t TokenLedger::total_out() const {
    std::lock_guard lock(mu_);
    return total_out_;
}

std::int64_t TokenLedger::total() const {
    std::lock_guard lock(mu_);
    return total_in_ + total_out_;
}

Payload TokenLedger::to_json() const {
    std::lock_guard lock(mu_);
    Payload roles = Payload::object();
    for (const auto &[r, t] : roles_) {
        roles[std::string(to_string(r))] = {
            {"tokens_in", t.tokens_in}, {"tokens_out", t.tokens_out}, {"calls", t.calls}};
    }
    return {{"roles", roles},
            {"tokens_in", total_in_},
            {"tokens_out", total_out_},
            {"total", total_in_ + total_out_}};
}

double efficiency_report(const TokenLedger &full, const TokenLedger &variant) {
    const auto f = full.total();
    const auto v = variant.total();
    if (f <= 0) throw ReportError("full-configuration ledger has no tokens");
    if (v <= 0) throw ReportError("variant ledger has no tokens");
    return static_cast<double>(f) / static_cast<double>(v);
}

AggregateEfficiency
efficiency_aggregate(std::span<const std::pair<std::int64_t, std::int64_t>> runs) {
    if (runs.empty()) throw ReportError("no runs to aggregate");
    AggregateEfficiency out;
    std::int64_t full = 0;
    std::int64_t variant = 0;
    for (const auto &[f, v] : runs) {
        if (f <= 0 || v <= 0) throw ReportError("run with an empty ledger");
        out.mean_of_ratios += static_cast<double>(f) / static_cast<double>(v);
        full += f;
        variant += v;
    }
    out.mean_of_ratios /= static_cast<double>(runs.size());
    out.pooled = static_cast<double>(full) / static_cast<double>(variant);
    return out;
}

// --- rendering ------------------------------------------------------------

namespace {

void render_value(std::ostringstream &os, const Payload &v, int depth) {
    const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
    if (v.is_string()) {
        os << v.get<std::string>();
    } else if (v.is_number_integer()) {
        os << v.get<std::int64_t>();
    } else if (v.is_number()) {
        os << text::fmt_seconds(v.get<double>());
    } else if (v.is_boolean()) {
        os << (v.get<bool>() ? "yes" : "no");
    } else if (v.is_null()) {
        os << "none";
    } else if (v.is_array()) {
        bool first = true;
        for (const auto &e : v) {
            if (e.is_object()) {
                os << '\n' << indent << "- ";
                render_value(os, e, depth + 1);
            } else {
                if (!first) os << ", ";
                render_value(os, e, depth + 1);
            }
            first = false;
        }
    } else if (v.is_object()) {
        bool first = true;
        for (const auto &[k, e] : v.items()) {
            if (!first) os << '\n' << indent;
            os << k << ": ";
            render_value(os, e, depth + 1);
            first = false;
        }
    }
}

} // namespace

std::string render_payload(const Payload &payload) {
    std::ostringstream os;
    render_value(os, payload, 0);
    return os.str();
}

std::string render_prompt(const AgentRequest &request) {
    std::ostringstream os;
    os << "role: " << to_string(request.role) << '\n'
       << "respond with: " << request.expected_schema << '\n'
       << render_payload(request.context);
    return os.str();
}

// --- scripted backend -----------------------------------------------------

void ScriptedBackend::on(Role role, Handler handler) { handlers_[role] = std::move(handler); }

Payload ScriptedBackend::decide(const AgentRequest &request) const {
    auto it = handlers_.find(request.role);
    if (it == handlers_.end())
        throw ConfigError("scripted backend has no handler for role '" +
                          std::string(to_string(request.role)) + "'");
    return it->second(request.context, seed_);
}

RawReply ScriptedBackend::complete(const AgentRequest &request, const std::string &) {
    return RawReply{decide(request), std::nullopt, std::nullopt};
}

// --- dispatch -------------------------------------------------------------

namespace {

AgentRequest with_repair(const AgentRequest &request, const std::string &reason) {
    AgentRequest r = request;
    r.context["repair"] = "previous reply was rejected: " + reason +
                          ". Reply again with exactly the '" + request.expected_schema + "' shape.";
    return r;
}

} // namespace

AgentResponse invoke(const AgentRequest &request, Backend &backend, TokenLedger &ledger,
                     const SchemaRegistry &schemas) {
    if (!schemas.contains(request.expected_schema))
        throw ConfigError("unregistered response schema '" + request.expected_schema + "'");

    std::int64_t tin = 0;
    std::int64_t tout = 0;
    auto attempt = [&](const AgentRequest &req) {
        const auto prompt = render_prompt(req);
        RawReply reply = backend.complete(req, prompt);
        tin += reply.tokens_in.value_or(count_tokens(prompt));
        tout += reply.tokens_out.value_or(count_tokens(render_payload(reply.payload)));
        return reply.payload;
    };

    Payload payload;
    try {
        payload = attempt(request);
        if (auto err = schemas.check(request.expected_schema, payload)) {
            payload = attempt(with_repair(request, *err));
            if (auto err2 = schemas.check(request.expected_schema, payload)) {
                ledger.record(request.role, tin, tout);
                throw AgentProtocolError(std::string(to_string(request.role)) +
                                         ": payload still invalid after repair: " + *err2);
            }
        }
    } catch (const AgentProtocolError &) {
        throw;
    } catch (const Error &) {
        if (tin || tout) ledger.record(request.role, tin, tout);
        throw;
    }
    ledger.record(request.role, tin, tout);
    return AgentResponse{std::move(payload), tin, tout};
}

} // namespace beatcut::agent
