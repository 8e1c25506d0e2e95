// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <thread>

#include "httplib.h"

#include "beatcut/agent.hpp"
#include "beatcut/errors.hpp"

namespace beatcut::agent {

namespace {

std::string env_or(const char *name, std::string fallback) {
    const char *v = std::getenv(name);
    return v ? std::string(v) : fallback;
}

} // namespace

RemoteConfig RemoteConfig::from_env() {
    RemoteConfig c;
    c.endpoint = env_or("BEATCUT_ENDPOINT", "");
    c.api_key = env_or("BEATCUT_API_KEY", "");
    c.model = env_or("BEATCUT_MODEL", "");
    return c;
}

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
    const auto &url = config_.endpoint;
    const auto scheme = url.find("://");
    if (url.empty() || scheme == std::string::npos)
        throw ConfigError("remote backend needs an endpoint URL (BEATCUT_ENDPOINT)");
    if (url.compare(0, scheme, "http") != 0)
        throw ConfigError("only http:// endpoints are supported: " + url);
    const auto path_start = url.find('/', scheme + 3);
    host_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

RawReply RemoteBackend::complete(const AgentRequest &request, const std::string &prompt) {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

    const Payload body = {{"role", std::string(to_string(request.role))},
                          {"prompt", prompt},
                          {"schema", request.expected_schema},
                          {"model", config_.model}};
    const auto body_text = body.dump();

    std::string last_error = "no attempt made";
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        auto res = client.Post(path_, headers, body_text, "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        RawReply reply;
        auto parsed = Payload::parse(res->body, nullptr, false);
        if (parsed.is_discarded()) {
            // Not JSON at all; hand the text through so schema validation rejects it.
            reply.payload = res->body;
            return reply;
        }
        if (parsed.is_object() && parsed.contains("payload")) {
            reply.payload = parsed.at("payload");
            if (parsed.contains("tokens_in") && parsed.at("tokens_in").is_number_integer())
                reply.tokens_in = parsed.at("tokens_in").get<std::int64_t>();
            if (parsed.contains("tokens_out") && parsed.at("tokens_out").is_number_integer())
                reply.tokens_out = parsed.at("tokens_out").get<std::int64_t>();
        } else {
            reply.payload = std::move(parsed);
        }
        return reply;
    }
    throw AgentUnavailable(std::string(to_string(request.role)) + " backend at " + config_.endpoint +
                           " unavailable after " + std::to_string(config_.retries + 1) +
                           " attempts: " + last_error);
}

} // namespace beatcut::agent
