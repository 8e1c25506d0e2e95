// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "beatcut/agent.hpp"
#include "beatcut/errors.hpp"
#include "beatcut/pipeline.hpp"

using namespace beatcut;
using namespace beatcut::agent;

namespace {

// Replies with a fixed sequence of payloads, one per call.
class SequenceBackend final : public Backend {
  public:
    explicit SequenceBackend(std::vector<Payload> replies) : replies_(std::move(replies)) {}
    RawReply complete(const AgentRequest &, const std::string &) override {
        const auto p = replies_.at(std::min(calls, replies_.size() - 1));
        ++calls;
        return RawReply{p, 10, 5};
    }
    [[nodiscard]] std::string name() const override { return "sequence"; }
    std::size_t calls = 0;

  private:
    std::vector<Payload> replies_;
};

class DownBackend final : public Backend {
  public:
    RawReply complete(const AgentRequest &, const std::string &) override { throw AgentUnavailable("offline"); }
    [[nodiscard]] std::string name() const override { return "down"; }
};

AgentRequest plan_request() {
    Payload seg = {{"index", 0}, {"emotion", "joyful"}, {"pace", "mid"}, {"beats", 8}, {"tempo_bpm", 120.0}};
    return AgentRequest{Role::plan,
                        Payload{{"intent", "cheerful beach run"},
                                {"intent_level", "general"},
                                {"task_family", "on_beat"},
                                {"segments", Payload::array({seg})}},
                        "instructions"};
}

TokenLedger ledger_of(std::int64_t in, std::int64_t out) {
    TokenLedger l;
    l.record(Role::plan, in, out);
    return l;
}

} // namespace

TEST(Tokens, WhitespaceWords) {
    EXPECT_EQ(count_tokens(""), 0);
    EXPECT_EQ(count_tokens("a b  c"), 3);
    EXPECT_EQ(count_tokens("  \n\t "), 0);
    std::string big;
    for (int i = 0; i < 1000; ++i) big += "w ";
    EXPECT_EQ(count_tokens(big), 1000);
}

TEST(Efficiency, RatioOfTotals) {
    const auto full = ledger_of(600, 400);
    EXPECT_DOUBLE_EQ(efficiency_report(full, full), 1.0);
    EXPECT_DOUBLE_EQ(efficiency_report(full, ledger_of(300, 200)), 2.0);
    EXPECT_DOUBLE_EQ(efficiency_report(ledger_of(450, 300), full), 0.75);
    EXPECT_THROW((void)efficiency_report(TokenLedger{}, full), ReportError);
    EXPECT_THROW((void)efficiency_report(full, TokenLedger{}), ReportError);
}

TEST(Efficiency, AggregateBothWays) {
    const std::vector<std::pair<std::int64_t, std::int64_t>> runs = {{100, 50}, {100, 200}};
    const auto a = efficiency_aggregate(runs);
    EXPECT_DOUBLE_EQ(a.mean_of_ratios, (2.0 + 0.5) / 2);
    EXPECT_DOUBLE_EQ(a.pooled, 200.0 / 250.0);
    EXPECT_THROW((void)efficiency_aggregate({}), ReportError);
}

TEST(Roles, ClosedSet) {
    for (auto r : kAllRoles) EXPECT_EQ(parse_role(to_string(r)), r);
    EXPECT_THROW((void)parse_role("composer"), ConfigError);
}

TEST(Scripted, DeterministicForSeed) {
    auto a = make_scripted_backend(7);
    auto b = make_scripted_backend(7);
    TokenLedger la;
    TokenLedger lb;
    const auto ra = invoke(plan_request(), *a, la);
    const auto rb = invoke(plan_request(), *b, lb);
    EXPECT_EQ(ra, rb);
    EXPECT_EQ(la.total(), lb.total());
}

TEST(Scripted, UnregisteredRoleIsConfigError) {
    ScriptedBackend empty(1);
    TokenLedger l;
    EXPECT_THROW((void)invoke(plan_request(), empty, l), ConfigError);
}

TEST(Invoke, UnknownSchemaIsConfigError) {
    SequenceBackend be(std::vector<Payload>{Payload::object()});
    TokenLedger l;
    EXPECT_THROW((void)invoke(AgentRequest{Role::plan, {}, "no_such_schema"}, be, l), ConfigError);
    EXPECT_EQ(be.calls, 0u);
}

TEST(Invoke, RepairOnceThenSucceed) {
    SequenceBackend be(std::vector<Payload>{Payload{{"wrong", 1}}, Payload{{"instructions", {"a", "b"}}}});
    TokenLedger l;
    const auto r = invoke(plan_request(), be, l);
    EXPECT_EQ(be.calls, 2u);
    EXPECT_EQ(r.tokens_in, 20);
    EXPECT_EQ(r.tokens_out, 10);
    EXPECT_EQ(l.total(), 30);
}

TEST(Invoke, InvalidTwiceIsProtocolErrorAndStillBooked) {
    SequenceBackend be(std::vector<Payload>{Payload{{"instructions", 3}}});
    TokenLedger l;
    EXPECT_THROW((void)invoke(plan_request(), be, l), AgentProtocolError);
    EXPECT_EQ(be.calls, 2u);
    EXPECT_EQ(l.total(), 30);
}

TEST(Invoke, UnavailablePassesThrough) {
    DownBackend be;
    TokenLedger l;
    EXPECT_THROW((void)invoke(plan_request(), be, l), AgentUnavailable);
    EXPECT_EQ(l.total(), 0);
}

TEST(Schema, Checks) {
    const auto &reg = SchemaRegistry::builtin();
    EXPECT_FALSE(reg.check("instructions", Payload{{"instructions", {"x"}}}));
    EXPECT_TRUE(reg.check("instructions", Payload{{"instructions", {1, 2}}}));
    EXPECT_TRUE(reg.check("instructions", Payload::object()));
}

// Ledger conservation: totals equal the sum over roles, also under concurrency.
TEST(Ledger, ConservationProperty) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        TokenLedger l;
        std::int64_t in = 0;
        std::int64_t out = 0;
        std::vector<std::thread> pool;
        std::vector<std::vector<std::tuple<Role, int, int>>> work(4);
        for (auto &w : work) {
            for (int k = 0; k < 50; ++k) {
                const Role r = kAllRoles[rng() % std::size(kAllRoles)];
                const int a = static_cast<int>(rng() % 100);
                const int b = static_cast<int>(rng() % 100);
                w.emplace_back(r, a, b);
                in += a;
                out += b;
            }
        }
        for (auto &w : work)
            pool.emplace_back([&l, &w] {
                for (auto [r, a, b] : w) l.record(r, a, b);
            });
        for (auto &t : pool) t.join();
        EXPECT_EQ(l.total_in(), in);
        EXPECT_EQ(l.total_out(), out);
        std::int64_t sum = 0;
        std::int64_t calls = 0;
        for (const auto &[r, t] : l.per_role()) {
            sum += t.tokens_in + t.tokens_out;
            calls += t.calls;
        }
        EXPECT_EQ(sum, l.total());
        EXPECT_EQ(calls, 200);
        const TokenLedger copy = l;
        EXPECT_EQ(copy.per_role(), l.per_role());
    }
}
