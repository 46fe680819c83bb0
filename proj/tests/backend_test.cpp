// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <atris/backend.hpp>
#include <atris/scripted_backend.hpp>

#include <gtest/gtest.h>

#include <thread>

using namespace atris;
using atris::test::Gen;
using atris::test::rule;
using atris::test::script;

namespace
{

auto request(std::vector<Message> messages, std::string tag = "t") -> ChatRequest
{
    auto r = ChatRequest {};
    r.messages = std::move(messages);
    r.tag = std::move(tag);
    return r;
}

auto ask(std::string text, std::string tag = "t") -> ChatRequest
{
    return request({Message {Role::user, std::move(text)}}, std::move(tag));
}

auto randomLedger(Gen& g) -> UsageLedger
{
    auto l = UsageLedger {};
    for (auto role: all_roles)
        l.add(role, RoleUsage {static_cast<std::int64_t>(g.uniform(50)), static_cast<std::int64_t>(g.uniform(5000)),
                               static_cast<std::int64_t>(g.uniform(5000))});
    return l;
}

} // namespace

TEST(Roles, NamesAndTemperatures)
{
    for (auto role: all_roles)
        EXPECT_EQ(agent_role_from_string(to_string(role)), role);
    EXPECT_THROW((void)agent_role_from_string("critic"), Error);
    EXPECT_EQ(default_temperature(AgentRole::action), 1.0);
    EXPECT_EQ(default_temperature(AgentRole::self_eval), 0.01);
    EXPECT_EQ(default_temperature(AgentRole::summarizer), 0.01);
    EXPECT_EQ(default_temperature(AgentRole::simulator), 0.01);
    EXPECT_EQ(default_temperature(AgentRole::scorer), 0.01);
}

TEST(Ledger, HandSummedMerge)
{
    auto a = UsageLedger {};
    a.add(AgentRole::action, RoleUsage {3, 120, 900});
    auto b = UsageLedger {};
    b.add(AgentRole::action, RoleUsage {2, 80, 600});
    auto const m = merge_ledgers(a, b);
    EXPECT_EQ(m.at(AgentRole::action), (RoleUsage {5, 200, 1500}));
    EXPECT_EQ(m.total(), (RoleUsage {5, 200, 1500}));
}

// Merge is commutative and associative with the empty ledger as identity; totals are role sums.
TEST(LedgerProperty, MergeLaws)
{
    auto g = Gen(31);
    for (int i = 0; i < 500; ++i)
    {
        auto const a = randomLedger(g);
        auto const b = randomLedger(g);
        auto const c = randomLedger(g);
        ASSERT_EQ(merge_ledgers(a, b), merge_ledgers(b, a));
        ASSERT_EQ(merge_ledgers(merge_ledgers(a, b), c), merge_ledgers(a, merge_ledgers(b, c)));
        ASSERT_EQ(merge_ledgers(a, UsageLedger {}), a);
        auto sum = RoleUsage {};
        for (auto role: all_roles)
            sum += a.at(role);
        ASSERT_EQ(a.total(), sum);
        ASSERT_EQ(Value(a).get<UsageLedger>(), a);
    }
}

TEST(Ledger, AccumulatorAcrossThreads)
{
    auto acc = LedgerAccumulator {};
    auto one = UsageLedger {};
    one.record(AgentRole::simulator, Usage {10, 1});
    auto workers = std::vector<std::thread> {};
    for (int t = 0; t < 8; ++t)
        workers.emplace_back([&] {
            for (int i = 0; i < 1000; ++i)
                acc.add(one);
        });
    for (auto& w: workers)
        w.join();
    EXPECT_EQ(acc.snapshot().at(AgentRole::simulator), (RoleUsage {8000, 80000, 8000}));
}

TEST(Request, Validation)
{
    EXPECT_THROW(validate(request({})), InvariantError);
    EXPECT_THROW(validate(request({Message {Role::assistant, "x"}})), InvariantError);
    auto r = ask("hi");
    r.temperature = 2.5;
    EXPECT_THROW(validate(r), InvariantError);
    r.temperature = 0.0;
    r.max_tokens = 0;
    EXPECT_THROW(validate(r), InvariantError);
    r.max_tokens = 1;
    EXPECT_NO_THROW(validate(r));
}

TEST(Request, FingerprintCoversRoleAndMessages)
{
    auto const a = ask("hi");
    auto b = ask("hi", "other-tag");
    EXPECT_EQ(request_fingerprint(a, AgentRole::action), request_fingerprint(b, AgentRole::action));
    EXPECT_NE(request_fingerprint(a, AgentRole::action), request_fingerprint(a, AgentRole::scorer));
    b.messages[0].content = "hi!";
    EXPECT_NE(request_fingerprint(a, AgentRole::action), request_fingerprint(b, AgentRole::action));
    auto c = request({Message {Role::system, "hi"}});
    EXPECT_NE(request_fingerprint(a, AgentRole::action), request_fingerprint(c, AgentRole::action));
}

TEST(Scripted, CompleteRecordsOneCall)
{
    auto backend = ScriptedBackend(script({{"rules", {rule("action", {"hi"}, "hello")}}}));
    auto ledger = UsageLedger {};
    auto const r = complete(backend, ask("hi"), AgentRole::action, ledger);
    EXPECT_EQ(r.text, "hello");
    EXPECT_EQ(ledger.at(AgentRole::action).api_calls, 1);
    EXPECT_EQ(ledger.total().api_calls, 1);
}

TEST(Scripted, FirstMatchingRuleWins)
{
    auto backend = ScriptedBackend(script({{"rules",
                                            {rule("scorer", {}, "scored"),
                                             Value {{"contains", {"a"}}, {"excludes", {"b"}}, {"text", "only-a"}},
                                             rule("action", {"a"}, "a-and-b"),
                                             Value {{"regex", "id=([0-9]+)"}, {"text", "got {{1}}"}}}}}));
    EXPECT_EQ(backend.send(ask("a"), AgentRole::action).text, "only-a");
    EXPECT_EQ(backend.send(ask("a b"), AgentRole::action).text, "a-and-b");
    EXPECT_EQ(backend.send(ask("a"), AgentRole::scorer).text, "scored");
    EXPECT_EQ(backend.send(ask("id=42"), AgentRole::summarizer).text, "got 42");
    EXPECT_THROW((void)backend.send(ask("zzz"), AgentRole::summarizer), NoMatchingRuleError);
}

TEST(Scripted, SequenceFollowsTrajectoryStep)
{
    auto backend =
        ScriptedBackend(script({{"rules", {Value {{"role", "action"}, {"sequence", {"one", "two", "three"}}}}}}));
    auto msgs = std::vector<Message> {{Role::user, "go"}};
    EXPECT_EQ(trajectory_step(msgs), 0);
    EXPECT_EQ(backend.send(request(msgs), AgentRole::action).text, "one");
    msgs.push_back({Role::assistant, "one"});
    msgs.push_back({Role::tool, "[{}]"});
    EXPECT_EQ(trajectory_step(msgs), 1);
    EXPECT_EQ(backend.send(request(msgs), AgentRole::action).text, "two");
    msgs.push_back({Role::user, "again"});
    EXPECT_EQ(trajectory_step(msgs), 0);
}

TEST(Scripted, StepMatcherAndUsageOverride)
{
    auto backend = ScriptedBackend(script({{"rules",
                                            {Value {{"step", 1}, {"text", "second"}},
                                             Value {{"text", "first"}, {"usage", {{"prompt", 5}, {"completion", 2}}}}}}}));
    auto const r = backend.send(ask("x"), AgentRole::action);
    EXPECT_EQ(r.text, "first");
    EXPECT_EQ(r.usage, (Usage {5, 2}));
    auto const s = backend.send(request({{Role::user, "x"}, {Role::assistant, "first"}}), AgentRole::action);
    EXPECT_EQ(s.text, "second");
}

TEST(Scripted, StochasticFrequencyMatchesProbability)
{
    auto backend = ScriptedBackend(script(
        {{"seed", 7}, {"rules", {Value {{"role", "action"}, {"p", 0.3}, {"good", {"G"}}, {"bad", {"B"}}}}}}));
    auto good = 0;
    for (int i = 0; i < 10000; ++i)
        good += backend.send(ask("task", "task/" + std::to_string(i)), AgentRole::action).text == "G";
    EXPECT_NEAR(good / 10000.0, 0.3, 0.01);
}

TEST(Scripted, StochasticTrajectoryStaysOnItsBranch)
{
    auto backend = ScriptedBackend(script(
        {{"seed", 3}, {"rules", {Value {{"p", 0.5}, {"good", {"g0", "g1", "g2"}}, {"bad", {"b0", "b1", "b2"}}}}}}));
    for (int i = 0; i < 200; ++i)
    {
        auto msgs = std::vector<Message> {{Role::user, "go"}};
        auto const first = backend.send(request(msgs, std::to_string(i)), AgentRole::action).text;
        auto const prefix = first.substr(0, 1);
        msgs.push_back({Role::assistant, first});
        for (int step = 1; step < 3; ++step)
        {
            msgs.push_back({Role::tool, "[{}]"});
            auto const next = backend.send(request(msgs, std::to_string(i)), AgentRole::action).text;
            ASSERT_EQ(next, prefix + std::to_string(step));
            msgs.push_back({Role::assistant, next});
        }
    }
}

TEST(Scripted, SameSeedSameDraws)
{
    auto const s = script({{"rules", {Value {{"p", 0.5}, {"good", {"G"}}, {"bad", {"B"}}}}}});
    auto a = ScriptedBackend(s, 99);
    auto b = ScriptedBackend(s, 99);
    auto c = ScriptedBackend(s, 100);
    auto differs = false;
    for (int i = 0; i < 64; ++i)
    {
        auto const tag = "x/" + std::to_string(i % 4);
        auto const ta = a.send(ask("q", tag), AgentRole::action).text;
        ASSERT_EQ(ta, b.send(ask("q", tag), AgentRole::action).text);
        differs = differs || ta != c.send(ask("q", tag), AgentRole::action).text;
    }
    EXPECT_TRUE(differs);
}

TEST(Scripted, ScriptValidation)
{
    EXPECT_THROW((void)script({{"rules", {Value {{"role", "action"}}}}}), ConfigError);
    EXPECT_THROW((void)script({{"rules", {Value {{"p", 1.5}, {"good", {"g"}}, {"bad", {"b"}}}}}}), ConfigError);
    EXPECT_THROW((void)script({{"rules", {Value {{"p", 0.5}, {"good", Value::array()}, {"bad", {"b"}}}}}}), ConfigError);
    EXPECT_THROW((void)script({{"rules", {Value {{"role", "critic"}, {"text", "x"}}}}}), ConfigError);
    EXPECT_THROW(ScriptedBackend(script({{"rules", {Value {{"regex", "("}, {"text", "x"}}}}})), ConfigError);
}
