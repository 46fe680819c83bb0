// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <atris/orchestrator.hpp>
#include <atris/session.hpp>
#include <atris/simulator.hpp>

#include <gtest/gtest.h>

using namespace atris;
using atris::test::eval_text;
using atris::test::rule;
using atris::test::script;
using atris::test::summary_text;

namespace
{

constexpr auto goodCall = R"([transfer(src="A", dst="B", amount=30)])";
constexpr auto badCall = R"([transfer(src="B", dst="A", amount=30)])";
constexpr auto finalMarker = "Recommendation distilled";

/// Attempts succeed with probability p; the final execution follows the summary.
auto turnScript(double p) -> Value
{
    return Value {
        {"seed", 21},
        {"rules",
         {Value {{"role", "action"}, {"contains", {finalMarker, "GOOD PLAN"}}, {"sequence", {goodCall, "Paid."}}},
          Value {{"role", "action"}, {"contains", {finalMarker}}, {"sequence", {badCall, "Gave up."}}},
          Value {{"role", "action"}, {"p", p}, {"good", {goodCall, "Paid."}}, {"bad", {badCall, "Failed."}}},
          rule("self_eval", {"\"error\""}, eval_text(false, "Send from A instead.")),
          rule("self_eval", {}, eval_text(true, "None.")),
          rule("summarizer", {"<Result>1</Result>"}, summary_text("GOOD PLAN: transfer from A to B")),
          rule("summarizer", {}, summary_text("no attempt worked"))}}};
}

auto input() -> TurnInput
{
    auto env = make_vault();
    return TurnInput {"task", 1, env->tools(), {}, "Pay 30 from A to B."};
}

auto config(int n, bool early_stop = false) -> RunConfig
{
    auto c = RunConfig {};
    c.n_attempts = n;
    c.early_stop = early_stop;
    c.session.record_prompts = true;
    return c;
}

struct Fixture
{
    explicit Fixture(double p = 0.5): backend(script(turnScript(p))), env(make_vault()), sim(*env) {}

    auto run(const RunConfig& c, const TurnInput& in = input()) -> TurnResult
    {
        return run_turn(in, *env, sim, c, backend, test::prompts());
    }

    ScriptedBackend backend;
    std::unique_ptr<Environment> env;
    PerfectSimulator sim;
};

auto count(const std::string& text, const std::string& needle) -> std::size_t
{
    auto n = std::size_t {0};
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

auto promptsWithTag(const TurnResult& r, const std::string& tag, AgentRole role) -> std::vector<const PromptRecord*>
{
    auto out = std::vector<const PromptRecord*> {};
    for (const auto& p: r.prompts)
    {
        if (p.tag == tag && p.role == role)
            out.push_back(&p);
    }
    return out;
}

auto lastUserContent(const PromptRecord& p) -> std::string
{
    for (auto it = p.messages.rbegin(); it != p.messages.rend(); ++it)
    {
        if (it->role == Role::user)
            return it->content;
    }
    return {};
}

/// Forwards to an inner backend and records whether the real environment moved
/// before the final execution's first request.
class WatchingBackend final : public ModelBackend
{
  public:
    WatchingBackend(ModelBackend& inner, const Environment& env): _inner(inner), _env(env), _start(env.fingerprint()) {}

    auto send(const ChatRequest& request, AgentRole role) -> ChatResponse override
    {
        if (!request.tag.ends_with("/final") && _env.fingerprint() != _start)
            moved_early = true;
        return _inner.send(request, role);
    }

    bool moved_early = false;

  private:
    ModelBackend& _inner;
    const Environment& _env;
    std::string _start;
};

} // namespace

TEST(Turn, EarlyStopAfterFirstPass)
{
    auto f = Fixture(1.0);
    auto const r = f.run(config(5, true));
    ASSERT_EQ(r.attempts.size(), 1u);
    EXPECT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, 1);
    EXPECT_EQ(r.ledger.at(AgentRole::summarizer).api_calls, 1);
    EXPECT_EQ(f.env->snapshot().blob["accounts"]["B"], 30);
}

TEST(Turn, WithoutEarlyStopEveryAttemptRuns)
{
    auto f = Fixture(0.5);
    auto const r = f.run(config(5));
    ASSERT_EQ(r.attempts.size(), 5u);
    EXPECT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, 5);
    EXPECT_EQ(r.ledger.at(AgentRole::summarizer).api_calls, 1);
    // two action steps per attempt plus two for the final execution
    EXPECT_EQ(r.ledger.at(AgentRole::action).api_calls, 12);
    EXPECT_EQ(r.ledger.total().api_calls, 18);
    for (int k = 0; k < 5; ++k)
        EXPECT_EQ(r.attempts[static_cast<std::size_t>(k)].index, k + 1);
}

TEST(Turn, ZeroBudgetExecutesDirectly)
{
    auto f = Fixture(0.5);
    auto const r = f.run(config(0));
    EXPECT_TRUE(r.attempts.empty());
    EXPECT_FALSE(r.summary.has_value());
    EXPECT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, 0);
    auto const finals = promptsWithTag(r, "task/1/final", AgentRole::action);
    ASSERT_FALSE(finals.empty());
    EXPECT_EQ(lastUserContent(*finals.front()), "Pay 30 from A to B.");
}

TEST(Turn, RealEnvironmentOnlyTouchedByFinalExecution)
{
    auto f = Fixture(0.5);
    auto watch = WatchingBackend(f.backend, *f.env);
    auto const r = run_turn(input(), *f.env, f.sim, config(5), watch, test::prompts());
    EXPECT_FALSE(watch.moved_early);
    EXPECT_NE(r.fingerprint_before, r.fingerprint_after);
    EXPECT_EQ(r.fingerprint_after, f.env->fingerprint());
}

TEST(Turn, SequentialAttemptsSeeEarlierAttempts)
{
    auto f = Fixture(0.5);
    auto const r = f.run(config(4));
    for (int k = 1; k <= 4; ++k)
    {
        auto const first = promptsWithTag(r, "task/1/" + std::to_string(k), AgentRole::action);
        ASSERT_FALSE(first.empty());
        auto const user = lastUserContent(*first.front());
        EXPECT_EQ(count(user, "<Attempt>"), static_cast<std::size_t>(k - 1)) << user;
        EXPECT_EQ(count(user, "<Evaluation>"), static_cast<std::size_t>(k - 1));
    }
}

TEST(Turn, ParallelAttemptsSeeNothing)
{
    auto f = Fixture(0.5);
    auto c = config(4);
    c.mode = AttemptMode::parallel;
    c.jobs = 3;
    auto const r = f.run(c);
    ASSERT_EQ(r.attempts.size(), 4u);
    EXPECT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, 4);
    for (int k = 1; k <= 4; ++k)
    {
        for (const auto* p: promptsWithTag(r, "task/1/" + std::to_string(k), AgentRole::action))
            EXPECT_EQ(lastUserContent(*p).find("<Attempt>"), std::string::npos);
    }
}

TEST(Turn, ParallelModeRejectsPriorAttempts)
{
    auto f = Fixture(0.5);
    auto c = config(2);
    c.mode = AttemptMode::parallel;
    auto const in = input();
    auto const ctx = AttemptContext {in, c, f.env->snapshot()};
    auto session = Session(f.backend, test::prompts(), c.session, "task/1/2");
    auto const prior = std::vector<AttemptRecord> {AttemptRecord {}};
    EXPECT_THROW((void)run_attempt(session, ctx, f.sim, prior, 2), InvariantError);
}

TEST(Turn, WithoutEvalHidesEvaluationsFromActionAgent)
{
    auto f = Fixture(0.5);
    auto c = config(3);
    c.include_eval_in_context = false;
    auto const r = f.run(c);
    for (const auto& p: r.prompts)
    {
        if (p.role == AgentRole::action)
            EXPECT_EQ(lastUserContent(p).find("<Evaluation>"), std::string::npos);
    }
    EXPECT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, 3);
}

TEST(Turn, WithoutSummarizerPassesRawAttempts)
{
    auto f = Fixture(0.5);
    auto c = config(3);
    c.use_summarizer = false;
    auto const r = f.run(c);
    EXPECT_EQ(r.ledger.at(AgentRole::summarizer).api_calls, 0);
    auto const finals = promptsWithTag(r, "task/1/final", AgentRole::action);
    ASSERT_FALSE(finals.empty());
    auto const user = lastUserContent(*finals.front());
    EXPECT_EQ(count(user, "<Attempt>"), 3u);
    EXPECT_NE(user.find(finalMarker), std::string::npos);
}

TEST(Turn, StepCapStopsTrajectory)
{
    auto backend = ScriptedBackend(script({{"rules", {rule("action", {}, R"([balance(account="A")])")}}}));
    auto env = make_vault();
    auto sim = PerfectSimulator(*env);
    auto c = config(0);
    c.step_cap = 3;
    auto const r = run_turn(input(), *env, sim, c, backend, test::prompts());
    EXPECT_TRUE(r.final_step_capped);
    EXPECT_EQ(r.final_trajectory.steps.size(), 3u);
    EXPECT_FALSE(r.final_trajectory.closed());
}

TEST(Turn, ContextCapDiscardsTurn)
{
    auto f = Fixture(0.5);
    auto c = config(2);
    c.context_cap_tokens = 10;
    auto const r = f.run(c);
    ASSERT_EQ(r.attempts.size(), 1u);
    EXPECT_TRUE(r.attempts[0].discarded);
    EXPECT_TRUE(r.discarded);
    EXPECT_EQ(r.ledger.total().api_calls, 0);
    EXPECT_EQ(r.fingerprint_before, r.fingerprint_after);
}

TEST(Turn, MalformedActionClosesWithRawText)
{
    auto backend = ScriptedBackend(script({{"rules", {rule("action", {}, "[transfer(src=")}}}));
    auto env = make_vault();
    auto sim = PerfectSimulator(*env);
    auto const r = run_turn(input(), *env, sim, config(0), backend, test::prompts());
    EXPECT_EQ(r.final_trajectory.closing_reply, std::optional<std::string>("[transfer(src="));
    ASSERT_EQ(r.incidents.size(), 1u);
    EXPECT_EQ(r.incidents[0].kind, "malformed_action");
}

TEST(Turn, CommitTurnLayout)
{
    auto f = Fixture(1.0);
    auto const in = input();
    auto const r = f.run(config(0), in);
    auto const msgs = commit_turn(in, r.final_trajectory);
    ASSERT_EQ(msgs.size(), 4u);
    EXPECT_EQ(msgs[0], (Message {Role::user, "Pay 30 from A to B."}));
    EXPECT_EQ(msgs[1].role, Role::assistant);
    EXPECT_EQ(msgs[2].role, Role::tool);
    EXPECT_EQ(msgs[3].role, Role::assistant);
}

TEST(Turn, ConfigValidation)
{
    auto c = RunConfig {};
    c.n_attempts = -1;
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig {};
    c.step_cap = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = RunConfig {};
    c.session.temperatures[0] = 3.0;
    EXPECT_THROW(validate(c), ConfigError);
    EXPECT_EQ(attempt_mode_from_string("parallel"), AttemptMode::parallel);
    EXPECT_THROW((void)attempt_mode_from_string("both"), ConfigError);
}

// Per-role counters add up to the totals, and self_eval equals the attempts run.
TEST(TurnProperty, LedgerConsistency)
{
    auto g = test::Gen(77);
    for (int i = 0; i < 60; ++i)
    {
        auto f = Fixture(g.real(0.0, 1.0));
        auto c = config(static_cast<int>(g.uniform(6)), g.chance(0.5));
        c.mode = g.chance(0.5) ? AttemptMode::parallel : AttemptMode::sequential;
        c.use_summarizer = g.chance(0.7);
        auto in = input();
        in.task_id = "t" + std::to_string(i);
        auto const r = f.run(c, in);
        auto sum = RoleUsage {};
        for (auto role: all_roles)
            sum += r.ledger.at(role);
        ASSERT_EQ(sum, r.ledger.total());
        ASSERT_EQ(r.ledger.at(AgentRole::self_eval).api_calls, static_cast<std::int64_t>(r.attempts.size()));
        if (!c.early_stop || c.mode == AttemptMode::parallel)
            ASSERT_EQ(r.attempts.size(), static_cast<std::size_t>(c.n_attempts));
        ASSERT_EQ(r.prompts.size(), static_cast<std::size_t>(r.ledger.total().api_calls));
    }
}
