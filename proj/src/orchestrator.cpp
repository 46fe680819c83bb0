// SPDX-License-Identifier: Apache-2.0
#include "parallel.hpp"

#include <atris/orchestrator.hpp>
#include <atris/parser.hpp>
#include <atris/transcript.hpp>

namespace atris
{

auto to_string(AttemptMode mode) -> std::string_view
{
    return mode == AttemptMode::sequential ? "sequential" : "parallel";
}

auto attempt_mode_from_string(std::string_view text) -> AttemptMode
{
    if (text == "sequential")
        return AttemptMode::sequential;
    if (text == "parallel")
        return AttemptMode::parallel;
    throw ConfigError("mode: expected sequential or parallel, got '" + std::string(text) + "'");
}

void validate(const RunConfig& config)
{
    if (config.n_attempts < 0)
        throw ConfigError("n_attempts: must be >= 0");
    if (config.step_cap < 1)
        throw ConfigError("step_cap: must be >= 1");
    if (config.context_cap_tokens <= 0)
        throw ConfigError("context_cap_tokens: must be > 0");
    if (config.jobs < 1)
        throw ConfigError("jobs: must be >= 1");
    if (config.session.max_tokens < 1)
        throw ConfigError("max_tokens: must be >= 1");
    for (auto role: all_roles)
    {
        auto const t = config.session.temperature(role);
        if (!(t >= 0.0 && t <= 2.0))
            throw ConfigError("temperature." + std::string(to_string(role)) + ": must lie in [0, 2]");
    }
}

void to_json(Value& j, const CandidateLog& c)
{
    j = Value {{"step", c.step},         {"index", c.index},           {"output", c.output},
               {"canonical", c.canonical}, {"score", c.score},         {"evaluation", c.evaluation},
               {"chosen", c.chosen}};
    if (c.suggestion)
        j["suggestion"] = *c.suggestion;
}

void to_json(Value& j, const TurnResult& r)
{
    j = Value {{"attempts", r.attempts},
               {"summary", r.summary ? Value(*r.summary) : Value(nullptr)},
               {"final_trajectory", r.final_trajectory},
               {"final_step_capped", r.final_step_capped},
               {"ledger", r.ledger},
               {"discarded", r.discarded},
               {"incidents", r.incidents},
               {"candidates", r.candidates},
               {"fingerprint_before", r.fingerprint_before},
               {"fingerprint_after", r.fingerprint_after}};
}

auto attempt_tag(const TurnInput& input, int attempt) -> std::string
{
    return input.task_id + "/" + std::to_string(input.turn_id) + "/" + std::to_string(attempt);
}

auto final_tag(const TurnInput& input) -> std::string
{
    return input.task_id + "/" + std::to_string(input.turn_id) + "/final";
}

auto action_prefix(const PromptLibrary& prompts, const TurnInput& input, const Message& user_message)
    -> std::vector<Message>
{
    auto bindings = PromptBindings {};
    bindings.values["functions"] = render_tool_documents(input.tools);
    auto messages = prompts.render(prompt_action_system, bindings);
    messages.insert(messages.end(), input.base.begin(), input.base.end());
    messages.push_back(user_message);
    return messages;
}

auto step_messages(std::span<const Step> steps) -> std::vector<Message>
{
    auto out = std::vector<Message> {};
    for (const auto& s: steps)
    {
        out.push_back(Message {Role::assistant, format_calls(s.calls)});
        out.push_back(Message {Role::tool, format_payloads(s.outcome.payloads)});
    }
    return out;
}

auto drive_steps(Session& session, const TurnInput& input, const RunConfig& config, const Message& user_message,
                 const StepExecutor& execute) -> LoopResult
{
    auto const prefix = action_prefix(session.prompts(), input, user_message);
    auto result = LoopResult {};
    auto raw = std::vector<std::string> {};

    while (static_cast<int>(result.trajectory.steps.size()) < config.step_cap)
    {
        auto messages = prefix;
        for (std::size_t i = 0; i < raw.size(); ++i)
        {
            messages.push_back(Message {Role::assistant, raw[i]});
            messages.push_back(Message {Role::tool, format_payloads(result.trajectory.steps[i].outcome.payloads)});
        }
        auto const estimate = estimate_context(messages);
        if (estimate > static_cast<std::size_t>(config.context_cap_tokens))
        {
            session.incident("context_overflow", "estimated " + std::to_string(estimate) + " tokens exceeds cap "
                                                     + std::to_string(config.context_cap_tokens));
            result.overflow = true;
            return result;
        }

        auto text = std::string {};
        try
        {
            text = session.ask(AgentRole::action, std::move(messages), "action");
        }
        catch (const ContextOverflowError& e)
        {
            session.incident("context_overflow", e.what());
            result.overflow = true;
            return result;
        }

        auto output = ActionOutput {};
        try
        {
            output = parse_action_output(text);
        }
        catch (const ParseError& e)
        {
            session.incident("malformed_action", e.what());
            result.trajectory = close_turn(result.trajectory, text);
            return result;
        }

        if (!output.has_calls())
        {
            result.trajectory = close_turn(result.trajectory, output.reply);
            return result;
        }
        auto outcome = execute(output.calls, result.trajectory.steps);
        result.trajectory = append_step(result.trajectory, Step {std::move(output.calls), std::move(outcome)});
        raw.push_back(std::move(text));
    }
    result.step_capped = true;
    return result;
}

auto conversation_history(const TurnInput& input) -> std::string
{
    auto messages = input.base;
    messages.push_back(Message {Role::user, input.query});
    return render_history(messages);
}

auto run_attempt(Session& session, const AttemptContext& context, Simulator& sim,
                 std::span<const AttemptRecord> prior, int index) -> AttemptRecord
{
    auto const& config = context.config;
    if (config.mode == AttemptMode::parallel && !prior.empty())
        throw InvariantError("parallel attempts must not see other attempts");

    auto bindings = PromptBindings {};
    bindings.values["query"] = context.input.query;
    bindings.attempts = to_attempt_blocks(prior, config.inline_outcomes);
    bindings.include_eval = config.include_eval_in_context;
    auto const user = session.prompts().render(prompt_action_user, bindings).front();

    auto const& base = context.base_state;
    auto loop = drive_steps(session, context.input, config, user,
                            [&](std::span<const ToolCall> calls, std::span<const Step> history) {
                                return simulate_total(sim, session, calls, base, history, base.env_id);
                            });

    auto record = AttemptRecord {};
    record.index = index;
    record.trajectory = std::move(loop.trajectory);
    record.discarded = loop.overflow;
    record.step_capped = loop.step_capped;
    return record;
}

auto evaluate_attempt(Session& session, const AttemptContext& context, const AttemptRecord& attempt)
    -> EvaluationResult
{
    auto bindings = PromptBindings {};
    bindings.values["tool_documents"] = render_tool_documents(context.input.tools);
    bindings.values["history"] = conversation_history(context.input);
    bindings.values["simulation"] = render_trajectory(attempt);
    auto const text = session.ask(AgentRole::self_eval, session.prompts().render(prompt_self_eval, bindings),
                                  "self_eval");
    auto parsed = parse_evaluation_lenient(text);
    if (parsed.incident)
        session.incident("malformed_evaluation", *parsed.incident);
    return parsed.result;
}

auto summarize(Session& session, const AttemptContext& context, std::span<const AttemptRecord> attempts) -> Summary
{
    auto const& config = context.config;
    if (!config.use_summarizer)
    {
        auto const blocks = session.prompts().attempt_blocks(to_attempt_blocks(attempts, config.inline_outcomes),
                                                             config.include_eval_in_context);
        return Summary {blocks, "summarizer disabled; raw attempts passed through"};
    }

    auto bindings = PromptBindings {};
    bindings.values["tool_documents"] = render_tool_documents(context.input.tools);
    bindings.values["history"] = conversation_history(context.input);
    bindings.values["Simulation_history"] = render_simulation_history(attempts);
    auto const text = session.ask(AgentRole::summarizer, session.prompts().render(prompt_summarizer, bindings),
                                  "summarizer");
    try
    {
        return parse_summary(text);
    }
    catch (const SummaryMissingError& e)
    {
        session.incident("summary_missing", e.what());
        return Summary {text.empty() ? std::string("(no recommendation)") : text, ""};
    }
}

namespace
{

/// Evaluates a finished attempt in place; an evaluator overflow discards it.
void evaluateInPlace(Session& session, const AttemptContext& context, AttemptRecord& attempt)
{
    if (attempt.discarded)
        return;
    try
    {
        attempt.evaluation = evaluate_attempt(session, context, attempt);
    }
    catch (const ContextOverflowError& e)
    {
        session.incident("context_overflow", std::string("self_eval: ") + e.what());
        attempt.discarded = true;
    }
}

} // namespace

auto run_turn(const TurnInput& input, Environment& env, Simulator& sim, const RunConfig& config,
              ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult
{
    validate(config);
    auto result = TurnResult {};
    result.fingerprint_before = env.fingerprint();
    auto root = Session(backend, prompts, config.session, input.task_id + "/" + std::to_string(input.turn_id));
    auto const context = AttemptContext {input, config, env.snapshot()};
    auto const n = config.n_attempts;

    if (config.mode == AttemptMode::sequential)
    {
        for (int k = 1; k <= n; ++k)
        {
            auto session = root.fork(attempt_tag(input, k));
            auto attempt = run_attempt(session, context, sim, result.attempts, k);
            evaluateInPlace(session, context, attempt);
            root.absorb(session);
            result.attempts.push_back(std::move(attempt));
            auto const& last = result.attempts.back();
            if (last.discarded)
                break;
            if (config.early_stop && last.evaluation && last.evaluation->verdict == Verdict::pass)
                break;
        }
    }
    else if (n > 0)
    {
        auto sessions = std::vector<Session> {};
        for (int k = 1; k <= n; ++k)
            sessions.push_back(root.fork(attempt_tag(input, k)));
        auto attempts = std::vector<AttemptRecord>(static_cast<std::size_t>(n));
        detail::parallel_for(n, config.jobs, [&](int i) {
            auto worker = sim.fork();
            attempts[i] = run_attempt(sessions[i], context, *worker, {}, i + 1);
        });
        detail::parallel_for(n, config.jobs, [&](int i) { evaluateInPlace(sessions[i], context, attempts[i]); });
        for (const auto& s: sessions)
            root.absorb(s);
        result.attempts = std::move(attempts);
    }

    auto usable = std::vector<AttemptRecord> {};
    for (const auto& a: result.attempts)
    {
        if (!a.discarded)
            usable.push_back(a);
    }
    if (!usable.empty())
    {
        auto session = root.fork(input.task_id + "/" + std::to_string(input.turn_id) + "/summary");
        try
        {
            result.summary = summarize(session, context, usable);
        }
        catch (const ContextOverflowError& e)
        {
            session.incident("context_overflow", std::string("summarizer: ") + e.what());
            result.discarded = true;
        }
        root.absorb(session);
    }

    if (!result.discarded)
    {
        auto session = root.fork(final_tag(input));
        auto user = Message {Role::user, input.query};
        if (result.summary)
        {
            auto bindings = PromptBindings {};
            bindings.values["query"] = input.query;
            bindings.values["recommendation"] = result.summary->recommendation;
            user = prompts.render(prompt_final_execution, bindings).front();
        }
        auto loop = drive_steps(session, input, config, user,
                                [&](std::span<const ToolCall> calls, std::span<const Step>) {
                                    return env.execute(calls);
                                });
        root.absorb(session);
        result.final_trajectory = std::move(loop.trajectory);
        result.final_step_capped = loop.step_capped;
        result.discarded = loop.overflow;
    }

    result.ledger = root.ledger();
    result.incidents = root.incidents();
    result.prompts = root.prompt_log();
    result.fingerprint_after = env.fingerprint();
    return result;
}

auto commit_turn(const TurnInput& input, const TurnHistory& final_trajectory) -> std::vector<Message>
{
    auto messages = input.base;
    messages.push_back(Message {Role::user, input.query});
    auto steps = step_messages(final_trajectory.steps);
    messages.insert(messages.end(), steps.begin(), steps.end());
    if (final_trajectory.closing_reply)
        messages.push_back(Message {Role::assistant, *final_trajectory.closing_reply});
    return messages;
}

} // namespace atris
