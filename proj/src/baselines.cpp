// SPDX-License-Identifier: Apache-2.0
#include "parallel.hpp"

#include <atris/baselines.hpp>
#include <atris/transcript.hpp>

#include <functional>

namespace atris
{

void validate(const ScoredCandidate& candidate)
{
    if (candidate.score < 1 || candidate.score > 10)
        throw InvariantError("candidate score must lie in [1, 10]");
}

auto canonical_form(std::string_view output) -> std::string
{
    try
    {
        auto const parsed = parse_action_output(output);
        if (parsed.has_calls())
            return canonicalize_calls(parsed.calls);
        return "reply:" + parsed.reply;
    }
    catch (const ParseError&)
    {
        return "malformed:" + std::string(output);
    }
}

auto aggregate_bon(std::span<const ScoredCandidate> candidates) -> std::size_t
{
    if (candidates.empty())
        throw InvariantError("aggregate_bon needs at least one candidate");
    struct Group
    {
        std::string canonical;
        std::size_t first;
        long weight;
    };
    auto groups = std::vector<Group> {};
    for (std::size_t i = 0; i < candidates.size(); ++i)
    {
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const Group& g) { return g.canonical == candidates[i].canonical; });
        if (it == groups.end())
            groups.push_back({candidates[i].canonical, i, candidates[i].score});
        else
            it->weight += candidates[i].score;
    }
    auto best = groups.begin();
    for (auto it = groups.begin(); it != groups.end(); ++it)
    {
        if (it->weight > best->weight)
            best = it;
    }
    return best->first;
}

auto run_direct(const TurnInput& input, Environment& env, const RunConfig& config, ModelBackend& backend,
                const PromptLibrary& prompts) -> TurnResult
{
    auto direct = config;
    direct.n_attempts = 0;
    auto sim = PerfectSimulator(env);
    return run_turn(input, env, sim, direct, backend, prompts);
}

namespace
{

/// Produces the scored candidates of one step. Receives the root session, the
/// 1-based step number and the committed steps with their raw action texts.
using CandidateSource =
    std::function<std::vector<ScoredCandidate>(Session&, int, std::span<const Step>, std::span<const std::string>)>;

auto committedHistory(const TurnInput& input, std::span<const Step> steps) -> std::string
{
    auto text = conversation_history(input);
    if (!steps.empty())
        text += "\n" + render_steps(steps);
    return text;
}

auto stepMessages(const PromptLibrary& prompts, const TurnInput& input, const Message& user,
                  std::span<const Step> steps, std::span<const std::string> raw) -> std::vector<Message>
{
    auto messages = action_prefix(prompts, input, user);
    for (std::size_t i = 0; i < steps.size(); ++i)
    {
        messages.push_back(Message {Role::assistant, raw[i]});
        messages.push_back(Message {Role::tool, format_payloads(steps[i].outcome.payloads)});
    }
    return messages;
}

/// Asks the action agent; nullopt on context overflow.
auto askAction(Session& session, std::vector<Message> messages, const RunConfig& config)
    -> std::optional<std::string>
{
    auto const estimate = estimate_context(messages);
    if (estimate > static_cast<std::size_t>(config.context_cap_tokens))
    {
        session.incident("context_overflow", "estimated " + std::to_string(estimate) + " tokens exceeds cap "
                                                 + std::to_string(config.context_cap_tokens));
        return std::nullopt;
    }
    try
    {
        return session.ask(AgentRole::action, std::move(messages), "action");
    }
    catch (const ContextOverflowError& e)
    {
        session.incident("context_overflow", e.what());
        return std::nullopt;
    }
}

struct Overflow
{
};

auto scoreBindings(const TurnInput& input, std::span<const Step> steps, const std::string& candidate)
    -> PromptBindings
{
    auto b = PromptBindings {};
    b.values["tool_documents"] = render_tool_documents(input.tools);
    b.values["history"] = committedHistory(input, steps);
    b.values["simulation"] = candidate;
    return b;
}

auto stepTag(const TurnInput& input, int step, int candidate) -> std::string
{
    return input.task_id + "/" + std::to_string(input.turn_id) + "/s" + std::to_string(step) + "/c"
         + std::to_string(candidate);
}

auto runStepwise(const TurnInput& input, Environment& env, const RunConfig& config, ModelBackend& backend,
                 const PromptLibrary& prompts, const CandidateSource& source) -> TurnResult
{
    validate(config);
    if (config.n_attempts < 1)
        throw ConfigError("n_attempts: step-level baselines need N >= 1");
    auto result = TurnResult {};
    result.fingerprint_before = env.fingerprint();
    auto root = Session(backend, prompts, config.session, input.task_id + "/" + std::to_string(input.turn_id));
    auto trajectory = TurnHistory {};
    auto raw = std::vector<std::string> {};

    try
    {
        while (static_cast<int>(trajectory.steps.size()) < config.step_cap)
        {
            auto const step = static_cast<int>(trajectory.steps.size()) + 1;
            auto candidates = source(root, step, trajectory.steps, raw);
            auto const winner = aggregate_bon(candidates);
            for (std::size_t i = 0; i < candidates.size(); ++i)
            {
                auto const& c = candidates[i];
                result.candidates.push_back(CandidateLog {step, static_cast<int>(i) + 1, c.output, c.canonical,
                                                          c.score, c.rationale, c.suggestion, i == winner});
            }
            auto const& chosen = candidates[winner].output;
            auto output = ActionOutput {};
            try
            {
                output = parse_action_output(chosen);
            }
            catch (const ParseError& e)
            {
                root.incident("malformed_action", e.what());
                trajectory = close_turn(trajectory, chosen);
                break;
            }
            if (!output.has_calls())
            {
                trajectory = close_turn(trajectory, output.reply);
                break;
            }
            auto outcome = env.execute(output.calls);
            trajectory = append_step(trajectory, Step {std::move(output.calls), std::move(outcome)});
            raw.push_back(chosen);
        }
        result.final_step_capped = !trajectory.closed();
    }
    catch (const Overflow&)
    {
        result.discarded = true;
    }

    result.final_trajectory = std::move(trajectory);
    result.ledger = root.ledger();
    result.incidents = root.incidents();
    result.prompts = root.prompt_log();
    result.fingerprint_after = env.fingerprint();
    return result;
}

} // namespace

auto run_weighted_bon(const TurnInput& input, Environment& env, const RunConfig& config, ModelBackend& backend,
                      const PromptLibrary& prompts) -> TurnResult
{
    auto const user = Message {Role::user, input.query};
    auto source = [&](Session& root, int step, std::span<const Step> steps, std::span<const std::string> raw) {
        auto const n = config.n_attempts;
        auto sessions = std::vector<Session> {};
        for (int k = 1; k <= n; ++k)
            sessions.push_back(root.fork(stepTag(input, step, k)));
        auto candidates = std::vector<std::optional<ScoredCandidate>>(static_cast<std::size_t>(n));
        detail::parallel_for(n, config.jobs, [&](int i) {
            auto& session = sessions[i];
            auto text = askAction(session, stepMessages(prompts, input, user, steps, raw), config);
            if (!text)
                return;
            auto const reply = session.ask(AgentRole::scorer,
                                           prompts.render(prompt_bon_scorer, scoreBindings(input, steps, *text)),
                                           "scorer");
            auto parsed = parse_score(reply);
            if (parsed.incident)
                session.incident("unparseable_score", *parsed.incident);
            candidates[i] = ScoredCandidate {*text, canonical_form(*text), parsed.score, parsed.evaluation,
                                             std::nullopt};
        });
        for (const auto& s: sessions)
            root.absorb(s);
        auto out = std::vector<ScoredCandidate> {};
        for (auto& c: candidates)
        {
            if (!c)
                throw Overflow {};
            out.push_back(std::move(*c));
        }
        return out;
    };
    return runStepwise(input, env, config, backend, prompts, source);
}

auto run_sequential_revision(const TurnInput& input, Environment& env, const RunConfig& config,
                             ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult
{
    auto source = [&](Session& root, int step, std::span<const Step> steps, std::span<const std::string> raw) {
        auto out = std::vector<ScoredCandidate> {};
        for (int k = 1; k <= config.n_attempts; ++k)
        {
            auto session = root.fork(stepTag(input, step, k));
            auto bindings = PromptBindings {};
            bindings.values["query"] = input.query;
            for (const auto& c: out)
                bindings.attempts.push_back(AttemptBlock {c.output, c.rationale, c.suggestion.value_or("")});
            auto const user = prompts.render(prompt_action_user, bindings).front();
            auto text = askAction(session, stepMessages(prompts, input, user, steps, raw), config);
            if (!text)
            {
                root.absorb(session);
                throw Overflow {};
            }
            auto const reply = session.ask(AgentRole::self_eval,
                                           prompts.render(prompt_seqrev_eval, scoreBindings(input, steps, *text)),
                                           "seqrev_eval");
            auto parsed = parse_score(reply);
            if (parsed.incident)
                session.incident("unparseable_score", *parsed.incident);
            root.absorb(session);
            out.push_back(
                ScoredCandidate {*text, canonical_form(*text), parsed.score, parsed.evaluation, parsed.suggestion});
        }
        return out;
    };
    return runStepwise(input, env, config, backend, prompts, source);
}

} // namespace atris
