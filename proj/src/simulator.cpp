// SPDX-License-Identifier: Apache-2.0
#include <atris/hash.hpp>
#include <atris/parser.hpp>
#include <atris/simulator.hpp>

namespace atris
{

auto to_string(SimulatorKind kind) -> std::string_view
{
    switch (kind)
    {
        case SimulatorKind::perfect: return "perfect";
        case SimulatorKind::learned: return "learned";
        case SimulatorKind::scripted: return "scripted";
    }
    return "perfect";
}

auto simulator_kind_from_string(std::string_view text) -> SimulatorKind
{
    for (auto kind: {SimulatorKind::perfect, SimulatorKind::learned, SimulatorKind::scripted})
    {
        if (to_string(kind) == text)
            return kind;
    }
    throw ConfigError("unknown simulator kind '" + std::string(text) + "'");
}

auto heuristic_types(std::string_view env_id, std::span<const ToolCall> calls, std::span<const Value> payloads)
    -> std::vector<OutcomeTypeKey>
{
    auto types = std::vector<OutcomeTypeKey> {};
    for (std::size_t i = 0; i < calls.size(); ++i)
    {
        auto const failed = i < payloads.size() && is_error_payload(payloads[i]);
        types.push_back({std::string(env_id) + "." + calls[i].tool,
                         std::string(failed ? other_failure_label : success_label)});
    }
    return types;
}

auto simulate_total(Simulator& sim, Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                    std::span<const Step> history, std::string_view env_id) -> ToolOutcome
{
    try
    {
        return sim.simulate(session, calls, base, history);
    }
    catch (const SimulationFailed& e)
    {
        session.incident("simulation_failed", e.what());
        auto payloads = std::vector<Value>(calls.size(), error_payload(std::string("simulation failed: ") + e.what()));
        auto types = heuristic_types(env_id, calls, payloads);
        return make_outcome(std::move(payloads), std::move(types));
    }
}

PerfectSimulator::PerfectSimulator(const Environment& prototype): _prototype(prototype.clone()) {}

auto PerfectSimulator::simulate(Session&, std::span<const ToolCall> calls, const EnvironmentState& base,
                                std::span<const Step> history) -> ToolOutcome
{
    auto shadow = _prototype->clone();
    shadow->restore(base);
    for (const auto& step: history)
        static_cast<void>(shadow->execute(step.calls));
    return shadow->execute(calls);
}

auto PerfectSimulator::fork() const -> std::unique_ptr<Simulator>
{
    return std::make_unique<PerfectSimulator>(*_prototype);
}

LearnedSimulator::LearnedSimulator(std::string env_id, std::vector<ToolSpec> tools):
    _envId(std::move(env_id)), _tools(std::move(tools))
{
}

auto simulator_bindings(std::span<const ToolSpec> tools, const EnvironmentState& base, std::span<const Step> history,
                        std::span<const ToolCall> calls) -> PromptBindings
{
    auto b = PromptBindings {};
    b.values["tool_documents"] = render_tool_documents(tools);
    b.values["init_config"] = base.blob.dump();
    b.values["history"] = render_steps(history);
    b.values["action"] = format_calls(calls);
    return b;
}

auto LearnedSimulator::simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                                std::span<const Step> history) -> ToolOutcome
{
    auto const messages = session.prompts().render(prompt_simulator, simulator_bindings(_tools, base, history, calls));
    auto text = std::string {};
    try
    {
        text = session.ask(AgentRole::simulator, messages, "simulate");
    }
    catch (const TransportError& e)
    {
        throw SimulationFailed(std::string("transport: ") + e.what());
    }
    catch (const ContextOverflowError& e)
    {
        throw SimulationFailed(std::string("context overflow: ") + e.what());
    }
    try
    {
        auto output = parse_simulator_output(text, calls.size());
        if (output.repair)
            session.incident("simulator_output_repaired", *output.repair);
        auto types = heuristic_types(_envId, calls, output.payloads);
        return make_outcome(std::move(output.payloads), std::move(types));
    }
    catch (const Error& e)
    {
        throw SimulationFailed(std::string("unparseable simulator output: ") + e.what());
    }
}

auto LearnedSimulator::fork() const -> std::unique_ptr<Simulator>
{
    return std::make_unique<LearnedSimulator>(_envId, _tools);
}

ScriptedSimulator::ScriptedSimulator(std::string env_id, std::vector<Fault> faults,
                                     std::map<std::string, std::vector<Value>> table,
                                     std::unique_ptr<Simulator> fallback, std::uint64_t seed):
    _envId(std::move(env_id)),
    _faults(std::move(faults)),
    _table(std::move(table)),
    _fallback(std::move(fallback)),
    _seed(seed)
{
}

auto ScriptedSimulator::simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                                 std::span<const Step> history) -> ToolOutcome
{
    auto const step = static_cast<int>(history.size()) + 1;
    auto const canonical = canonicalize_calls(calls);
    for (const auto& fault: _faults)
    {
        if (fault.step != step)
            continue;
        if (fault.probability < 1.0)
        {
            auto const h = splitmix64(splitmix64(_seed ^ fnv1a64(canonical)) ^ static_cast<std::uint64_t>(step));
            if (static_cast<double>(h >> 11) * 0x1.0p-53 >= fault.probability)
                continue;
        }
        auto payloads = std::vector<Value>(calls.size(), error_payload(fault.message));
        auto types = std::vector<OutcomeTypeKey> {};
        for (const auto& c: calls)
            types.push_back({_envId + "." + c.tool, fault.label});
        return make_outcome(std::move(payloads), std::move(types));
    }
    if (auto it = _table.find(canonical); it != _table.end())
    {
        auto payloads = it->second;
        if (payloads.size() != calls.size())
            throw SimulationFailed("scripted outcome for " + canonical + " has " + std::to_string(payloads.size())
                                   + " payloads for " + std::to_string(calls.size()) + " calls");
        auto types = heuristic_types(_envId, calls, payloads);
        return make_outcome(std::move(payloads), std::move(types));
    }
    if (_fallback)
        return _fallback->simulate(session, calls, base, history);
    throw SimulationFailed("no scripted outcome for " + canonical);
}

auto ScriptedSimulator::fork() const -> std::unique_ptr<Simulator>
{
    return std::make_unique<ScriptedSimulator>(_envId, _faults, _table, _fallback ? _fallback->fork() : nullptr,
                                               _seed);
}

} // namespace atris
