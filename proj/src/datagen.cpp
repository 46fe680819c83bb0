// SPDX-License-Identifier: Apache-2.0
#include <atris/datagen.hpp>
#include <atris/parser.hpp>
#include <atris/simulator.hpp>
#include <atris/transcript.hpp>

#include <fstream>
#include <random>
#include <sstream>

namespace atris
{

void to_json(Value& j, const SftInstance& s)
{
    j = Value {{"env_id", s.env_id},   {"init_state", s.init_state}, {"history", s.history},
               {"action", s.action},   {"target", s.target},         {"key", s.key},
               {"provenance", s.provenance}};
}

void from_json(const Value& j, SftInstance& s)
{
    s.env_id = j.at("env_id").get<std::string>();
    s.init_state = j.at("init_state").get<EnvironmentState>();
    s.history = j.at("history").get<std::vector<Step>>();
    s.action = j.at("action").get<std::vector<ToolCall>>();
    s.target = j.at("target").get<std::vector<Value>>();
    s.key = j.at("key").get<OutcomeTypeKey>();
    s.provenance = j.at("provenance").get<std::string>();
}

auto instance_key(const ToolOutcome& outcome) -> OutcomeTypeKey
{
    for (const auto& t: outcome.types)
    {
        if (!t.is_success())
            return t;
    }
    if (outcome.types.empty())
        throw InvariantError("outcome has no types");
    return outcome.types.front();
}

auto collect_episodes(std::span<const DatagenQuery> queries, std::span<ModelBackend* const> backends,
                      const PromptLibrary& prompts, const RunConfig& config, std::vector<Incident>* incidents)
    -> std::vector<SftInstance>
{
    auto out = std::vector<SftInstance> {};
    for (const auto& q: queries)
    {
        for (std::size_t b = 0; b < backends.size(); ++b)
        {
            auto env = make_environment(q.env_id, q.initial_state);
            auto const init = env->snapshot();
            auto input = TurnInput {q.query_id + "@" + std::to_string(b), 0, env->tools(), {}, q.query};
            auto session = Session(*backends[b], prompts, config.session, final_tag(input));
            auto episode = std::vector<SftInstance> {};
            auto loop = drive_steps(session, input, config, Message {Role::user, q.query},
                                    [&](std::span<const ToolCall> calls, std::span<const Step> history) {
                                        auto outcome = env->execute(calls);
                                        episode.push_back(SftInstance {
                                            q.env_id, init, std::vector<Step>(history.begin(), history.end()),
                                            std::vector<ToolCall>(calls.begin(), calls.end()), outcome.payloads,
                                            instance_key(outcome)});
                                        return outcome;
                                    });
            static_cast<void>(loop);
            if (incidents != nullptr)
                incidents->insert(incidents->end(), session.incidents().begin(), session.incidents().end());
            if (episode.empty() && incidents != nullptr)
                incidents->push_back(Incident {session.tag(), "empty_episode", "episode produced no executed step"});
            out.insert(out.end(), std::make_move_iterator(episode.begin()), std::make_move_iterator(episode.end()));
        }
    }
    return out;
}

auto elicit_targeted_failures(const Environment& env, std::string_view failure_label, ModelBackend& backend,
                              const PromptLibrary& prompts, const RunConfig& config, std::span<const std::string> tools,
                              std::vector<Incident>* incidents) -> std::vector<SftInstance>
{
    auto const labels = env.failure_labels();
    if (std::find(labels.begin(), labels.end(), failure_label) == labels.end())
        throw InvariantError("failure label '" + std::string(failure_label) + "' is not documented by "
                             + std::string(env.id()));

    auto const init = env.snapshot();
    auto out = std::vector<SftInstance> {};
    for (const auto& spec: env.tools())
    {
        if (!tools.empty() && std::find(tools.begin(), tools.end(), spec.name) == tools.end())
            continue;
        auto session = Session(backend, prompts, config.session,
                               "elicit/" + std::string(env.id()) + "." + spec.name + "/" + std::string(failure_label));
        auto bindings = PromptBindings {};
        bindings.values["tool_documents"] = render_tool_documents(std::span<const ToolSpec>(&spec, 1));
        bindings.values["init_config"] = init.blob.dump();
        bindings.values["implementation"] = env.implementation_notes(spec.name);
        bindings.values["failure_label"] = std::string(failure_label);
        bindings.values["tool"] = spec.name;
        auto const text = session.ask(AgentRole::action, prompts.render(prompt_elicit_failure, bindings), "elicit");
        auto calls = std::vector<ToolCall> {};
        try
        {
            auto parsed = parse_action_output(text);
            calls = std::move(parsed.calls);
        }
        catch (const ParseError& e)
        {
            session.incident("malformed_action", e.what());
        }
        for (const auto& call: calls)
        {
            auto shadow = env.clone();
            auto const batch = std::vector<ToolCall> {call};
            auto outcome = shadow->execute(batch);
            auto const key = instance_key(outcome);
            if (key.otype != failure_label)
                continue;
            out.push_back(SftInstance {std::string(env.id()), init, {}, batch, outcome.payloads, key});
        }
        if (incidents != nullptr)
            incidents->insert(incidents->end(), session.incidents().begin(), session.incidents().end());
    }
    return out;
}

void OutcomeFrequencyTable::add(const OutcomeTypeKey& key, std::int64_t count)
{
    if (count < 1)
        throw InvariantError("frequency counts must be >= 1");
    _counts[key] += count;
    _total += count;
}

auto build_table(std::span<const SftInstance> instances, std::span<const OutcomeTypeKey> smooth)
    -> OutcomeFrequencyTable
{
    auto table = OutcomeFrequencyTable {};
    for (const auto& i: instances)
        table.add(i.key);
    for (const auto& key: smooth)
    {
        if (!table.counts().contains(key))
            table.add(key);
    }
    return table;
}

auto documented_keys(const Environment& env) -> std::vector<OutcomeTypeKey>
{
    auto keys = std::vector<OutcomeTypeKey> {};
    for (const auto& spec: env.tools())
    {
        auto const tool = std::string(env.id()) + "." + spec.name;
        keys.push_back({tool, std::string(success_label)});
        for (const auto& label: env.failure_labels())
            keys.push_back({tool, label});
    }
    return keys;
}

auto compute_weights(const OutcomeFrequencyTable& table) -> std::map<OutcomeTypeKey, double>
{
    auto norm = 0.0L;
    for (const auto& [key, count]: table.counts())
        norm += 1.0L / static_cast<long double>(count);
    auto weights = std::map<OutcomeTypeKey, double> {};
    for (const auto& [key, count]: table.counts())
        weights[key] = static_cast<double>((1.0L / static_cast<long double>(count)) / norm);
    return weights;
}

auto sample_rebalanced(std::span<const SftInstance> instances, const OutcomeFrequencyTable& table, std::size_t k,
                       std::uint64_t seed) -> std::vector<SftInstance>
{
    if (k < 1)
        throw InvariantError("sample size must be >= 1");
    auto byKey = std::map<OutcomeTypeKey, std::vector<std::size_t>> {};
    for (std::size_t i = 0; i < instances.size(); ++i)
    {
        if (!table.counts().contains(instances[i].key))
            throw InvariantError("instance key " + instances[i].key.str() + " is missing from the table");
        byKey[instances[i].key].push_back(i);
    }
    auto const weights = compute_weights(table);
    auto keys = std::vector<OutcomeTypeKey> {};
    auto cumulative = std::vector<double> {};
    auto acc = 0.0;
    // per-instance weight w(key), so a key's mass is w(key) * count(key)
    for (const auto& [key, w]: weights)
    {
        acc += w * static_cast<double>(table.counts().at(key));
        keys.push_back(key);
        cumulative.push_back(acc);
    }

    auto rng = std::mt19937_64(seed);
    auto out = std::vector<SftInstance> {};
    out.reserve(k);
    for (std::size_t n = 0; n < k; ++n)
    {
        auto const u = static_cast<double>(rng() >> 11) * 0x1.0p-53 * acc;
        auto const pos = std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        auto const& key = keys[std::min<std::size_t>(static_cast<std::size_t>(pos), keys.size() - 1)];
        auto it = byKey.find(key);
        if (it == byKey.end())
            throw EmptyKeyError("no instances for sampled key " + key.str());
        auto const& members = it->second;
        out.push_back(instances[members[rng() % members.size()]]);
    }
    return out;
}

auto sft_prompt(const PromptLibrary& prompts, const SftInstance& instance) -> std::string
{
    auto const env = make_environment(instance.env_id);
    return prompts.render_text(prompt_simulator,
                               simulator_bindings(env->tools(), instance.init_state, instance.history, instance.action));
}

auto emit_sft(std::span<const SftInstance> instances, const PromptLibrary& prompts, const std::filesystem::path& path)
    -> std::size_t
{
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write corpus file " + path.string());
    for (const auto& instance: instances)
    {
        auto line = Value {{"prompt", sft_prompt(prompts, instance)},
                           {"target", format_payloads(instance.target)},
                           {"key", instance.key},
                           {"instance", instance}};
        out << line.dump() << '\n';
    }
    out.flush();
    if (!out)
        throw Error("write failed for corpus file " + path.string());
    return instances.size();
}

auto read_sft(const std::filesystem::path& path) -> std::vector<SftRow>
{
    auto const text = read_file(path);
    auto rows = std::vector<SftRow> {};
    auto in = std::istringstream(text);
    auto line = std::string {};
    auto lineNo = 0;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.empty())
            continue;
        try
        {
            auto const j = parse_json(line);
            rows.push_back(SftRow {j.at("prompt").get<std::string>(), j.at("target").get<std::string>(),
                                   j.at("instance").get<SftInstance>()});
        }
        catch (const std::exception& e)
        {
            throw DecodeError(static_cast<std::size_t>(lineNo), path.string() + ": " + e.what());
        }
    }
    return rows;
}

auto audit_corpus(std::span<const SftInstance> instances) -> AuditReport
{
    auto report = AuditReport {};
    for (std::size_t i = 0; i < instances.size(); ++i)
    {
        auto const& instance = instances[i];
        ++report.checked;
        if (instance.provenance != provenance_real)
            report.not_real.push_back(i);
        auto env = make_environment(instance.env_id, std::optional<Value>(instance.init_state.blob));
        env->restore(instance.init_state);
        for (const auto& step: instance.history)
            static_cast<void>(env->execute(step.calls));
        auto const outcome = env->execute(instance.action);
        if (format_payloads(outcome.payloads) != format_payloads(instance.target))
            report.mismatches.push_back(i);
    }
    return report;
}

} // namespace atris
