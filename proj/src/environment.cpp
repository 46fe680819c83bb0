// SPDX-License-Identifier: Apache-2.0
#include <atris/environment.hpp>
#include <atris/hash.hpp>

namespace atris
{

void to_json(Value& j, const EnvironmentState& s)
{
    j = Value {{"env_id", s.env_id}, {"blob", s.blob}, {"version", s.version}};
}

void from_json(const Value& j, EnvironmentState& s)
{
    s.env_id = j.at("env_id").get<std::string>();
    s.blob = j.at("blob");
    s.version = j.at("version").get<std::int64_t>();
}

auto fingerprint(const EnvironmentState& state) -> std::string
{
    // Sorted keys, so states that differ only in insertion order agree.
    auto const canonical = nlohmann::json::parse(state.blob.dump()).dump();
    return to_hex(fnv1a64(canonical, fnv1a64(state.env_id)));
}

auto as_number(const Value& v) -> std::optional<double>
{
    if (!v.is_number())
        return std::nullopt;
    return v.get<double>();
}

namespace
{

auto typeMatches(const std::string& type, const Value& v) -> bool
{
    if (type == "string")
        return v.is_string();
    if (type == "integer")
        return v.is_number_integer();
    if (type == "number")
        return v.is_number();
    if (type == "boolean")
        return v.is_boolean();
    if (type == "list")
        return v.is_array();
    if (type == "map")
        return v.is_object();
    return true;
}

/// Argument checks shared by every environment; nullopt when the call is well-typed.
auto checkArguments(const ToolSpec& spec, const ToolCall& call) -> std::optional<std::string>
{
    for (const auto& [name, value]: call.arguments)
    {
        auto const it = std::find_if(spec.parameters.begin(), spec.parameters.end(),
                                     [&](const ParamSpec& p) { return p.name == name; });
        if (it == spec.parameters.end())
            return "bad argument: unexpected argument " + name;
        if (!typeMatches(it->type, value))
            return "bad argument type: " + name + " must be " + it->type;
    }
    for (const auto& p: spec.parameters)
    {
        if (p.required && call.arg(p.name) == nullptr)
            return "bad argument: missing required argument " + p.name;
    }
    return std::nullopt;
}

} // namespace

Environment::Environment(Value initial, std::int64_t version): _state(std::move(initial)), _version(version) {}

auto Environment::tool(std::string_view name) const -> const ToolSpec*
{
    for (const auto& t: tools())
    {
        if (t.name == name)
            return &t;
    }
    return nullptr;
}

auto Environment::execute(std::span<const ToolCall> calls) -> ToolOutcome
{
    auto payloads = std::vector<Value> {};
    auto types = std::vector<OutcomeTypeKey> {};
    for (const auto& call: calls)
    {
        auto const qualified = std::string(id()) + "." + call.tool;
        auto const* spec = tool(call.tool);
        if (spec == nullptr)
        {
            payloads.push_back(error_payload("unknown tool " + call.tool));
            types.push_back({qualified, std::string(unknown_tool_label)});
            continue;
        }
        if (auto problem = checkArguments(*spec, call))
        {
            payloads.push_back(error_payload(*problem));
            types.push_back({qualified, std::string(bad_argument_label)});
            continue;
        }
        auto working = _state;
        try
        {
            auto applied = apply(call, working);
            if (applied.mutated)
            {
                _state = std::move(working);
                ++_version;
            }
            payloads.push_back(std::move(applied.payload));
            types.push_back({qualified, std::string(success_label)});
        }
        catch (const ToolFailure& failure)
        {
            payloads.push_back(error_payload(failure.message));
            types.push_back({qualified, failure.label});
        }
    }
    return make_outcome(std::move(payloads), std::move(types));
}

auto Environment::snapshot() const -> EnvironmentState
{
    return EnvironmentState {std::string(id()), _state, _version};
}

void Environment::restore(const EnvironmentState& state)
{
    if (state.env_id != id())
        throw EnvMismatchError("cannot restore state of '" + state.env_id + "' into environment '" + std::string(id())
                               + "'");
    _state = state.blob;
    _version = state.version;
}

auto Environment::classify(const ToolCall& call, const Value& payload) const -> OutcomeTypeKey
{
    auto key = OutcomeTypeKey {std::string(id()) + "." + call.tool, std::string(success_label)};
    if (!is_error_payload(payload))
        return key;
    key.otype = std::string(other_failure_label);
    auto const& err = payload.at("error");
    if (!err.is_string())
        return key;
    auto const& message = err.get_ref<const std::string&>();
    if (message.starts_with("unknown tool "))
        key.otype = std::string(unknown_tool_label);
    else if (message.starts_with("bad argument"))
        key.otype = std::string(bad_argument_label);
    else
    {
        for (const auto& [prefix, label]: error_labels())
        {
            if (message.starts_with(prefix))
            {
                key.otype = label;
                break;
            }
        }
    }
    return key;
}

auto Environment::fingerprint() const -> std::string
{
    return atris::fingerprint(snapshot());
}

auto make_environment(std::string_view env_id, const std::optional<Value>& initial_state) -> std::unique_ptr<Environment>
{
    if (env_id == "vault")
        return make_vault(initial_state);
    if (env_id == "fileio")
        return make_fileio(initial_state);
    throw ConfigError("environment: unknown environment id '" + std::string(env_id) + "'");
}

} // namespace atris
