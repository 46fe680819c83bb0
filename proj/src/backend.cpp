// SPDX-License-Identifier: Apache-2.0
#include <atris/backend.hpp>
#include <atris/hash.hpp>

namespace atris
{

auto to_string(AgentRole role) -> std::string_view
{
    switch (role)
    {
        case AgentRole::action: return "action";
        case AgentRole::self_eval: return "self_eval";
        case AgentRole::summarizer: return "summarizer";
        case AgentRole::simulator: return "simulator";
        case AgentRole::scorer: return "scorer";
    }
    return "action";
}

auto agent_role_from_string(std::string_view text) -> AgentRole
{
    for (auto role: all_roles)
    {
        if (to_string(role) == text)
            return role;
    }
    throw InvariantError("unknown agent role '" + std::string(text) + "'");
}

auto default_temperature(AgentRole role) -> double
{
    return role == AgentRole::action ? 1.0 : 0.01;
}

void validate(const ChatRequest& request)
{
    if (request.messages.empty())
        throw InvariantError("chat request needs at least one message");
    auto const first = request.messages.front().role;
    if (first != Role::system && first != Role::user)
        throw InvariantError("first message must have role system or user");
    if (!(request.temperature >= 0.0 && request.temperature <= 2.0))
        throw InvariantError("temperature must lie in [0, 2]");
    if (request.max_tokens < 1)
        throw InvariantError("max_tokens must be positive");
}

auto RoleUsage::operator+=(const RoleUsage& other) -> RoleUsage&
{
    api_calls += other.api_calls;
    prompt_tokens += other.prompt_tokens;
    completion_tokens += other.completion_tokens;
    return *this;
}

void UsageLedger::record(AgentRole role, const Usage& usage)
{
    auto& r = _roles[static_cast<std::size_t>(role)];
    r.api_calls += 1;
    r.prompt_tokens += usage.prompt_tokens;
    r.completion_tokens += usage.completion_tokens;
}

void UsageLedger::add(AgentRole role, const RoleUsage& counts)
{
    _roles[static_cast<std::size_t>(role)] += counts;
}

auto UsageLedger::at(AgentRole role) const -> const RoleUsage&
{
    return _roles[static_cast<std::size_t>(role)];
}

auto UsageLedger::total() const -> RoleUsage
{
    auto sum = RoleUsage {};
    for (const auto& r: _roles)
        sum += r;
    return sum;
}

auto UsageLedger::merge(const UsageLedger& other) -> UsageLedger&
{
    for (std::size_t i = 0; i < _roles.size(); ++i)
        _roles[i] += other._roles[i];
    return *this;
}

auto merge_ledgers(const UsageLedger& a, const UsageLedger& b) -> UsageLedger
{
    auto out = a;
    out.merge(b);
    return out;
}

void to_json(Value& j, const UsageLedger& ledger)
{
    j = Value::object();
    for (auto role: all_roles)
    {
        auto const& r = ledger.at(role);
        j[std::string(to_string(role))] = Value {
            {"api_calls", r.api_calls}, {"prompt_tokens", r.prompt_tokens}, {"completion_tokens", r.completion_tokens}};
    }
}

void from_json(const Value& j, UsageLedger& ledger)
{
    ledger = UsageLedger {};
    for (auto role: all_roles)
    {
        auto const key = std::string(to_string(role));
        if (!j.contains(key))
            continue;
        auto const& r = j.at(key);
        ledger.add(role, RoleUsage {r.at("api_calls").get<std::int64_t>(), r.at("prompt_tokens").get<std::int64_t>(),
                                    r.at("completion_tokens").get<std::int64_t>()});
    }
}

auto complete(ModelBackend& backend, const ChatRequest& request, AgentRole role, UsageLedger& ledger) -> ChatResponse
{
    validate(request);
    auto response = backend.send(request, role);
    if (response.usage.prompt_tokens < 0 || response.usage.completion_tokens < 0)
        throw InvariantError("backend reported negative token usage");
    ledger.record(role, response.usage);
    return response;
}

auto request_fingerprint(const ChatRequest& request, AgentRole role) -> std::string
{
    auto h = fnv1a64(to_string(role));
    for (const auto& m: request.messages)
    {
        h = fnv1a64("\x1e", h);
        h = fnv1a64(to_string(m.role), h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(m.content, h);
    }
    return to_hex(h);
}

void LedgerAccumulator::add(const UsageLedger& ledger)
{
    auto lock = std::lock_guard(_mutex);
    _ledger.merge(ledger);
}

auto LedgerAccumulator::snapshot() const -> UsageLedger
{
    auto lock = std::lock_guard(_mutex);
    return _ledger;
}

} // namespace atris
