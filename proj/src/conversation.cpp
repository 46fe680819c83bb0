// SPDX-License-Identifier: Apache-2.0
#include <atris/conversation.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

namespace atris
{

auto to_string(Role role) -> std::string_view
{
    switch (role)
    {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "user";
}

auto role_from_string(std::string_view text) -> Role
{
    if (text == "system")
        return Role::system;
    if (text == "user")
        return Role::user;
    if (text == "assistant")
        return Role::assistant;
    if (text == "tool")
        return Role::tool;
    throw InvariantError("unknown message role '" + std::string(text) + "'");
}

auto make_message(Role role, std::string content) -> Message
{
    if ((role == Role::user || role == Role::tool) && content.empty())
        throw InvariantError("user and tool messages must have content");
    return Message {role, std::move(content)};
}

auto is_identifier(std::string_view text) -> bool
{
    if (text.empty())
        return false;
    auto const head = text.front();
    if (!(std::isalpha(static_cast<unsigned char>(head)) || head == '_'))
        return false;
    return std::all_of(text.begin() + 1, text.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
    });
}

void validate(const ToolSpec& spec)
{
    if (!is_identifier(spec.name))
        throw InvariantError("tool name '" + spec.name + "' is not an identifier");
    auto seen = std::set<std::string> {};
    for (const auto& p: spec.parameters)
    {
        if (!seen.insert(p.name).second)
            throw InvariantError("duplicate parameter '" + p.name + "' in tool " + spec.name);
    }
}

auto ToolCall::arg(std::string_view name) const -> const Value*
{
    for (const auto& [key, value]: arguments)
    {
        if (key == name)
            return &value;
    }
    return nullptr;
}

void validate(const ToolCall& call)
{
    if (!is_identifier(call.tool))
        throw InvariantError("tool name '" + call.tool + "' is not an identifier");
    auto seen = std::set<std::string> {};
    for (const auto& [name, _]: call.arguments)
    {
        if (!seen.insert(name).second)
            throw InvariantError("duplicate argument '" + name + "' in call to " + call.tool);
    }
}

auto to_string(Status status) -> std::string_view
{
    return status == Status::success ? "success" : "failure";
}

auto is_error_payload(const Value& payload) -> bool
{
    return payload.is_object() && payload.contains("error");
}

auto error_payload(std::string_view message) -> Value
{
    auto v = Value::object();
    v["error"] = std::string(message);
    return v;
}

auto make_outcome(std::vector<Value> payloads, std::vector<OutcomeTypeKey> types) -> ToolOutcome
{
    auto outcome = ToolOutcome {};
    outcome.status = std::any_of(payloads.begin(), payloads.end(), is_error_payload) ? Status::failure
                                                                                    : Status::success;
    outcome.payloads = std::move(payloads);
    outcome.types = std::move(types);
    validate(outcome);
    return outcome;
}

void validate(const ToolOutcome& outcome)
{
    if (outcome.payloads.empty())
        throw InvariantError("tool outcome must carry at least one payload");
    if (!outcome.types.empty() && outcome.types.size() != outcome.payloads.size())
        throw InvariantError("tool outcome must carry one outcome type per payload");
    auto const anyError = std::any_of(outcome.payloads.begin(), outcome.payloads.end(), is_error_payload);
    if (outcome.status == Status::failure && !anyError)
        throw InvariantError("failed outcome must carry an error payload");
}

void validate(const Step& step)
{
    if (step.calls.empty())
        throw InvariantError("step must contain at least one call");
    for (const auto& c: step.calls)
        validate(c);
    validate(step.outcome);
    if (step.outcome.payloads.size() != step.calls.size())
        throw InvariantError("step outcome must have one payload per call");
}

auto append_step(const TurnHistory& history, Step step) -> TurnHistory
{
    if (history.closed())
        throw TurnClosedError();
    validate(step);
    auto next = history;
    next.steps.push_back(std::move(step));
    return next;
}

auto close_turn(const TurnHistory& history, std::string reply) -> TurnHistory
{
    if (history.closed())
        throw TurnClosedError();
    auto next = history;
    next.closing_reply = std::move(reply);
    return next;
}

auto to_string(Verdict verdict) -> std::string_view
{
    return verdict == Verdict::pass ? "pass" : "fail";
}

void validate(const EvaluationResult& evaluation)
{
    if (evaluation.verdict == Verdict::fail && !evaluation.suggestion)
        throw InvariantError("failing evaluation must carry a suggestion");
}

void validate_attempt_set(std::span<const AttemptRecord> attempts)
{
    for (std::size_t i = 0; i < attempts.size(); ++i)
    {
        if (attempts[i].index != static_cast<int>(i) + 1)
            throw InvariantError("attempt indices must be contiguous from 1");
    }
}

void validate(const Summary& summary)
{
    if (summary.recommendation.empty())
        throw InvariantError("summary recommendation must be non-empty");
}

namespace
{

void appendQuoted(std::string& out, std::string_view text)
{
    out.push_back('"');
    for (char c: text)
    {
        switch (c)
        {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
}

void appendDecimal(std::string& out, double value)
{
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    auto text = std::string(buf, end);
    if (text.find_first_of(".eEn") == std::string::npos)
        text += ".0";
    out += text;
}

void appendLiteral(std::string& out, const Value& v, bool sortKeys)
{
    switch (v.type())
    {
        case Value::value_t::null: out += "null"; break;
        case Value::value_t::boolean: out += v.get<bool>() ? "true" : "false"; break;
        case Value::value_t::number_integer: out += std::to_string(v.get<std::int64_t>()); break;
        case Value::value_t::number_unsigned: out += std::to_string(v.get<std::uint64_t>()); break;
        case Value::value_t::number_float: appendDecimal(out, v.get<double>()); break;
        case Value::value_t::string: appendQuoted(out, v.get_ref<const std::string&>()); break;
        case Value::value_t::array:
        {
            out.push_back('[');
            auto first = true;
            for (const auto& item: v)
            {
                if (!first)
                    out.push_back(',');
                first = false;
                appendLiteral(out, item, sortKeys);
            }
            out.push_back(']');
            break;
        }
        case Value::value_t::object:
        {
            auto keys = std::vector<std::string> {};
            for (const auto& [key, _]: v.items())
                keys.push_back(key);
            if (sortKeys)
                std::sort(keys.begin(), keys.end());
            out.push_back('{');
            auto first = true;
            for (const auto& key: keys)
            {
                if (!first)
                    out.push_back(',');
                first = false;
                appendQuoted(out, key);
                out.push_back(':');
                appendLiteral(out, v.at(key), sortKeys);
            }
            out.push_back('}');
            break;
        }
        default: out += "null"; break;
    }
}

} // namespace

auto render_literal(const Value& literal, bool sort_keys) -> std::string
{
    auto out = std::string {};
    appendLiteral(out, literal, sort_keys);
    return out;
}

auto canonicalize_call(const ToolCall& call) -> std::string
{
    auto args = std::vector<const std::pair<std::string, Value>*> {};
    for (const auto& a: call.arguments)
        args.push_back(&a);
    std::sort(args.begin(), args.end(), [](auto* l, auto* r) { return l->first < r->first; });

    auto out = call.tool + "(";
    for (std::size_t i = 0; i < args.size(); ++i)
    {
        if (i > 0)
            out.push_back(',');
        out += args[i]->first;
        out.push_back('=');
        appendLiteral(out, args[i]->second, true);
    }
    out.push_back(')');
    return out;
}

auto canonicalize_calls(std::span<const ToolCall> calls) -> std::string
{
    auto out = std::string("[");
    for (std::size_t i = 0; i < calls.size(); ++i)
    {
        if (i > 0)
            out.push_back(',');
        out += canonicalize_call(calls[i]);
    }
    out.push_back(']');
    return out;
}

auto format_call(const ToolCall& call) -> std::string
{
    auto out = call.tool + "(";
    for (std::size_t i = 0; i < call.arguments.size(); ++i)
    {
        if (i > 0)
            out += ", ";
        out += call.arguments[i].first;
        out.push_back('=');
        appendLiteral(out, call.arguments[i].second, false);
    }
    out.push_back(')');
    return out;
}

auto format_calls(std::span<const ToolCall> calls) -> std::string
{
    auto out = std::string("[");
    for (std::size_t i = 0; i < calls.size(); ++i)
    {
        if (i > 0)
            out += ", ";
        out += format_call(calls[i]);
    }
    out.push_back(']');
    return out;
}

auto format_payloads(std::span<const Value> payloads) -> std::string
{
    auto list = Value::array();
    for (const auto& p: payloads)
        list.push_back(p);
    return list.dump();
}

} // namespace atris
