// SPDX-License-Identifier: Apache-2.0
#include <atris/hash.hpp>
#include <atris/prompts.hpp>
#include <atris/transcript.hpp>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>

namespace atris
{

namespace
{

constexpr std::string_view attemptBlockName = "attempt_block";
constexpr std::string_view attemptBlockNoEvalName = "attempt_block_no_eval";

struct TemplateLayout
{
    std::string_view name;
    bool paired;
    bool single_is_system;
};

constexpr TemplateLayout layouts[] = {
    {prompt_action_system, false, true},    {prompt_action_user, false, false},
    {prompt_self_eval, true, false},        {prompt_simulator, true, false},
    {prompt_summarizer, true, false},       {prompt_bon_scorer, true, false},
    {prompt_seqrev_eval, true, false},      {prompt_final_execution, false, false},
    {prompt_elicit_failure, true, false},   {attemptBlockName, false, false},
    {attemptBlockNoEvalName, false, false},
};

auto readTemplate(const std::filesystem::path& path) -> std::string
{
    if (!std::filesystem::is_regular_file(path))
        throw ConfigError("prompt template missing: " + path.string());
    auto text = read_file(path);
    if (!text.empty() && text.back() == '\n')
        text.pop_back();
    return text;
}

auto isWordChar(unsigned char c) -> bool
{
    return std::isalnum(c) != 0 || c == '_' || c >= 0x80;
}

auto isIdentStart(char c) -> bool
{
    return std::isalpha(static_cast<unsigned char>(c)) != 0 || c == '_';
}

auto isIdentChar(char c) -> bool
{
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

/// Length of a `{identifier}` placeholder starting at `pos`, or 0.
auto placeholderAt(std::string_view body, std::size_t pos) -> std::size_t
{
    if (body[pos] != '{' || pos + 1 >= body.size() || !isIdentStart(body[pos + 1]))
        return 0;
    auto end = pos + 1;
    while (end < body.size() && isIdentChar(body[end]))
        ++end;
    if (end >= body.size() || body[end] != '}')
        return 0;
    return end - pos + 1;
}

void toolDocument(Value& j, const ToolSpec& spec)
{
    auto properties = Value::object();
    auto required = Value::array();
    for (const auto& p: spec.parameters)
    {
        properties[p.name] = Value {{"type", p.type}, {"description", p.description}};
        if (p.required)
            required.push_back(p.name);
    }
    j = Value {{"name", spec.name},
               {"description", spec.description},
               {"parameters", Value {{"type", "dict"}, {"properties", properties}, {"required", required}}}};
}

} // namespace

MissingBindingError::MissingBindingError(std::string template_name, std::string placeholder):
    Error("template '" + template_name + "' has no binding for {" + placeholder + "}"),
    _placeholder(std::move(placeholder))
{
}

auto PromptLibrary::load(const std::filesystem::path& dir) -> PromptLibrary
{
    auto lib = PromptLibrary {};
    lib._dir = dir;
    for (const auto& layout: layouts)
    {
        auto const name = std::string(layout.name);
        auto t = Template {};
        if (layout.paired)
        {
            t.system = readTemplate(dir / (name + ".system.txt"));
            t.user = readTemplate(dir / (name + ".user.txt"));
        }
        else if (layout.single_is_system)
            t.system = readTemplate(dir / (name + ".txt"));
        else
            t.user = readTemplate(dir / (name + ".txt"));
        lib._templates.emplace(name, std::move(t));
    }
    return lib;
}

auto PromptLibrary::load_default() -> PromptLibrary
{
    if (auto const* env = std::getenv("ATRIS_PROMPT_DIR"); env != nullptr && *env != '\0')
        return load(env);
    return load(ATRIS_DEFAULT_PROMPT_DIR);
}

auto PromptLibrary::find(std::string_view name) const -> const Template&
{
    auto it = _templates.find(name);
    if (it == _templates.end())
        throw ConfigError("unknown prompt template '" + std::string(name) + "'");
    return it->second;
}

auto PromptLibrary::attempt_blocks(std::span<const AttemptBlock> attempts, bool include_eval) const -> std::string
{
    auto const& body = *find(include_eval ? attemptBlockName : attemptBlockNoEvalName).user;
    auto out = std::string {};
    for (const auto& a: attempts)
    {
        if (!out.empty())
            out += "\n\n";
        auto values = std::map<std::string, std::string, std::less<>> {{"action", a.action}};
        if (include_eval)
        {
            values["evaluation"] = a.evaluation;
            values["suggestion"] = a.suggestion;
        }
        out += substitute(body, values, attemptBlockName);
    }
    return out;
}

auto PromptLibrary::render(std::string_view name, const PromptBindings& bindings) const -> std::vector<Message>
{
    auto const& t = find(name);
    auto out = std::vector<Message> {};

    if (name == prompt_action_user)
    {
        auto const query = bindings.values.find("query");
        if (query == bindings.values.end())
            throw MissingBindingError(std::string(name), "query");
        if (bindings.attempts.empty())
        {
            out.push_back(Message {Role::user, query->second});
            return out;
        }
        auto values = bindings.values;
        values["attempts"] = attempt_blocks(bindings.attempts, bindings.include_eval);
        out.push_back(Message {Role::user, substitute(*t.user, values, name)});
        return out;
    }

    if (t.system)
        out.push_back(Message {Role::system, substitute(*t.system, bindings.values, name)});
    if (t.user)
        out.push_back(Message {Role::user, substitute(*t.user, bindings.values, name)});
    return out;
}

auto PromptLibrary::render_text(std::string_view name, const PromptBindings& bindings) const -> std::string
{
    auto out = std::string {};
    for (const auto& m: render(name, bindings))
    {
        if (!out.empty())
            out += "\n\n";
        out += m.content;
    }
    return out;
}

auto PromptLibrary::placeholders(std::string_view name) const -> std::vector<std::string>
{
    auto const& t = find(name);
    auto out = std::vector<std::string> {};
    for (const auto* part: {&t.system, &t.user})
    {
        if (!*part)
            continue;
        auto const& body = **part;
        for (std::size_t i = 0; i < body.size(); ++i)
        {
            auto const len = placeholderAt(body, i);
            if (len == 0)
                continue;
            auto id = body.substr(i + 1, len - 2);
            if (std::find(out.begin(), out.end(), id) == out.end())
                out.push_back(std::move(id));
            i += len - 1;
        }
    }
    return out;
}

auto PromptLibrary::hash() const -> std::string
{
    auto h = fnv_offset_basis;
    for (const auto& [name, t]: _templates)
    {
        h = fnv1a64(name, h);
        h = fnv1a64("\x1e", h);
        h = fnv1a64(t.system.value_or("\x1f"), h);
        h = fnv1a64("\x1e", h);
        h = fnv1a64(t.user.value_or("\x1f"), h);
    }
    return to_hex(h);
}

auto substitute(std::string_view body, const std::map<std::string, std::string, std::less<>>& values,
                std::string_view template_name) -> std::string
{
    auto out = std::string {};
    out.reserve(body.size());
    for (std::size_t i = 0; i < body.size();)
    {
        auto const len = placeholderAt(body, i);
        if (len == 0)
        {
            out.push_back(body[i++]);
            continue;
        }
        auto const id = body.substr(i + 1, len - 2);
        auto it = values.find(id);
        if (it == values.end())
            throw MissingBindingError(std::string(template_name), std::string(id));
        out += it->second;
        i += len;
    }
    return out;
}

auto estimate_context(std::string_view text) -> std::size_t
{
    auto tokens = std::size_t {0};
    auto run = std::size_t {0};
    for (auto ch: text)
    {
        auto const c = static_cast<unsigned char>(ch);
        if (isWordChar(c))
        {
            ++run;
            continue;
        }
        tokens += (run + 3) / 4;
        run = 0;
        if (std::isspace(c) == 0)
            ++tokens;
    }
    return tokens + (run + 3) / 4;
}

auto estimate_context(std::span<const Message> messages) -> std::size_t
{
    auto total = std::size_t {0};
    for (const auto& m: messages)
        total += estimate_context(m.content);
    return total;
}

auto render_tool_documents(std::span<const ToolSpec> tools) -> std::string
{
    auto out = std::string("[");
    for (std::size_t i = 0; i < tools.size(); ++i)
    {
        auto doc = Value {};
        toolDocument(doc, tools[i]);
        out += "\n";
        out += doc.dump();
        if (i + 1 < tools.size())
            out += ",";
    }
    out += tools.empty() ? "]" : "\n]";
    return out;
}

auto render_history(std::span<const Message> messages) -> std::string
{
    if (messages.empty())
        return "(none)";
    auto out = std::string {};
    for (const auto& m: messages)
    {
        if (!out.empty())
            out += "\n";
        out += std::string(to_string(m.role)) + ": " + m.content;
    }
    return out;
}

auto render_steps(std::span<const Step> steps) -> std::string
{
    if (steps.empty())
        return "(none)";
    auto out = std::string {};
    for (const auto& s: steps)
    {
        if (!out.empty())
            out += "\n";
        out += format_calls(s.calls) + " → " + format_payloads(s.outcome.payloads);
    }
    return out;
}

auto render_trajectory(const AttemptRecord& attempt) -> std::string
{
    auto const& t = attempt.trajectory;
    auto out = t.steps.empty() ? std::string {} : render_steps(t.steps);
    auto tail = std::string {};
    if (t.closing_reply)
        tail = "reply: " + *t.closing_reply;
    else if (attempt.step_capped)
        tail = "(step cap reached)";
    else if (attempt.discarded)
        tail = "(discarded: context overflow)";
    if (!tail.empty())
        out += (out.empty() ? "" : "\n") + tail;
    return out.empty() ? "(none)" : out;
}

auto render_attempt_action(const AttemptRecord& attempt, bool inline_outcomes) -> std::string
{
    auto const& t = attempt.trajectory;
    if (t.steps.empty())
        return t.closing_reply.value_or("");
    auto out = std::string {};
    for (const auto& s: t.steps)
    {
        if (!out.empty())
            out += "\n";
        out += format_calls(s.calls);
        if (inline_outcomes)
            out += " → " + format_payloads(s.outcome.payloads);
    }
    return out;
}

auto render_simulation_history(std::span<const AttemptRecord> attempts) -> std::string
{
    auto out = std::string {};
    for (const auto& a: attempts)
    {
        if (!out.empty())
            out += "\n\n";
        out += "<Attempt index=\"" + std::to_string(a.index) + "\">\n";
        out += "<Trajectory>\n" + render_trajectory(a) + "\n</Trajectory>\n";
        if (a.evaluation)
        {
            out += std::string("<Result>") + (a.evaluation->verdict == Verdict::pass ? "1" : "0") + "</Result>\n";
            out += "<Evaluation>" + a.evaluation->rationale + "</Evaluation>\n";
            if (a.evaluation->suggestion)
                out += "<Suggestion>" + *a.evaluation->suggestion + "</Suggestion>\n";
        }
        out += "</Attempt>";
    }
    return out;
}

auto to_attempt_blocks(std::span<const AttemptRecord> attempts, bool inline_outcomes) -> std::vector<AttemptBlock>
{
    auto out = std::vector<AttemptBlock> {};
    for (const auto& a: attempts)
    {
        if (a.discarded)
            continue;
        auto block = AttemptBlock {render_attempt_action(a, inline_outcomes), {}, {}};
        if (a.evaluation)
        {
            block.evaluation = a.evaluation->rationale;
            block.suggestion = a.evaluation->suggestion.value_or("");
        }
        out.push_back(std::move(block));
    }
    return out;
}

} // namespace atris
