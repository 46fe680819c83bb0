// SPDX-License-Identifier: Apache-2.0
#include <atris/session.hpp>
#include <atris/transcript.hpp>

namespace atris
{

void to_json(Value& j, const Incident& i)
{
    j = Value {{"tag", i.tag}, {"kind", i.kind}, {"detail", i.detail}};
}

void to_json(Value& j, const PromptRecord& p)
{
    j = Value {{"tag", p.tag}, {"role", std::string(to_string(p.role))}, {"label", p.label}, {"messages", p.messages}};
}

Session::Session(ModelBackend& backend, const PromptLibrary& prompts, SessionOptions options, std::string tag):
    _backend(&backend), _prompts(&prompts), _options(options), _tag(std::move(tag))
{
}

auto Session::ask(AgentRole role, std::vector<Message> messages, std::string_view label) -> std::string
{
    if (_options.record_prompts)
        _promptLog.push_back(PromptRecord {_tag, role, std::string(label), messages});
    auto request = ChatRequest {std::move(messages), _options.temperature(role), _options.max_tokens, _options.seed,
                                _tag};
    return complete(*_backend, request, role, _ledger).text;
}

void Session::incident(std::string kind, std::string detail)
{
    _incidents.push_back(Incident {_tag, std::move(kind), std::move(detail)});
}

auto Session::fork(std::string tag) const -> Session
{
    return Session(*_backend, *_prompts, _options, std::move(tag));
}

void Session::absorb(const Session& child)
{
    _ledger.merge(child._ledger);
    _incidents.insert(_incidents.end(), child._incidents.begin(), child._incidents.end());
    _promptLog.insert(_promptLog.end(), child._promptLog.begin(), child._promptLog.end());
}

} // namespace atris
