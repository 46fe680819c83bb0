// SPDX-License-Identifier: Apache-2.0
#include <atris/replay_backend.hpp>

#include <sstream>

namespace atris
{

void to_json(Value& j, const Exchange& e)
{
    j = Value {{"tag", e.tag},
               {"role", std::string(to_string(e.role))},
               {"fingerprint", e.fingerprint},
               {"text", e.text},
               {"usage", Value {{"prompt", e.usage.prompt_tokens}, {"completion", e.usage.completion_tokens}}}};
}

void from_json(const Value& j, Exchange& e)
{
    e.tag = j.at("tag").get<std::string>();
    e.role = agent_role_from_string(j.at("role").get<std::string>());
    e.fingerprint = j.at("fingerprint").get<std::string>();
    e.text = j.at("text").get<std::string>();
    e.usage = Usage {j.at("usage").at("prompt").get<std::int64_t>(), j.at("usage").at("completion").get<std::int64_t>()};
}

RecordingBackend::RecordingBackend(ModelBackend& inner, const std::filesystem::path& path): _inner(inner), _writer(path)
{
}

auto RecordingBackend::send(const ChatRequest& request, AgentRole role) -> ChatResponse
{
    auto response = _inner.send(request, role);
    auto const exchange = Exchange {request.tag, role, request_fingerprint(request, role), response.text, response.usage};
    _writer.write_line(Value(exchange).dump());
    return response;
}

ReplayBackend::ReplayBackend(std::vector<Exchange> exchanges)
{
    for (auto& e: exchanges)
    {
        auto key = Key {e.tag, e.role, e.fingerprint};
        _pending[key].push_back(std::move(e));
    }
}

auto ReplayBackend::load(const std::filesystem::path& path) -> std::unique_ptr<ReplayBackend>
{
    auto const file = std::filesystem::is_directory(path) ? path / "exchanges.jsonl" : path;
    auto const text = read_file(file);
    auto exchanges = std::vector<Exchange> {};
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
            exchanges.push_back(deserialize<Exchange>(line));
        }
        catch (const DecodeError& e)
        {
            throw ConfigError(file.string() + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return std::make_unique<ReplayBackend>(std::move(exchanges));
}

auto ReplayBackend::send(const ChatRequest& request, AgentRole role) -> ChatResponse
{
    auto const key = Key {request.tag, role, request_fingerprint(request, role)};
    auto lock = std::lock_guard(_mutex);
    auto it = _pending.find(key);
    if (it == _pending.end() || it->second.empty())
        throw ReplayMissError("no recorded exchange for tag '" + request.tag + "', role " + std::string(to_string(role))
                              + ", fingerprint " + std::get<2>(key));
    auto e = std::move(it->second.front());
    it->second.pop_front();
    return ChatResponse {std::move(e.text), e.usage};
}

} // namespace atris
