// SPDX-License-Identifier: Apache-2.0
#include <atris/remote_backend.hpp>
#include <atris/transcript.hpp>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <thread>

namespace atris
{

namespace
{

auto mentionsContextLength(std::string body) -> bool
{
    std::transform(body.begin(), body.end(), body.begin(), [](unsigned char c) { return std::tolower(c); });
    return body.find("context length") != std::string::npos || body.find("context_length") != std::string::npos
        || body.find("maximum context") != std::string::npos || body.find("too many tokens") != std::string::npos;
}

auto transient(int status) -> bool
{
    return status == 429 || status >= 500;
}

} // namespace

auto RemoteConfig::from_environment() -> RemoteConfig
{
    auto config = RemoteConfig {};
    auto const* base = std::getenv("ATRIS_API_BASE");
    if (base == nullptr || *base == '\0')
        throw ConfigError("backend.remote: ATRIS_API_BASE is not set");
    config.base_url = base;
    if (auto const* key = std::getenv("ATRIS_API_KEY"); key != nullptr)
        config.api_key = key;
    return config;
}

RemoteBackend::RemoteBackend(RemoteConfig config):
    RemoteBackend(std::move(config), [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })
{
}

RemoteBackend::RemoteBackend(RemoteConfig config, Sleeper sleeper): _config(std::move(config)), _sleep(std::move(sleeper))
{
    auto const& url = _config.base_url;
    auto const schemeEnd = url.find("://");
    if (schemeEnd == std::string::npos)
        throw ConfigError("backend.remote.base_url: expected scheme://host[:port][/path], got '" + url + "'");
    auto const pathStart = url.find('/', schemeEnd + 3);
    _hostPort = url.substr(0, pathStart);
    _pathPrefix = pathStart == std::string::npos ? std::string {} : url.substr(pathStart);
    while (!_pathPrefix.empty() && _pathPrefix.back() == '/')
        _pathPrefix.pop_back();
}

auto RemoteBackend::model_for(AgentRole role) const -> const std::string&
{
    auto it = _config.models.find(role);
    return it == _config.models.end() ? _config.default_model : it->second;
}

auto chat_request_body(const ChatRequest& request, const std::string& model) -> Value
{
    auto messages = Value::array();
    for (const auto& m: request.messages)
    {
        auto const role = m.role == Role::tool ? std::string("user") : std::string(to_string(m.role));
        messages.push_back(Value {{"role", role}, {"content", m.content}});
    }
    auto body = Value {{"model", model},
                       {"messages", messages},
                       {"temperature", request.temperature},
                       {"max_tokens", request.max_tokens}};
    if (request.seed)
        body["seed"] = *request.seed;
    return body;
}

auto parse_chat_response(std::string_view body) -> ChatResponse
{
    auto j = Value {};
    try
    {
        j = parse_json(body);
    }
    catch (const DecodeError& e)
    {
        throw TransportError(std::string("malformed response body: ") + e.what());
    }
    auto const* content = static_cast<const Value*>(nullptr);
    if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty())
    {
        auto const& choice = j["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content")
            && choice["message"]["content"].is_string())
            content = &choice["message"]["content"];
    }
    if (content == nullptr)
        throw TransportError("response has no choices[0].message.content");
    auto usage = Usage {};
    if (j.contains("usage") && j["usage"].is_object())
    {
        usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t {0});
        usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t {0});
    }
    return ChatResponse {content->get<std::string>(), usage};
}

auto RemoteBackend::send(const ChatRequest& request, AgentRole role) -> ChatResponse
{
    auto const payload = chat_request_body(request, model_for(role)).dump();
    auto const path = _pathPrefix + "/chat/completions";
    auto headers = httplib::Headers {};
    if (!_config.api_key.empty())
        headers.emplace("Authorization", "Bearer " + _config.api_key);

    auto backoff = _config.initial_backoff;
    auto lastError = std::string {};
    for (int attempt = 0; attempt <= _config.max_retries; ++attempt)
    {
        if (attempt > 0)
        {
            spdlog::warn("remote backend: retry {}/{} after {} ({} ms)", attempt, _config.max_retries, lastError,
                         backoff.count());
            _sleep(backoff);
            backoff *= 2;
        }
        auto client = httplib::Client(_hostPort);
        client.set_connection_timeout(std::chrono::seconds(10));
        client.set_read_timeout(_config.timeout);
        client.set_write_timeout(_config.timeout);
        auto result = client.Post(path, headers, payload, "application/json");
        if (!result)
        {
            lastError = "connection error: " + httplib::to_string(result.error());
            continue;
        }
        auto const status = result->status;
        if (status == 200)
            return parse_chat_response(result->body);
        if ((status == 400 || status == 413) && mentionsContextLength(result->body))
            throw ContextOverflowError("endpoint rejected prompt as too long (HTTP " + std::to_string(status) + ")");
        lastError = "HTTP " + std::to_string(status);
        if (!transient(status))
            throw TransportError("chat completion failed: " + lastError + ": " + result->body.substr(0, 500));
    }
    throw TransportError("chat completion failed after " + std::to_string(_config.max_retries) + " retries: "
                         + lastError);
}

} // namespace atris
