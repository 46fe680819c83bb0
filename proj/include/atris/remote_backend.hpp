// SPDX-License-Identifier: Apache-2.0
//
// OpenAI-compatible chat-completions client.
#pragma once

#include <atris/backend.hpp>

#include <chrono>
#include <functional>
#include <map>
#include <string>

namespace atris
{

struct RemoteConfig
{
    /// e.g. `http://localhost:8000/v1`; requests go to `<base_url>/chat/completions`.
    std::string base_url;
    std::string api_key;
    std::string default_model;
    std::map<AgentRole, std::string> models;
    int max_retries = 3;
    std::chrono::milliseconds initial_backoff {500};
    std::chrono::seconds timeout {300};

    /// Fills base_url and api_key from ATRIS_API_BASE / ATRIS_API_KEY.
    /// Throws ConfigError when ATRIS_API_BASE is unset.
    [[nodiscard]] static auto from_environment() -> RemoteConfig;
};

class RemoteBackend final : public ModelBackend
{
  public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    explicit RemoteBackend(RemoteConfig config);
    RemoteBackend(RemoteConfig config, Sleeper sleeper);

    auto send(const ChatRequest& request, AgentRole role) -> ChatResponse override;

    [[nodiscard]] auto model_for(AgentRole role) const -> const std::string&;

  private:
    RemoteConfig _config;
    Sleeper _sleep;
    std::string _hostPort;
    std::string _pathPrefix;
};

/// Request body for one chat completion. Tool messages are sent with role
/// "user" since calls travel as plain text rather than native tool calls.
[[nodiscard]] auto chat_request_body(const ChatRequest& request, const std::string& model) -> Value;

/// Extracts text and usage from a chat-completions response body.
/// Throws TransportError when the body has no message content.
[[nodiscard]] auto parse_chat_response(std::string_view body) -> ChatResponse;

} // namespace atris
