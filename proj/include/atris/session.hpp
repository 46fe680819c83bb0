// SPDX-License-Identifier: Apache-2.0
//
// Per-worker model access: one backend, the prompt library, role settings, a
// private usage ledger and the incident/prompt logs of that worker. Workers
// fork child sessions and absorb them back at join points.
#pragma once

#include <atris/backend.hpp>
#include <atris/prompts.hpp>

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace atris
{

struct SessionOptions
{
    std::array<double, all_roles.size()> temperatures {1.0, 0.01, 0.01, 0.01, 0.01};
    int max_tokens = default_max_tokens;
    std::optional<std::int64_t> seed;
    bool record_prompts = false;

    [[nodiscard]] auto temperature(AgentRole role) const -> double
    {
        return temperatures[static_cast<std::size_t>(role)];
    }
};

/// Recovered model noise: malformed output, parse fallbacks, simulation failures.
struct Incident
{
    std::string tag;
    std::string kind;
    std::string detail;

    auto operator==(const Incident&) const -> bool = default;
};

struct PromptRecord
{
    std::string tag;
    AgentRole role = AgentRole::action;
    std::string label;
    std::vector<Message> messages;
};

void to_json(Value& j, const Incident& i);
void to_json(Value& j, const PromptRecord& p);

class Session
{
  public:
    Session(ModelBackend& backend, const PromptLibrary& prompts, SessionOptions options, std::string tag);

    /// Sends `messages` as `role` and returns the reply text. Records one api
    /// call in this session's ledger and, when enabled, the prompt.
    auto ask(AgentRole role, std::vector<Message> messages, std::string_view label) -> std::string;

    void incident(std::string kind, std::string detail);

    /// Child session sharing backend, prompts and options, with empty logs.
    [[nodiscard]] auto fork(std::string tag) const -> Session;

    /// Merges a child's ledger, incidents and prompt log into this session.
    void absorb(const Session& child);

    [[nodiscard]] auto prompts() const -> const PromptLibrary& { return *_prompts; }
    [[nodiscard]] auto options() const -> const SessionOptions& { return _options; }
    [[nodiscard]] auto tag() const -> const std::string& { return _tag; }
    [[nodiscard]] auto ledger() const -> const UsageLedger& { return _ledger; }
    [[nodiscard]] auto incidents() const -> const std::vector<Incident>& { return _incidents; }
    [[nodiscard]] auto prompt_log() const -> const std::vector<PromptRecord>& { return _promptLog; }

  private:
    ModelBackend* _backend;
    const PromptLibrary* _prompts;
    SessionOptions _options;
    std::string _tag;
    UsageLedger _ledger;
    std::vector<Incident> _incidents;
    std::vector<PromptRecord> _promptLog;
};

} // namespace atris
