// SPDX-License-Identifier: Apache-2.0
//
// Chat-completion backends and the role-attributed usage ledger.
#pragma once

#include <atris/conversation.hpp>

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atris
{

enum class AgentRole
{
    action,
    self_eval,
    summarizer,
    simulator,
    scorer,
};

inline constexpr std::array<AgentRole, 5> all_roles {AgentRole::action, AgentRole::self_eval, AgentRole::summarizer,
                                                     AgentRole::simulator, AgentRole::scorer};

[[nodiscard]] auto to_string(AgentRole role) -> std::string_view;
[[nodiscard]] auto agent_role_from_string(std::string_view text) -> AgentRole;

/// 1.0 for the action agent, 0.01 for every other role.
[[nodiscard]] auto default_temperature(AgentRole role) -> double;

inline constexpr int default_context_cap_tokens = 32768;
inline constexpr int default_max_tokens = 4096;

struct Usage
{
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    auto operator==(const Usage&) const -> bool = default;
};

struct ChatRequest
{
    std::vector<Message> messages;
    double temperature = 1.0;
    int max_tokens = default_max_tokens;
    std::optional<std::int64_t> seed;
    /// Trace tag (task/turn/attempt). Never sent to an endpoint; keys record/replay
    /// and the scripted backend's random streams.
    std::string tag;
};

void validate(const ChatRequest& request);

struct ChatResponse
{
    std::string text;
    Usage usage;
};

struct RoleUsage
{
    std::int64_t api_calls = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;

    auto operator==(const RoleUsage&) const -> bool = default;
    auto operator+=(const RoleUsage& other) -> RoleUsage&;
};

/// Per-role call and token counters. Totals are always derived from the roles.
class UsageLedger
{
  public:
    void record(AgentRole role, const Usage& usage);

    /// Adds pre-aggregated counters for one role (deserialization, reports).
    void add(AgentRole role, const RoleUsage& counts);

    [[nodiscard]] auto at(AgentRole role) const -> const RoleUsage&;
    [[nodiscard]] auto total() const -> RoleUsage;

    auto merge(const UsageLedger& other) -> UsageLedger&;

    auto operator==(const UsageLedger&) const -> bool = default;

  private:
    std::array<RoleUsage, all_roles.size()> _roles {};
};

/// Component-wise sum; commutative and associative, empty ledger is the identity.
[[nodiscard]] auto merge_ledgers(const UsageLedger& a, const UsageLedger& b) -> UsageLedger;

void to_json(Value& j, const UsageLedger& ledger);
void from_json(const Value& j, UsageLedger& ledger);

class TransportError : public Error
{
  public:
    using Error::Error;
};

class ContextOverflowError : public Error
{
  public:
    using Error::Error;
};

/// A chat-completion endpoint. Implementations must be safe to call from
/// several attempt workers at once.
class ModelBackend
{
  public:
    virtual ~ModelBackend() = default;
    virtual auto send(const ChatRequest& request, AgentRole role) -> ChatResponse = 0;
};

/// Validates the request, calls the backend and records exactly one api call
/// plus the reported usage for `role` in `ledger`.
auto complete(ModelBackend& backend, const ChatRequest& request, AgentRole role, UsageLedger& ledger) -> ChatResponse;

/// Stable digest of (role, messages); keys record/replay lookups.
[[nodiscard]] auto request_fingerprint(const ChatRequest& request, AgentRole role) -> std::string;

/// Per-run accumulator for ledgers produced by concurrent workers.
class LedgerAccumulator
{
  public:
    void add(const UsageLedger& ledger);
    [[nodiscard]] auto snapshot() const -> UsageLedger;

  private:
    mutable std::mutex _mutex;
    UsageLedger _ledger;
};

} // namespace atris
