// SPDX-License-Identifier: Apache-2.0
//
// Stateful tool environments with deep-copy snapshot/restore.
//
// An environment owns a JSON world state. Executing a batch applies calls left
// to right; a failing call yields an error payload, leaves the state untouched
// and the rest of the batch still runs. Two reference environments ship with
// the library: `vault` (a small account ledger) and `fileio` (a flat file
// store with permissions).
#pragma once

#include <atris/conversation.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atris
{

struct EnvironmentState
{
    std::string env_id;
    Value blob;
    std::int64_t version = 0;

    auto operator==(const EnvironmentState&) const -> bool = default;
};

void to_json(Value& j, const EnvironmentState& s);
void from_json(const Value& j, EnvironmentState& s);

/// Hex digest of (env_id, blob); identical world states have identical fingerprints.
[[nodiscard]] auto fingerprint(const EnvironmentState& state) -> std::string;

class EnvMismatchError : public Error
{
  public:
    using Error::Error;
};

/// Raised by tool handlers; becomes `{"error": message}` in the outcome.
struct ToolFailure
{
    std::string label;
    std::string message;
};

class Environment
{
  public:
    virtual ~Environment() = default;

    [[nodiscard]] virtual auto id() const -> std::string_view = 0;
    [[nodiscard]] virtual auto tools() const -> const std::vector<ToolSpec>& = 0;

    /// Documented failure labels, not including "success" or "other_failure".
    [[nodiscard]] virtual auto failure_labels() const -> std::vector<std::string> = 0;

    /// Prose description of a tool's implemented rules and failure modes.
    [[nodiscard]] virtual auto implementation_notes(std::string_view tool) const -> std::string = 0;

    /// Fresh instance with a deep copy of this environment's current state.
    [[nodiscard]] virtual auto clone() const -> std::unique_ptr<Environment> = 0;

    /// Executes a batch; one payload per call, mutations applied in order.
    auto execute(std::span<const ToolCall> calls) -> ToolOutcome;

    [[nodiscard]] auto snapshot() const -> EnvironmentState;

    /// Throws EnvMismatchError when `state` belongs to another environment.
    void restore(const EnvironmentState& state);

    /// Maps a payload produced by execute() for `call` to its outcome type.
    [[nodiscard]] auto classify(const ToolCall& call, const Value& payload) const -> OutcomeTypeKey;

    [[nodiscard]] auto fingerprint() const -> std::string;

    [[nodiscard]] auto tool(std::string_view name) const -> const ToolSpec*;

  protected:
    Environment(Value initial, std::int64_t version = 0);

    struct Applied
    {
        Value payload;
        bool mutated = false;
    };

    /// Runs one validated call against `state` (a private working copy).
    /// Throws ToolFailure; on failure the working copy is discarded.
    virtual auto apply(const ToolCall& call, Value& state) const -> Applied = 0;

    /// Error message prefix → failure label, consulted by classify().
    [[nodiscard]] virtual auto error_labels() const -> std::vector<std::pair<std::string, std::string>> = 0;

    [[nodiscard]] auto state() const -> const Value& { return _state; }

  private:
    Value _state;
    std::int64_t _version;
};

/// Label shared by every environment for calls to tools it does not define.
inline constexpr std::string_view unknown_tool_label = "unknown_tool";
inline constexpr std::string_view bad_argument_label = "bad_argument_type";

/// Instantiates a reference environment ("vault" or "fileio"), optionally
/// from an explicit initial state blob. Throws ConfigError on unknown ids or
/// malformed state.
[[nodiscard]] auto make_environment(std::string_view env_id, const std::optional<Value>& initial_state = std::nullopt)
    -> std::unique_ptr<Environment>;

[[nodiscard]] auto make_vault(const std::optional<Value>& initial_state = std::nullopt) -> std::unique_ptr<Environment>;
[[nodiscard]] auto make_fileio(const std::optional<Value>& initial_state = std::nullopt) -> std::unique_ptr<Environment>;

/// Reads a numeric argument as a double, or nullopt when it is not a number.
[[nodiscard]] auto as_number(const Value& v) -> std::optional<double>;

} // namespace atris
