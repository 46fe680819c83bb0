// SPDX-License-Identifier: Apache-2.0
//
// Canonical data model shared by every stage of the engine: messages, tool
// specifications, calls, outcomes, trajectories, attempts and summaries.
//
// All types are plain value objects. Operations that "modify" a trajectory
// return a new value and leave the input untouched, so records can be shared
// freely between concurrent attempt workers.
#pragma once

#include <atris/error.hpp>

#include <json.hpp>

#include <compare>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace atris
{

/// A literal argument value or a structured tool payload.
///
/// Literals are string | integer | decimal | boolean | null | list | map. Key
/// order of maps is preserved so payloads serialize byte-identically.
using Value = nlohmann::ordered_json;

class TurnClosedError : public Error
{
  public:
    TurnClosedError(): Error("turn is closed: no step may be appended after the closing reply") {}
};

enum class Role
{
    system,
    user,
    assistant,
    tool,
};

[[nodiscard]] auto to_string(Role role) -> std::string_view;
[[nodiscard]] auto role_from_string(std::string_view text) -> Role;

struct Message
{
    Role role = Role::user;
    std::string content;

    auto operator==(const Message&) const -> bool = default;
};

/// Throws InvariantError when a user or tool message is empty.
[[nodiscard]] auto make_message(Role role, std::string content) -> Message;

/// `[A-Za-z_][A-Za-z0-9_.]*`
[[nodiscard]] auto is_identifier(std::string_view text) -> bool;

struct ParamSpec
{
    std::string name;
    std::string type; // string | integer | number | boolean | list | map | any
    bool required = true;
    std::string description;

    auto operator==(const ParamSpec&) const -> bool = default;
};

struct ToolSpec
{
    std::string name;
    std::string description;
    std::vector<ParamSpec> parameters;

    auto operator==(const ToolSpec&) const -> bool = default;
};

void validate(const ToolSpec& spec);

struct ToolCall
{
    std::string tool;
    std::vector<std::pair<std::string, Value>> arguments;

    /// Argument by name, or nullptr.
    [[nodiscard]] auto arg(std::string_view name) const -> const Value*;

    auto operator==(const ToolCall&) const -> bool = default;
};

void validate(const ToolCall& call);

/// (environment-qualified tool, outcome label). All successes of a tool share
/// the single label "success".
struct OutcomeTypeKey
{
    std::string tool;
    std::string otype;

    auto operator<=>(const OutcomeTypeKey&) const = default;
    auto operator==(const OutcomeTypeKey&) const -> bool = default;

    [[nodiscard]] auto is_success() const -> bool { return otype == "success"; }
    [[nodiscard]] auto str() const -> std::string { return tool + "/" + otype; }
};

inline constexpr std::string_view success_label = "success";
inline constexpr std::string_view other_failure_label = "other_failure";

enum class Status
{
    success,
    failure,
};

[[nodiscard]] auto to_string(Status status) -> std::string_view;

/// True when the payload is an object carrying an "error" field.
[[nodiscard]] auto is_error_payload(const Value& payload) -> bool;

/// `{"error": message}`
[[nodiscard]] auto error_payload(std::string_view message) -> Value;

/// Observation for one executed batch: one payload and one outcome type per call.
struct ToolOutcome
{
    std::vector<Value> payloads;
    Status status = Status::success;
    std::vector<OutcomeTypeKey> types;

    auto operator==(const ToolOutcome&) const -> bool = default;
};

/// Builds an outcome whose status is derived from the payloads (failure iff
/// any payload is an error object).
[[nodiscard]] auto make_outcome(std::vector<Value> payloads, std::vector<OutcomeTypeKey> types) -> ToolOutcome;

void validate(const ToolOutcome& outcome);

struct Step
{
    std::vector<ToolCall> calls;
    ToolOutcome outcome;

    auto operator==(const Step&) const -> bool = default;
};

void validate(const Step& step);

/// H_t: the base conversation (H_0 plus committed turns) and the current
/// turn's steps. Once the closing reply is set the history is frozen.
struct TurnHistory
{
    std::vector<Message> base;
    std::vector<Step> steps;
    std::optional<std::string> closing_reply;

    [[nodiscard]] auto closed() const -> bool { return closing_reply.has_value(); }

    auto operator==(const TurnHistory&) const -> bool = default;
};

/// Returns `history` with `step` appended. Throws TurnClosedError when closed.
[[nodiscard]] auto append_step(const TurnHistory& history, Step step) -> TurnHistory;

/// Returns `history` with its closing reply set. Throws TurnClosedError when already closed.
[[nodiscard]] auto close_turn(const TurnHistory& history, std::string reply) -> TurnHistory;

enum class Verdict
{
    pass,
    fail,
};

[[nodiscard]] auto to_string(Verdict verdict) -> std::string_view;

struct EvaluationResult
{
    Verdict verdict = Verdict::fail;
    std::string rationale;
    std::optional<std::string> suggestion;

    auto operator==(const EvaluationResult&) const -> bool = default;
};

void validate(const EvaluationResult& evaluation);

/// One simulated trajectory H^(k), 1-based index.
struct AttemptRecord
{
    int index = 1;
    TurnHistory trajectory;
    std::optional<EvaluationResult> evaluation;
    bool discarded = false;
    bool step_capped = false;

    auto operator==(const AttemptRecord&) const -> bool = default;
};

/// Checks that attempt indices are unique and contiguous from 1.
void validate_attempt_set(std::span<const AttemptRecord> attempts);

struct Summary
{
    std::string recommendation;
    std::string rationale;

    auto operator==(const Summary&) const -> bool = default;
};

void validate(const Summary& summary);

/// Normal form of a literal: double-quoted strings with escapes, lowercase
/// booleans, `null`, shortest round-trip decimals (always with a fraction or
/// exponent), and maps with sorted keys.
[[nodiscard]] auto render_literal(const Value& literal, bool sort_keys = true) -> std::string;

/// `tool(a=1,b=2)` with arguments sorted by name. Two calls have the same
/// canonical form iff they differ at most in argument order and literal
/// surface spelling.
[[nodiscard]] auto canonicalize_call(const ToolCall& call) -> std::string;

/// Canonical form of a whole batch: `[c1,c2]`, call order preserved.
[[nodiscard]] auto canonicalize_calls(std::span<const ToolCall> calls) -> std::string;

/// `tool(b=2, a=1)` keeping argument and map-key order; parses back to the same call.
[[nodiscard]] auto format_call(const ToolCall& call) -> std::string;

/// `[call1, call2]` in the action-agent output grammar.
[[nodiscard]] auto format_calls(std::span<const ToolCall> calls) -> std::string;

/// Compact JSON list of payloads, e.g. `[{"balance":100}]`.
[[nodiscard]] auto format_payloads(std::span<const Value> payloads) -> std::string;

} // namespace atris
