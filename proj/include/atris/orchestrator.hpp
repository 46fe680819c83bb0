// SPDX-License-Identifier: Apache-2.0
//
// One user turn: up to N simulated attempts, self-evaluation of each attempt,
// a summary of all attempts, and the single committed real execution.
#pragma once

#include <atris/environment.hpp>
#include <atris/session.hpp>
#include <atris/simulator.hpp>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atris
{

enum class AttemptMode
{
    sequential,
    parallel,
};

[[nodiscard]] auto to_string(AttemptMode mode) -> std::string_view;
[[nodiscard]] auto attempt_mode_from_string(std::string_view text) -> AttemptMode;

struct RunConfig
{
    int n_attempts = 5;
    AttemptMode mode = AttemptMode::sequential;
    bool early_stop = true;
    bool include_eval_in_context = true;
    bool use_summarizer = true;
    /// Also show simulated returns inside the `<Action>` blocks of prior attempts.
    bool inline_outcomes = false;
    int step_cap = 10;
    int context_cap_tokens = default_context_cap_tokens;
    /// Worker threads for parallel attempts and BoN candidates.
    int jobs = 1;
    SessionOptions session;
};

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);

/// What a baseline step considered before committing (Weighted BoN / Sequential Revision).
struct CandidateLog
{
    int step = 0;
    int index = 0;
    std::string output;
    std::string canonical;
    int score = 1;
    std::string evaluation;
    std::optional<std::string> suggestion;
    bool chosen = false;
};

struct TurnResult
{
    std::vector<AttemptRecord> attempts;
    std::optional<Summary> summary;
    TurnHistory final_trajectory;
    bool final_step_capped = false;
    UsageLedger ledger;
    bool discarded = false;
    std::vector<Incident> incidents;
    std::vector<PromptRecord> prompts;
    std::vector<CandidateLog> candidates;
    std::string fingerprint_before;
    std::string fingerprint_after;
};

void to_json(Value& j, const CandidateLog& c);
void to_json(Value& j, const TurnResult& r);

/// Everything about the turn that attempts and the final execution share.
struct TurnInput
{
    std::string task_id;
    int turn_id = 0;
    std::vector<ToolSpec> tools;
    /// Prior conversation: earlier turns' user messages, calls, outcomes and replies.
    std::vector<Message> base;
    std::string query;
};

struct AttemptContext
{
    const TurnInput& input;
    const RunConfig& config;
    /// Real state at turn start; every attempt simulates from here.
    EnvironmentState base_state;
};

[[nodiscard]] auto attempt_tag(const TurnInput& input, int attempt) -> std::string;
[[nodiscard]] auto final_tag(const TurnInput& input) -> std::string;

/// Executes one batch of calls for the step loop; receives the trajectory's prior steps.
using StepExecutor = std::function<ToolOutcome(std::span<const ToolCall>, std::span<const Step>)>;

struct LoopResult
{
    TurnHistory trajectory;
    bool step_capped = false;
    bool overflow = false;
};

/// The action-agent step loop shared by attempts, final execution and the
/// direct baseline: ask, parse, execute calls or close on a reply, until the
/// step cap. A malformed call list closes the trajectory with the raw text
/// and records an incident.
[[nodiscard]] auto drive_steps(Session& session, const TurnInput& input, const RunConfig& config,
                               const Message& user_message, const StepExecutor& execute) -> LoopResult;

/// System message plus prior conversation plus the turn's user message.
[[nodiscard]] auto action_prefix(const PromptLibrary& prompts, const TurnInput& input, const Message& user_message)
    -> std::vector<Message>;

/// Messages for a trajectory's steps: assistant call lists and tool outcomes.
[[nodiscard]] auto step_messages(std::span<const Step> steps) -> std::vector<Message>;

/// Attempt `index` (1-based). In parallel mode `prior` must be empty.
[[nodiscard]] auto run_attempt(Session& session, const AttemptContext& context, Simulator& sim,
                               std::span<const AttemptRecord> prior, int index) -> AttemptRecord;

/// Self-evaluation of a finished attempt; exactly one self_eval call.
[[nodiscard]] auto evaluate_attempt(Session& session, const AttemptContext& context, const AttemptRecord& attempt)
    -> EvaluationResult;

/// Summarizer call, or the pass-through summary when use_summarizer is off.
[[nodiscard]] auto summarize(Session& session, const AttemptContext& context, std::span<const AttemptRecord> attempts)
    -> Summary;

/// The full turn. The real environment is touched only by the final execution.
[[nodiscard]] auto run_turn(const TurnInput& input, Environment& env, Simulator& sim, const RunConfig& config,
                            ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult;

/// Conversation after a committed turn: base + user query + final steps + reply.
[[nodiscard]] auto commit_turn(const TurnInput& input, const TurnHistory& final_trajectory) -> std::vector<Message>;

/// History text for evaluator/summarizer prompts: prior conversation and the current query.
[[nodiscard]] auto conversation_history(const TurnInput& input) -> std::string;

} // namespace atris
