// SPDX-License-Identifier: Apache-2.0
//
// Prompt templates and the renderers that turn conversation-core values into
// the text bound to template placeholders.
//
// Templates live as plain-text files in a prompt directory. A template is
// either a single part (`<name>.txt`, rendered as one system or user message)
// or a pair (`<name>.system.txt` + `<name>.user.txt`). Placeholders are
// `{identifier}`; braces around anything else are literal text.
#pragma once

#include <atris/conversation.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atris
{

class MissingBindingError : public Error
{
  public:
    MissingBindingError(std::string template_name, std::string placeholder);

    [[nodiscard]] auto placeholder() const -> const std::string& { return _placeholder; }

  private:
    std::string _placeholder;
};

/// One prior attempt as shown to the action agent.
struct AttemptBlock
{
    std::string action;
    std::string evaluation;
    std::string suggestion;
};

struct PromptBindings
{
    std::map<std::string, std::string, std::less<>> values;
    std::vector<AttemptBlock> attempts;
    bool include_eval = true;
};

inline constexpr std::string_view prompt_action_system = "action_system";
inline constexpr std::string_view prompt_action_user = "action_user_with_attempts";
inline constexpr std::string_view prompt_self_eval = "self_eval";
inline constexpr std::string_view prompt_simulator = "simulator";
inline constexpr std::string_view prompt_summarizer = "summarizer";
inline constexpr std::string_view prompt_bon_scorer = "bon_scorer";
inline constexpr std::string_view prompt_seqrev_eval = "seqrev_eval";
inline constexpr std::string_view prompt_final_execution = "final_execution";
inline constexpr std::string_view prompt_elicit_failure = "elicit_failure";

class PromptLibrary
{
  public:
    /// Loads every known template from `dir`. Throws ConfigError naming the missing file.
    [[nodiscard]] static auto load(const std::filesystem::path& dir) -> PromptLibrary;

    /// `ATRIS_PROMPT_DIR` when set, otherwise the bundled prompt directory.
    [[nodiscard]] static auto load_default() -> PromptLibrary;

    /// System and/or user messages for `name`. For action_user_with_attempts an
    /// empty attempt list renders the query alone.
    [[nodiscard]] auto render(std::string_view name, const PromptBindings& bindings) const -> std::vector<Message>;

    /// All parts of render() joined by a blank line.
    [[nodiscard]] auto render_text(std::string_view name, const PromptBindings& bindings) const -> std::string;

    /// `<Attempt>` blocks in the given order; Evaluation/Suggestion omitted when !include_eval.
    [[nodiscard]] auto attempt_blocks(std::span<const AttemptBlock> attempts, bool include_eval) const -> std::string;

    /// Placeholder names used by a template, in order of first appearance.
    [[nodiscard]] auto placeholders(std::string_view name) const -> std::vector<std::string>;

    /// Digest over every loaded template file, for run manifests.
    [[nodiscard]] auto hash() const -> std::string;

    [[nodiscard]] auto directory() const -> const std::filesystem::path& { return _dir; }

  private:
    struct Template
    {
        std::optional<std::string> system;
        std::optional<std::string> user;
    };

    [[nodiscard]] auto find(std::string_view name) const -> const Template&;

    std::filesystem::path _dir;
    std::map<std::string, Template, std::less<>> _templates;
};

/// Substitutes `{name}` placeholders in one pass; values are not rescanned.
[[nodiscard]] auto substitute(std::string_view body, const std::map<std::string, std::string, std::less<>>& values,
                              std::string_view template_name) -> std::string;

/// Deterministic token approximation: every run of word characters counts
/// ceil(len/4) tokens and every other non-space byte counts one.
[[nodiscard]] auto estimate_context(std::string_view text) -> std::size_t;
[[nodiscard]] auto estimate_context(std::span<const Message> messages) -> std::size_t;

/// Tool specs as a JSON list, one compact entry per line.
[[nodiscard]] auto render_tool_documents(std::span<const ToolSpec> tools) -> std::string;

/// `role: content` lines.
[[nodiscard]] auto render_history(std::span<const Message> messages) -> std::string;

/// One line per step: `[calls] → [payloads]`; "(none)" when empty.
[[nodiscard]] auto render_steps(std::span<const Step> steps) -> std::string;

/// The steps of a trajectory followed by its closing reply (or a step-cap marker).
[[nodiscard]] auto render_trajectory(const AttemptRecord& attempt) -> std::string;

/// Text of an attempt's `<Action>` block: each step's call list on its own
/// line (with outcomes when `inline_outcomes`), or the reply when no call was made.
[[nodiscard]] auto render_attempt_action(const AttemptRecord& attempt, bool inline_outcomes = false) -> std::string;

/// Per-attempt dossier for the summarizer: verdict, trajectory, evaluation, suggestion.
[[nodiscard]] auto render_simulation_history(std::span<const AttemptRecord> attempts) -> std::string;

/// Attempt blocks for the action agent, in index order.
[[nodiscard]] auto to_attempt_blocks(std::span<const AttemptRecord> attempts, bool inline_outcomes = false)
    -> std::vector<AttemptBlock>;

} // namespace atris
