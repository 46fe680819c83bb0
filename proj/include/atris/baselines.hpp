// SPDX-License-Identifier: Apache-2.0
//
// Step-level comparison methods: direct execution, Weighted Best-of-N and
// Sequential Revision. Both N-candidate methods pick, at every step, the
// canonical group with the highest summed score and commit its first member
// to the real environment.
#pragma once

#include <atris/orchestrator.hpp>
#include <atris/parser.hpp>

#include <optional>
#include <span>
#include <string>

namespace atris
{

struct ScoredCandidate
{
    std::string output; // raw action-agent text
    std::string canonical;
    int score = 1;
    std::string rationale;
    std::optional<std::string> suggestion;
};

/// Throws InvariantError when the score lies outside [1, 10].
void validate(const ScoredCandidate& candidate);

/// Grouping key for identical solutions: canonicalize_calls() for call lists,
/// "reply:" + text for natural replies, "malformed:" + text for unparseable lists.
[[nodiscard]] auto canonical_form(std::string_view output) -> std::string;

/// Index of the first-occurring member of the group with the highest summed
/// score; ties go to the group that occurs first. Throws InvariantError when empty.
[[nodiscard]] auto aggregate_bon(std::span<const ScoredCandidate> candidates) -> std::size_t;

/// run_turn with N = 0.
[[nodiscard]] auto run_direct(const TurnInput& input, Environment& env, const RunConfig& config,
                              ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult;

/// N = config.n_attempts candidates per step, scored independently by the scorer role.
[[nodiscard]] auto run_weighted_bon(const TurnInput& input, Environment& env, const RunConfig& config,
                                    ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult;

/// N candidates per step generated in sequence; candidate k sees the
/// evaluations and suggestions (never the scores) of candidates < k.
[[nodiscard]] auto run_sequential_revision(const TurnInput& input, Environment& env, const RunConfig& config,
                                           ModelBackend& backend, const PromptLibrary& prompts) -> TurnResult;

} // namespace atris
