// SPDX-License-Identifier: Apache-2.0
//
// Simulator training corpus: ground-truth executions from real environments,
// failure elicitation, inverse-frequency rebalancing and line-delimited SFT
// emission.
#pragma once

#include <atris/environment.hpp>
#include <atris/orchestrator.hpp>

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace atris
{

inline constexpr std::string_view provenance_real = "real";

/// One (state, history, action) → outcome example. Every field describes
/// real execution; `provenance` records that.
struct SftInstance
{
    std::string env_id;
    EnvironmentState init_state;
    std::vector<Step> history;
    std::vector<ToolCall> action;
    std::vector<Value> target;
    OutcomeTypeKey key;
    std::string provenance = std::string(provenance_real);

    auto operator==(const SftInstance&) const -> bool = default;
};

void to_json(Value& j, const SftInstance& s);
void from_json(const Value& j, SftInstance& s);

/// Key of an executed batch: the first failing call's type, else the first call's.
[[nodiscard]] auto instance_key(const ToolOutcome& outcome) -> OutcomeTypeKey;

struct DatagenQuery
{
    std::string query_id;
    std::string env_id;
    std::optional<Value> initial_state;
    std::string query;
};

/// Runs every (query, backend) pair as a direct episode against a fresh real
/// environment and records one instance per executed step.
[[nodiscard]] auto collect_episodes(std::span<const DatagenQuery> queries, std::span<ModelBackend* const> backends,
                                    const PromptLibrary& prompts, const RunConfig& config,
                                    std::vector<Incident>* incidents = nullptr) -> std::vector<SftInstance>;

/// Asks `backend` (role action) for calls that trigger `failure_label` on each
/// tool (or only `tools` when given), executes them from the environment's
/// current state and keeps those classified with that label.
/// Throws InvariantError when the label is not documented by `env`.
[[nodiscard]] auto elicit_targeted_failures(const Environment& env, std::string_view failure_label,
                                            ModelBackend& backend, const PromptLibrary& prompts,
                                            const RunConfig& config, std::span<const std::string> tools = {},
                                            std::vector<Incident>* incidents = nullptr) -> std::vector<SftInstance>;

class OutcomeFrequencyTable
{
  public:
    /// Throws InvariantError for counts below 1.
    void add(const OutcomeTypeKey& key, std::int64_t count = 1);

    [[nodiscard]] auto counts() const -> const std::map<OutcomeTypeKey, std::int64_t>& { return _counts; }
    [[nodiscard]] auto total() const -> std::int64_t { return _total; }
    [[nodiscard]] auto empty() const -> bool { return _counts.empty(); }

  private:
    std::map<OutcomeTypeKey, std::int64_t> _counts;
    std::int64_t _total = 0;
};

/// Counts of instance keys. Keys in `smooth` that were never observed get count 1.
[[nodiscard]] auto build_table(std::span<const SftInstance> instances, std::span<const OutcomeTypeKey> smooth = {})
    -> OutcomeFrequencyTable;

/// Documented (tool, label) keys of an environment, success included.
[[nodiscard]] auto documented_keys(const Environment& env) -> std::vector<OutcomeTypeKey>;

/// weight(k) = (1/count(k)) / sum_j (1/count(j)).
[[nodiscard]] auto compute_weights(const OutcomeFrequencyTable& table) -> std::map<OutcomeTypeKey, double>;

class EmptyKeyError : public Error
{
  public:
    using Error::Error;
};

/// k draws with replacement. Each instance is drawn with probability proportional to
/// its key's weight, so every key in the table carries the same total mass.
[[nodiscard]] auto sample_rebalanced(std::span<const SftInstance> instances, const OutcomeFrequencyTable& table,
                                     std::size_t k, std::uint64_t seed) -> std::vector<SftInstance>;

/// Simulator-prompt text for an instance, identical to what a learned simulator sees.
[[nodiscard]] auto sft_prompt(const PromptLibrary& prompts, const SftInstance& instance) -> std::string;

/// Writes `{prompt, target, key, ...replay fields}` lines; returns the count.
auto emit_sft(std::span<const SftInstance> instances, const PromptLibrary& prompts,
              const std::filesystem::path& path) -> std::size_t;

struct SftRow
{
    std::string prompt;
    std::string target;
    SftInstance instance;
};

[[nodiscard]] auto read_sft(const std::filesystem::path& path) -> std::vector<SftRow>;

struct AuditReport
{
    std::size_t checked = 0;
    std::vector<std::size_t> mismatches;
    std::vector<std::size_t> not_real;

    [[nodiscard]] auto ok() const -> bool { return mismatches.empty() && not_real.empty(); }
};

/// Replays every instance's history from its initial state in a fresh real
/// environment and checks that its action reproduces the target byte-exactly.
[[nodiscard]] auto audit_corpus(std::span<const SftInstance> instances) -> AuditReport;

} // namespace atris
