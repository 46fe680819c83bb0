// SPDX-License-Identifier: Apache-2.0
//
// Task scoring, simulator fidelity and usage reports.
#pragma once

#include <atris/orchestrator.hpp>

#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace atris
{

/// What a successful task looks like: a final world state (by fingerprint)
/// and/or calls that must appear, in order, among the committed calls.
struct Expectation
{
    std::optional<std::string> fingerprint;
    /// canonicalize_call() forms.
    std::vector<std::string> required_calls;
};

enum class ScoreReason
{
    state_match,
    milestone_match,
    mismatch,
    discarded,
};

[[nodiscard]] auto to_string(ScoreReason reason) -> std::string_view;

struct TaskScore
{
    std::string task_id;
    bool success = false;
    ScoreReason reason = ScoreReason::mismatch;
};

/// Throws ConfigError when the expectation checks nothing.
[[nodiscard]] auto score_task(std::string_view task_id, std::span<const TurnResult> turns,
                              std::string_view final_fingerprint, const Expectation& expectation) -> TaskScore;

class Embedder
{
  public:
    virtual ~Embedder() = default;
    [[nodiscard]] virtual auto embed(std::string_view text) const -> std::vector<double> = 0;
};

/// Lowercased alphanumeric tokens hashed into `dim` buckets with counts.
class HashedBagEmbedder final : public Embedder
{
  public:
    explicit HashedBagEmbedder(std::size_t dim = 4096): _dim(dim) {}

    [[nodiscard]] auto embed(std::string_view text) const -> std::vector<double> override;

    [[nodiscard]] static auto tokens(std::string_view text) -> std::vector<std::string>;
    [[nodiscard]] auto bucket(std::string_view token) const -> std::size_t;

  private:
    std::size_t _dim;
};

/// Cosine of two equal-length vectors clamped to [-1, 1]; 0 when either is zero.
[[nodiscard]] auto cosine(std::span<const double> a, std::span<const double> b) -> double;

[[nodiscard]] auto similarity(std::string_view a, std::string_view b, const Embedder& embedder) -> double;

inline constexpr double high_fidelity_threshold = 0.95;

struct FidelityReport
{
    std::size_t pairs = 0;
    double mean_similarity = 0.0;
    double hf_ratio = 0.0;
    double threshold = high_fidelity_threshold;
};

/// Pairs are (candidate simulator output, perfect simulator output). hf_ratio
/// counts similarities strictly above the threshold. Throws InvariantError when empty.
[[nodiscard]] auto fidelity_report(std::span<const std::pair<std::string, std::string>> pairs,
                                   const Embedder& embedder, double threshold = high_fidelity_threshold)
    -> FidelityReport;

using TextPair = std::pair<std::string, std::string>;

/// One pair per simulated step: the step's serialized payloads against a
/// perfect replay of the same calls, in order, from `base`.
[[nodiscard]] auto step_pairs(std::span<const Step> steps, const Environment& base) -> std::vector<TextPair>;

/// Mean step similarity of one trajectory; 1.0 when it has no steps.
[[nodiscard]] auto trajectory_similarity(std::span<const TextPair> pairs, const Embedder& embedder) -> double;

/// One scored run of a method at some N.
struct RunRecord
{
    std::string method;
    int n = 0;
    std::string task_id;
    bool success = false;
    UsageLedger ledger;
};

struct ReportRow
{
    std::string method;
    int n = 0;
    std::size_t runs = 0;
    std::size_t successes = 0;
    UsageLedger ledger;

    [[nodiscard]] auto accuracy() const -> double
    {
        return runs == 0 ? 0.0 : 100.0 * static_cast<double>(successes) / static_cast<double>(runs);
    }
};

/// Rows per (method, N) in order of first appearance, ledgers summed.
[[nodiscard]] auto ledger_report(std::span<const RunRecord> records) -> std::vector<ReportRow>;

/// Plain-text table: Method, N, ACC (%), then Total/Action/Self-Eval for API
/// calls, completion tokens and prompt tokens.
[[nodiscard]] auto render_report(std::span<const ReportRow> rows) -> std::string;

void to_json(Value& j, const ReportRow& row);

} // namespace atris
