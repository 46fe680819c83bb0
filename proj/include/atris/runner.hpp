// SPDX-License-Identifier: Apache-2.0
//
// Run orchestration behind the command-line tool: configuration files,
// backend resolution, task execution, run directories and reports.
#pragma once

#include <atris/baselines.hpp>
#include <atris/datagen.hpp>
#include <atris/metrics.hpp>
#include <atris/task.hpp>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace atris
{

enum class Method
{
    atris_seq,
    atris_par,
    direct,
    bon,
    seqrev,
};

[[nodiscard]] auto to_string(Method method) -> std::string_view;
[[nodiscard]] auto method_from_string(std::string_view text) -> Method;

struct SimulatorSettings
{
    SimulatorKind kind = SimulatorKind::perfect;
    std::vector<Fault> faults;
    std::map<std::string, std::vector<Value>> table;
};

struct RunSettings
{
    std::vector<std::filesystem::path> task_files;
    Method method = Method::atris_seq;
    std::vector<int> n_values {5};
    std::string backend = "scripted:demo";
    SimulatorSettings simulator;
    RunConfig run;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string default_model;
    std::map<AgentRole, std::string> models;
    std::filesystem::path out_dir = "runs";
    std::optional<std::filesystem::path> prompt_dir;
    /// Directory relative paths in the config were resolved against.
    std::filesystem::path base_dir = ".";
    /// The configuration as loaded, overrides applied; hashed into the manifest.
    Value raw = Value::object();
};

/// Reads a JSON run configuration. Relative paths resolve against the file's directory.
[[nodiscard]] auto load_run_settings(const std::filesystem::path& path) -> RunSettings;
[[nodiscard]] auto parse_run_settings(const Value& j, const std::filesystem::path& base_dir) -> RunSettings;

/// Command-line overrides; unset members keep the configured value.
struct RunOverrides
{
    std::optional<std::string> method;
    std::optional<std::vector<int>> n_values;
    std::optional<std::string> backend;
    std::optional<std::string> simulator;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
    std::optional<std::filesystem::path> out_dir;
    std::optional<std::filesystem::path> prompt_dir;
    std::optional<bool> record_prompts;
};

void apply_overrides(RunSettings& settings, const RunOverrides& overrides);

/// Comma-separated list of non-negative integers, e.g. "0,3,5,8,10".
[[nodiscard]] auto parse_n_list(std::string_view text) -> std::vector<int>;

/// Locates a named script: `<base>/scripts/<name>.json`, `<base>/../data/scripts/<name>.json`,
/// the bundled data directory, then `<base>/<name>.json`.
[[nodiscard]] auto resolve_script(std::string_view name, const std::filesystem::path& base_dir)
    -> std::filesystem::path;

/// `scripted:<name|path>`, `replay:<path>` or `remote`.
[[nodiscard]] auto make_backend(std::string_view spec, const std::filesystem::path& base_dir,
                                std::optional<std::uint64_t> seed, const std::string& default_model = {},
                                const std::map<AgentRole, std::string>& models = {}) -> std::unique_ptr<ModelBackend>;

[[nodiscard]] auto prompt_library_for(const std::optional<std::filesystem::path>& dir) -> PromptLibrary;

struct TaskRun
{
    std::string task_id;
    Method method = Method::atris_seq;
    int n = 0;
    std::vector<TurnResult> turns;
    TaskScore score;
    UsageLedger ledger;
    /// Simulated steps of every attempt against a perfect replay; empty under the perfect simulator.
    std::vector<TextPair> fidelity_pairs;
};

/// All turns of one task with one method at one N, scored against its expectation.
[[nodiscard]] auto run_task(const TaskSpec& task, Method method, int n, const RunConfig& config,
                            const SimulatorSettings& simulator, ModelBackend& backend, const PromptLibrary& prompts)
    -> TaskRun;

/// One line of results.jsonl. Holds no timestamps so replays compare byte-exactly.
[[nodiscard]] auto result_record(const TaskRun& run) -> Value;

struct RunOutput
{
    std::filesystem::path run_dir;
    std::vector<TaskRun> runs;
    std::vector<ReportRow> rows;
};

/// Executes every (N, task) pair and writes manifest.json, transcript.jsonl,
/// exchanges.jsonl, results.jsonl and report.txt into a fresh run directory,
/// plus pairs.jsonl for the fidelity command when the simulator is not perfect.
/// `backend` replaces the configured backend when given.
auto execute_run(const RunSettings& settings, ModelBackend* backend = nullptr) -> RunOutput;

struct DatagenSettings
{
    std::filesystem::path queries;
    std::vector<std::string> agents;
    std::optional<std::string> elicitor;
    /// env id → failure label → minimum matching rows.
    std::map<std::string, std::map<std::string, int>> quotas;
    int max_rounds = 5;
    bool rebalance = true;
    std::size_t sample_k = 0; // 0: as many draws as collected instances
    std::uint64_t seed = 0;
    RunConfig run;
    std::filesystem::path out_dir = "runs";
    std::optional<std::filesystem::path> prompt_dir;
    std::filesystem::path base_dir = ".";
    Value raw = Value::object();
};

[[nodiscard]] auto load_datagen_settings(const std::filesystem::path& path) -> DatagenSettings;
[[nodiscard]] auto load_queries(const std::filesystem::path& path) -> std::vector<DatagenQuery>;

struct DatagenOutput
{
    std::filesystem::path run_dir;
    std::filesystem::path corpus;
    std::vector<SftInstance> collected;
    std::vector<SftInstance> emitted;
    std::map<OutcomeTypeKey, std::int64_t> yields;
    std::vector<std::string> shortfalls;
};

auto execute_datagen(const DatagenSettings& settings) -> DatagenOutput;

/// Reads `{"candidate": ..., "perfect": ...}` lines.
[[nodiscard]] auto load_pairs(const std::filesystem::path& path) -> std::vector<std::pair<std::string, std::string>>;

/// Reads results.jsonl (or a run directory containing it).
[[nodiscard]] auto load_results(const std::filesystem::path& path) -> std::vector<RunRecord>;

/// Short hex digest of a JSON value's compact dump.
[[nodiscard]] auto config_hash(const Value& config) -> std::string;

} // namespace atris
