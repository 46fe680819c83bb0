// SPDX-License-Identifier: Apache-2.0
//
// Simulators answer "what would the environment return for these calls, from
// this starting state, after this attempt's earlier steps?"
//
//  - PerfectSimulator replays the history on a private clone of the real
//    environment and executes the calls there.
//  - LearnedSimulator asks a model through the simulator prompt.
//  - ScriptedSimulator is a test double with a fault schedule and an outcome table.
#pragma once

#include <atris/environment.hpp>
#include <atris/session.hpp>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace atris
{

enum class SimulatorKind
{
    perfect,
    learned,
    scripted,
};

[[nodiscard]] auto to_string(SimulatorKind kind) -> std::string_view;
[[nodiscard]] auto simulator_kind_from_string(std::string_view text) -> SimulatorKind;

class SimulationFailed : public Error
{
  public:
    using Error::Error;
};

class Simulator
{
  public:
    virtual ~Simulator() = default;

    [[nodiscard]] virtual auto kind() const -> SimulatorKind = 0;

    /// Outcome of `calls` given the turn's base state and the attempt's own
    /// prior steps. Throws SimulationFailed when no outcome can be produced.
    virtual auto simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                          std::span<const Step> history) -> ToolOutcome
        = 0;

    /// Independent instance for a concurrent worker.
    [[nodiscard]] virtual auto fork() const -> std::unique_ptr<Simulator> = 0;
};

/// Runs simulate() and converts SimulationFailed into an all-error outcome,
/// logging an incident on the session.
[[nodiscard]] auto simulate_total(Simulator& sim, Session& session, std::span<const ToolCall> calls,
                                  const EnvironmentState& base, std::span<const Step> history, std::string_view env_id)
    -> ToolOutcome;

class PerfectSimulator final : public Simulator
{
  public:
    /// `prototype` supplies the environment type; its state is ignored.
    explicit PerfectSimulator(const Environment& prototype);

    [[nodiscard]] auto kind() const -> SimulatorKind override { return SimulatorKind::perfect; }
    auto simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                  std::span<const Step> history) -> ToolOutcome override;
    [[nodiscard]] auto fork() const -> std::unique_ptr<Simulator> override;

  private:
    std::unique_ptr<Environment> _prototype;
};

class LearnedSimulator final : public Simulator
{
  public:
    LearnedSimulator(std::string env_id, std::vector<ToolSpec> tools);

    [[nodiscard]] auto kind() const -> SimulatorKind override { return SimulatorKind::learned; }
    auto simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                  std::span<const Step> history) -> ToolOutcome override;
    [[nodiscard]] auto fork() const -> std::unique_ptr<Simulator> override;

  private:
    std::string _envId;
    std::vector<ToolSpec> _tools;
};

/// Bindings for the simulator template. Shared with corpus emission so
/// training prompts and inference prompts are identical.
[[nodiscard]] auto simulator_bindings(std::span<const ToolSpec> tools, const EnvironmentState& base,
                                      std::span<const Step> history, std::span<const ToolCall> calls)
    -> PromptBindings;

struct Fault
{
    int step = 1; // 1-based index of the simulated step within the attempt
    std::string label;
    std::string message;
    double probability = 1.0;
};

class ScriptedSimulator final : public Simulator
{
  public:
    /// Outcomes come from, in order: the fault schedule, the table keyed on
    /// canonicalize_calls(), then `fallback` (typically a PerfectSimulator).
    ScriptedSimulator(std::string env_id, std::vector<Fault> faults,
                      std::map<std::string, std::vector<Value>> table, std::unique_ptr<Simulator> fallback,
                      std::uint64_t seed = 0);

    [[nodiscard]] auto kind() const -> SimulatorKind override { return SimulatorKind::scripted; }
    auto simulate(Session& session, std::span<const ToolCall> calls, const EnvironmentState& base,
                  std::span<const Step> history) -> ToolOutcome override;
    [[nodiscard]] auto fork() const -> std::unique_ptr<Simulator> override;

  private:
    std::string _envId;
    std::vector<Fault> _faults;
    std::map<std::string, std::vector<Value>> _table;
    std::unique_ptr<Simulator> _fallback;
    std::uint64_t _seed;
};

/// Outcome types for simulated payloads: error-field presence means failure
/// (labelled other_failure), anything else is success.
[[nodiscard]] auto heuristic_types(std::string_view env_id, std::span<const ToolCall> calls,
                                   std::span<const Value> payloads) -> std::vector<OutcomeTypeKey>;

} // namespace atris
