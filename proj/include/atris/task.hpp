// SPDX-License-Identifier: Apache-2.0
//
// Task files: an environment, its starting state, the user turns and what a
// successful run must leave behind.
//
//   {
//     "task_id": "vault-pay-rent",
//     "environment": "vault",
//     "initial_state": {"accounts": {"A": 100, "B": 0}},
//     "tools": ["balance", "transfer"],
//     "turns": ["Pay 30 from A to B."],
//     "expectation": {
//       "final_state": {"accounts": {"A": 70, "B": 30}},
//       "required_calls": ["transfer(src=\"A\", dst=\"B\", amount=30)"]
//     }
//   }
//
// A file holds one task object, a list of them, or {"tasks": [...]}.
#pragma once

#include <atris/environment.hpp>
#include <atris/metrics.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace atris
{

struct TaskSpec
{
    std::string task_id;
    std::string env_id;
    std::optional<Value> initial_state;
    /// Tool subset offered to the agents; empty means every tool of the environment.
    std::vector<std::string> tools;
    std::vector<std::string> turns;
    Expectation expectation;
};

/// Throws ConfigError with a field path on invalid input.
[[nodiscard]] auto parse_task(const Value& j, const std::string& where) -> TaskSpec;
[[nodiscard]] auto load_tasks(const std::filesystem::path& path) -> std::vector<TaskSpec>;

/// Environment in the task's initial state.
[[nodiscard]] auto make_task_environment(const TaskSpec& task) -> std::unique_ptr<Environment>;

/// Tool specs offered for the task, in the environment's order.
[[nodiscard]] auto task_tools(const TaskSpec& task, const Environment& env) -> std::vector<ToolSpec>;

} // namespace atris
