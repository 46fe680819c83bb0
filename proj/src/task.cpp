// SPDX-License-Identifier: Apache-2.0
#include <atris/parser.hpp>
#include <atris/task.hpp>
#include <atris/transcript.hpp>

namespace atris
{

namespace
{

auto requiredCall(const std::string& text, const std::string& where) -> std::string
{
    try
    {
        auto const parsed = parse_action_output("[" + text + "]");
        if (parsed.calls.size() != 1)
            throw ConfigError(where + ": expected exactly one call");
        return canonicalize_call(parsed.calls.front());
    }
    catch (const ParseError& e)
    {
        throw ConfigError(where + ": " + e.what());
    }
}

} // namespace

auto parse_task(const Value& j, const std::string& where) -> TaskSpec
{
    auto task = TaskSpec {};
    auto field = std::string {};
    try
    {
        field = "task_id";
        task.task_id = j.at("task_id").get<std::string>();
        field = "environment";
        task.env_id = j.at("environment").get<std::string>();
        if (j.contains("initial_state"))
            task.initial_state = j.at("initial_state");
        field = "tools";
        if (j.contains("tools"))
            task.tools = j.at("tools").get<std::vector<std::string>>();
        field = "turns";
        task.turns = j.at("turns").get<std::vector<std::string>>();
        field = "expectation";
        auto const& e = j.at("expectation");
        if (e.contains("final_state"))
            task.expectation.fingerprint = fingerprint(EnvironmentState {task.env_id, e.at("final_state"), 0});
        if (e.contains("fingerprint"))
            task.expectation.fingerprint = e.at("fingerprint").get<std::string>();
        auto index = 0;
        for (const auto& call: e.value("required_calls", Value::array()))
        {
            task.expectation.required_calls.push_back(requiredCall(
                call.get<std::string>(), where + ".expectation.required_calls[" + std::to_string(index++) + "]"));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(where + "." + field + ": " + e.what());
    }
    if (task.turns.empty())
        throw ConfigError(where + ".turns: at least one turn is required");
    for (const auto& t: task.turns)
    {
        if (t.empty())
            throw ConfigError(where + ".turns: turns must be non-empty");
    }
    if (!task.expectation.fingerprint && task.expectation.required_calls.empty())
        throw ConfigError(where + ".expectation: needs final_state, fingerprint or required_calls");
    auto const env = make_task_environment(task);
    for (const auto& name: task.tools)
    {
        if (env->tool(name) == nullptr)
            throw ConfigError(where + ".tools: unknown tool '" + name + "' for " + task.env_id);
    }
    return task;
}

auto load_tasks(const std::filesystem::path& path) -> std::vector<TaskSpec>
{
    if (!std::filesystem::exists(path))
        throw ConfigError("task file not found: " + path.string());
    auto j = Value {};
    try
    {
        j = parse_json(read_file(path));
    }
    catch (const DecodeError& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    auto tasks = std::vector<TaskSpec> {};
    auto const& list = j.is_object() && j.contains("tasks") ? j.at("tasks") : j;
    if (list.is_array())
    {
        for (std::size_t i = 0; i < list.size(); ++i)
            tasks.push_back(parse_task(list[i], path.string() + "[" + std::to_string(i) + "]"));
    }
    else
        tasks.push_back(parse_task(list, path.string()));
    return tasks;
}

auto make_task_environment(const TaskSpec& task) -> std::unique_ptr<Environment>
{
    return make_environment(task.env_id, task.initial_state);
}

auto task_tools(const TaskSpec& task, const Environment& env) -> std::vector<ToolSpec>
{
    if (task.tools.empty())
        return env.tools();
    auto out = std::vector<ToolSpec> {};
    for (const auto& spec: env.tools())
    {
        if (std::find(task.tools.begin(), task.tools.end(), spec.name) != task.tools.end())
            out.push_back(spec);
    }
    return out;
}

} // namespace atris
