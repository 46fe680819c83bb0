// SPDX-License-Identifier: Apache-2.0
#include "parallel.hpp"

#include <atris/hash.hpp>
#include <atris/remote_backend.hpp>
#include <atris/replay_backend.hpp>
#include <atris/runner.hpp>
#include <atris/scripted_backend.hpp>
#include <atris/transcript.hpp>

#include <spdlog/spdlog.h>

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

namespace atris
{

namespace
{

auto resolvePath(const std::filesystem::path& base, const std::string& p) -> std::filesystem::path
{
    auto path = std::filesystem::path(p);
    return path.is_absolute() ? path : base / path;
}

void writeText(const std::filesystem::path& path, std::string_view text)
{
    auto out = std::ofstream(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error("cannot write " + path.string());
    out << text;
}

auto timestamp() -> std::string
{
    auto const now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    auto tm = std::tm {};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

/// `<out>/<timestamp>-<hash>`, suffixed when a directory of that name exists.
auto makeRunDir(const std::filesystem::path& out, const std::string& hash) -> std::filesystem::path
{
    auto const stem = timestamp() + "-" + hash.substr(0, 8);
    auto dir = out / stem;
    for (int i = 1; std::filesystem::exists(dir); ++i)
        dir = out / (stem + "-" + std::to_string(i));
    std::filesystem::create_directories(dir);
    return dir;
}

void parseRunConfig(const Value& j, RunConfig& run)
{
    run.early_stop = j.value("early_stop", run.early_stop);
    run.include_eval_in_context = j.value("include_eval_in_context", run.include_eval_in_context);
    run.use_summarizer = j.value("use_summarizer", run.use_summarizer);
    run.inline_outcomes = j.value("inline_outcomes", run.inline_outcomes);
    run.step_cap = j.value("step_cap", run.step_cap);
    run.context_cap_tokens = j.value("context_cap_tokens", run.context_cap_tokens);
    run.jobs = j.value("jobs", run.jobs);
    if (j.contains("mode"))
        run.mode = attempt_mode_from_string(j.at("mode").get<std::string>());
    run.session.max_tokens = j.value("max_tokens", run.session.max_tokens);
    run.session.record_prompts = j.value("record_prompts", run.session.record_prompts);
    if (j.contains("temperatures"))
    {
        for (const auto& [role, t]: j.at("temperatures").items())
            run.session.temperatures[static_cast<std::size_t>(agent_role_from_string(role))] = t.get<double>();
    }
}

auto parseModels(const Value& j, std::string& default_model) -> std::map<AgentRole, std::string>
{
    auto models = std::map<AgentRole, std::string> {};
    for (const auto& [key, value]: j.items())
    {
        if (key == "default")
            default_model = value.get<std::string>();
        else
            models[agent_role_from_string(key)] = value.get<std::string>();
    }
    return models;
}

auto parseSimulator(const Value& j) -> SimulatorSettings
{
    auto sim = SimulatorSettings {};
    if (j.is_string())
    {
        sim.kind = simulator_kind_from_string(j.get<std::string>());
        return sim;
    }
    sim.kind = simulator_kind_from_string(j.at("kind").get<std::string>());
    for (const auto& f: j.value("faults", Value::array()))
    {
        sim.faults.push_back(Fault {f.at("step").get<int>(), f.at("label").get<std::string>(),
                                    f.at("message").get<std::string>(), f.value("probability", 1.0)});
    }
    for (const auto& [calls, payloads]: j.value("table", Value::object()).items())
        sim.table[calls] = payloads.get<std::vector<Value>>();
    return sim;
}

/// Wraps a configuration-field access so errors name the field.
template <typename Fn>
auto field(const std::string& name, Fn&& fn)
{
    try
    {
        return fn();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(name + ": " + e.what());
    }
    catch (const ConfigError& e)
    {
        throw ConfigError(name + ": " + e.what());
    }
    catch (const InvariantError& e)
    {
        throw ConfigError(name + ": " + e.what());
    }
}

auto makeSimulator(const SimulatorSettings& settings, const Environment& env, const std::vector<ToolSpec>& tools,
                   std::uint64_t seed) -> std::unique_ptr<Simulator>
{
    switch (settings.kind)
    {
        case SimulatorKind::perfect: return std::make_unique<PerfectSimulator>(env);
        case SimulatorKind::learned: return std::make_unique<LearnedSimulator>(std::string(env.id()), tools);
        case SimulatorKind::scripted:
            return std::make_unique<ScriptedSimulator>(std::string(env.id()), settings.faults, settings.table,
                                                       std::make_unique<PerfectSimulator>(env), seed);
    }
    throw ConfigError("simulator: unknown kind");
}

void writeTranscript(TranscriptWriter& writer, const TaskRun& run)
{
    auto const method = std::string(to_string(run.method));
    for (std::size_t t = 0; t < run.turns.size(); ++t)
    {
        auto const& turn = run.turns[t];
        auto const turnId = static_cast<int>(t);
        for (const auto& a: turn.attempts)
        {
            writer.write(TranscriptRecord {run.task_id, turnId, a.index, "attempt",
                                           Value {{"method", method}, {"n", run.n}, {"attempt", a}}});
        }
        for (const auto& c: turn.candidates)
        {
            writer.write(TranscriptRecord {run.task_id, turnId, std::nullopt, "candidate",
                                           Value {{"method", method}, {"n", run.n}, {"candidate", c}}});
        }
        if (turn.summary)
        {
            writer.write(TranscriptRecord {run.task_id, turnId, std::nullopt, "summary",
                                           Value {{"method", method}, {"n", run.n}, {"summary", *turn.summary}}});
        }
        writer.write(TranscriptRecord {run.task_id, turnId, std::nullopt, "final",
                                       Value {{"method", method},
                                              {"n", run.n},
                                              {"trajectory", turn.final_trajectory},
                                              {"step_capped", turn.final_step_capped},
                                              {"discarded", turn.discarded},
                                              {"ledger", turn.ledger},
                                              {"incidents", turn.incidents},
                                              {"fingerprint_before", turn.fingerprint_before},
                                              {"fingerprint_after", turn.fingerprint_after}}});
        for (const auto& p: turn.prompts)
        {
            writer.write(TranscriptRecord {run.task_id, turnId, std::nullopt, "prompt",
                                           Value {{"method", method}, {"n", run.n}, {"prompt", p}}});
        }
    }
}

auto bundledDataDir() -> std::filesystem::path
{
    return std::filesystem::path(ATRIS_DEFAULT_PROMPT_DIR).parent_path() / "data";
}

} // namespace

auto to_string(Method method) -> std::string_view
{
    switch (method)
    {
        case Method::atris_seq: return "atris-seq";
        case Method::atris_par: return "atris-par";
        case Method::direct: return "direct";
        case Method::bon: return "bon";
        case Method::seqrev: return "seqrev";
    }
    return "atris-seq";
}

auto method_from_string(std::string_view text) -> Method
{
    for (auto m: {Method::atris_seq, Method::atris_par, Method::direct, Method::bon, Method::seqrev})
    {
        if (to_string(m) == text)
            return m;
    }
    throw ConfigError("method: expected atris-seq, atris-par, direct, bon or seqrev, got '" + std::string(text) + "'");
}

auto parse_n_list(std::string_view text) -> std::vector<int>
{
    auto out = std::vector<int> {};
    auto in = std::istringstream(std::string(text));
    auto item = std::string {};
    while (std::getline(in, item, ','))
    {
        auto value = 0;
        auto const* first = item.data();
        auto const* last = item.data() + item.size();
        auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc {} || ptr != last || value < 0)
            throw ConfigError("n: expected comma-separated non-negative integers, got '" + std::string(text) + "'");
        out.push_back(value);
    }
    if (out.empty())
        throw ConfigError("n: empty list");
    return out;
}

auto parse_run_settings(const Value& j, const std::filesystem::path& base_dir) -> RunSettings
{
    auto s = RunSettings {};
    s.base_dir = base_dir;
    s.raw = j;
    if (!j.is_object())
        throw ConfigError("config: expected an object");
    field("tasks", [&] {
        auto const& t = j.at("tasks");
        if (t.is_string())
            s.task_files.push_back(resolvePath(base_dir, t.get<std::string>()));
        else
        {
            for (const auto& p: t)
                s.task_files.push_back(resolvePath(base_dir, p.get<std::string>()));
        }
        if (s.task_files.empty())
            throw ConfigError("at least one task file is required");
        return 0;
    });
    if (j.contains("method"))
        s.method = field("method", [&] { return method_from_string(j.at("method").get<std::string>()); });
    if (j.contains("n"))
    {
        s.n_values = field("n", [&] {
            auto const& n = j.at("n");
            if (n.is_number_integer())
                return std::vector<int> {n.get<int>()};
            if (n.is_string())
                return parse_n_list(n.get<std::string>());
            return n.get<std::vector<int>>();
        });
        for (auto v: s.n_values)
        {
            if (v < 0)
                throw ConfigError("n: values must be >= 0");
        }
    }
    if (j.contains("backend"))
        s.backend = field("backend", [&] { return j.at("backend").get<std::string>(); });
    if (j.contains("simulator"))
        s.simulator = field("simulator", [&] { return parseSimulator(j.at("simulator")); });
    if (j.contains("run"))
        field("run", [&] {
            parseRunConfig(j.at("run"), s.run);
            return 0;
        });
    if (j.contains("seed"))
    {
        s.seed = field("seed", [&] { return j.at("seed").get<std::uint64_t>(); });
        s.seed_given = true;
    }
    if (j.contains("models"))
        s.models = field("models", [&] { return parseModels(j.at("models"), s.default_model); });
    if (j.contains("out"))
        s.out_dir = resolvePath(base_dir, j.at("out").get<std::string>());
    else
        s.out_dir = base_dir / "runs";
    if (j.contains("prompt_dir"))
        s.prompt_dir = resolvePath(base_dir, j.at("prompt_dir").get<std::string>());
    field("run", [&] {
        validate(s.run);
        return 0;
    });
    return s;
}

auto load_run_settings(const std::filesystem::path& path) -> RunSettings
{
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    auto j = Value {};
    try
    {
        j = parse_json(read_file(path));
    }
    catch (const DecodeError& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_run_settings(j, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

void apply_overrides(RunSettings& s, const RunOverrides& o)
{
    if (o.method)
    {
        s.method = method_from_string(*o.method);
        s.raw["method"] = *o.method;
    }
    if (o.n_values)
    {
        s.n_values = *o.n_values;
        s.raw["n"] = *o.n_values;
    }
    if (o.backend)
    {
        s.backend = *o.backend;
        s.raw["backend"] = *o.backend;
    }
    if (o.simulator)
    {
        s.simulator.kind = simulator_kind_from_string(*o.simulator);
        s.raw["simulator_override"] = *o.simulator;
    }
    if (o.jobs)
    {
        s.run.jobs = *o.jobs;
        s.raw["jobs_override"] = *o.jobs;
    }
    if (o.seed)
    {
        s.seed = *o.seed;
        s.seed_given = true;
        s.raw["seed"] = *o.seed;
    }
    if (o.out_dir)
        s.out_dir = *o.out_dir;
    if (o.prompt_dir)
        s.prompt_dir = *o.prompt_dir;
    if (o.record_prompts)
        s.run.session.record_prompts = *o.record_prompts;
    validate(s.run);
}

auto resolve_script(std::string_view name, const std::filesystem::path& base_dir) -> std::filesystem::path
{
    auto const text = std::string(name);
    if (text.find('/') != std::string::npos || text.ends_with(".json"))
    {
        auto const p = resolvePath(base_dir, text);
        if (!std::filesystem::exists(p))
            throw ConfigError("backend: script not found: " + p.string());
        return p;
    }
    auto const file = text + ".json";
    for (const auto& candidate: {base_dir / "scripts" / file, base_dir / ".." / "data" / "scripts" / file,
                                 bundledDataDir() / "scripts" / file, base_dir / file})
    {
        if (std::filesystem::exists(candidate))
            return candidate;
    }
    throw ConfigError("backend: no script named '" + text + "'");
}

auto make_backend(std::string_view spec, const std::filesystem::path& base_dir, std::optional<std::uint64_t> seed,
                  const std::string& default_model, const std::map<AgentRole, std::string>& models)
    -> std::unique_ptr<ModelBackend>
{
    if (spec.starts_with("scripted:"))
    {
        auto script = load_script(resolve_script(spec.substr(9), base_dir));
        if (seed)
            return std::make_unique<ScriptedBackend>(std::move(script), *seed);
        return std::make_unique<ScriptedBackend>(std::move(script));
    }
    if (spec.starts_with("replay:"))
        return ReplayBackend::load(resolvePath(base_dir, std::string(spec.substr(7))));
    if (spec == "remote")
    {
        auto config = RemoteConfig::from_environment();
        config.default_model = default_model;
        config.models = models;
        return std::make_unique<RemoteBackend>(std::move(config));
    }
    throw ConfigError("backend: expected scripted:<name>, replay:<path> or remote, got '" + std::string(spec) + "'");
}

auto prompt_library_for(const std::optional<std::filesystem::path>& dir) -> PromptLibrary
{
    return dir ? PromptLibrary::load(*dir) : PromptLibrary::load_default();
}

auto run_task(const TaskSpec& task, Method method, int n, const RunConfig& config, const SimulatorSettings& simulator,
              ModelBackend& backend, const PromptLibrary& prompts) -> TaskRun
{
    auto run = TaskRun {task.task_id, method, n, {}, {}, {}};
    auto env = make_task_environment(task);
    auto const tools = task_tools(task, *env);
    auto sim = makeSimulator(simulator, *env, tools, config.session.seed.value_or(0));
    auto cfg = config;
    cfg.n_attempts = n;
    cfg.mode = method == Method::atris_par ? AttemptMode::parallel : AttemptMode::sequential;

    // A zero budget leaves the step-level baselines with nothing to choose from.
    auto const dispatch = n == 0 && (method == Method::bon || method == Method::seqrev) ? Method::direct : method;

    auto base = std::vector<Message> {};
    for (std::size_t t = 0; t < task.turns.size(); ++t)
    {
        auto const input =
            TurnInput {task.task_id + "@n" + std::to_string(n), static_cast<int>(t), tools, base, task.turns[t]};
        auto const turnStart = env->clone();
        auto result = TurnResult {};
        switch (dispatch)
        {
            case Method::atris_seq:
            case Method::atris_par: result = run_turn(input, *env, *sim, cfg, backend, prompts); break;
            case Method::direct: result = run_direct(input, *env, cfg, backend, prompts); break;
            case Method::bon: result = run_weighted_bon(input, *env, cfg, backend, prompts); break;
            case Method::seqrev: result = run_sequential_revision(input, *env, cfg, backend, prompts); break;
        }
        run.ledger.merge(result.ledger);
        if (simulator.kind != SimulatorKind::perfect)
        {
            for (const auto& a: result.attempts)
            {
                auto pairs = step_pairs(a.trajectory.steps, *turnStart);
                run.fidelity_pairs.insert(run.fidelity_pairs.end(), pairs.begin(), pairs.end());
            }
        }
        base = commit_turn(input, result.final_trajectory);
        auto const discarded = result.discarded;
        run.turns.push_back(std::move(result));
        if (discarded)
            break;
    }
    run.score = score_task(task.task_id, run.turns, env->fingerprint(), task.expectation);
    return run;
}

auto result_record(const TaskRun& run) -> Value
{
    auto incidents = std::size_t {0};
    auto attempts = std::size_t {0};
    auto discarded = false;
    for (const auto& t: run.turns)
    {
        incidents += t.incidents.size();
        attempts += t.attempts.size();
        discarded = discarded || t.discarded;
    }
    return Value {{"method", std::string(to_string(run.method))},
                  {"n", run.n},
                  {"task_id", run.task_id},
                  {"success", run.score.success},
                  {"reason", std::string(to_string(run.score.reason))},
                  {"turns", run.turns.size()},
                  {"attempts", attempts},
                  {"discarded", discarded},
                  {"incidents", incidents},
                  {"ledger", run.ledger}};
}

auto config_hash(const Value& config) -> std::string
{
    return to_hex(fnv1a64(config.dump()));
}

auto execute_run(const RunSettings& settings, ModelBackend* backend) -> RunOutput
{
    auto const prompts = prompt_library_for(settings.prompt_dir);
    auto tasks = std::vector<TaskSpec> {};
    for (const auto& f: settings.task_files)
    {
        auto loaded = load_tasks(f);
        tasks.insert(tasks.end(), loaded.begin(), loaded.end());
    }
    if (!settings.seed_given)
        spdlog::warn("config has no seed; using 0");

    auto owned = std::unique_ptr<ModelBackend> {};
    if (backend == nullptr)
    {
        owned = make_backend(settings.backend, settings.base_dir,
                             settings.seed_given ? std::optional<std::uint64_t>(settings.seed) : std::nullopt,
                             settings.default_model, settings.models);
        backend = owned.get();
    }

    auto const hash = config_hash(settings.raw);
    auto output = RunOutput {};
    output.run_dir = makeRunDir(settings.out_dir, hash);
    auto const& dir = output.run_dir;

    auto manifest = Value {{"config_hash", hash},
                           {"config", settings.raw},
                           {"seeds", Value {{"run", settings.seed}, {"given", settings.seed_given}}},
                           {"method", std::string(to_string(settings.method))},
                           {"n", settings.n_values},
                           {"backend", settings.backend},
                           {"simulator", std::string(to_string(settings.simulator.kind))},
                           {"template_dir", prompts.directory().string()},
                           {"template_hash", prompts.hash()},
                           {"created", timestamp()}};
    writeText(dir / "manifest.json", manifest.dump(2) + "\n");

    auto recorder = RecordingBackend(*backend, dir / "exchanges.jsonl");
    auto config = settings.run;
    if (settings.seed_given)
        config.session.seed = static_cast<std::int64_t>(settings.seed);

    auto transcript = TranscriptWriter(dir / "transcript.jsonl");
    auto results = std::ofstream(dir / "results.jsonl", std::ios::binary | std::ios::trunc);
    auto pairs = std::optional<std::ofstream> {};
    if (settings.simulator.kind != SimulatorKind::perfect)
        pairs.emplace(dir / "pairs.jsonl", std::ios::binary | std::ios::trunc);
    auto records = std::vector<RunRecord> {};
    for (auto n: settings.n_values)
    {
        auto runs = std::vector<TaskRun>(tasks.size());
        detail::parallel_for(static_cast<int>(tasks.size()), config.jobs, [&](int i) {
            runs[i] = run_task(tasks[i], settings.method, n, config, settings.simulator, recorder, prompts);
        });
        for (auto& r: runs)
        {
            writeTranscript(transcript, r);
            results << result_record(r).dump() << '\n';
            for (const auto& [candidate, perfect]: r.fidelity_pairs)
                *pairs << Value {{"candidate", candidate}, {"perfect", perfect}}.dump() << '\n';
            records.push_back(RunRecord {std::string(to_string(r.method)), r.n, r.task_id, r.score.success, r.ledger});
            output.runs.push_back(std::move(r));
        }
    }
    results.flush();
    output.rows = ledger_report(records);
    writeText(dir / "report.txt", render_report(output.rows));
    return output;
}

auto load_queries(const std::filesystem::path& path) -> std::vector<DatagenQuery>
{
    auto const j = field(path.string(), [&] { return parse_json(read_file(path)); });
    auto out = std::vector<DatagenQuery> {};
    auto const& list = j.is_object() && j.contains("queries") ? j.at("queries") : j;
    for (std::size_t i = 0; i < list.size(); ++i)
    {
        auto const where = path.string() + "[" + std::to_string(i) + "]";
        out.push_back(field(where, [&] {
            auto const& q = list[i];
            auto query = DatagenQuery {q.at("query_id").get<std::string>(), q.at("environment").get<std::string>(),
                                       std::nullopt, q.at("query").get<std::string>()};
            if (q.contains("initial_state"))
                query.initial_state = q.at("initial_state");
            return query;
        }));
    }
    return out;
}

auto load_datagen_settings(const std::filesystem::path& path) -> DatagenSettings
{
    if (!std::filesystem::exists(path))
        throw ConfigError("config file not found: " + path.string());
    auto const j = field(path.string(), [&] { return parse_json(read_file(path)); });
    auto const base = path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path();
    auto s = DatagenSettings {};
    s.base_dir = base;
    s.raw = j;
    s.queries = field("queries", [&] { return resolvePath(base, j.at("queries").get<std::string>()); });
    if (!std::filesystem::exists(s.queries))
        throw ConfigError("queries: file not found: " + s.queries.string());
    s.agents = field("agents", [&] { return j.at("agents").get<std::vector<std::string>>(); });
    if (j.contains("elicitor"))
        s.elicitor = j.at("elicitor").get<std::string>();
    if (j.contains("quotas"))
        s.quotas = field("quotas", [&] { return j.at("quotas").get<std::map<std::string, std::map<std::string, int>>>(); });
    s.max_rounds = field("max_rounds", [&] { return j.value("max_rounds", s.max_rounds); });
    s.rebalance = field("rebalance", [&] { return j.value("rebalance", s.rebalance); });
    s.sample_k = field("sample_k", [&] { return j.value("sample_k", s.sample_k); });
    if (j.contains("seed"))
        s.seed = field("seed", [&] { return j.at("seed").get<std::uint64_t>(); });
    else
        spdlog::warn("datagen config has no seed; using 0");
    if (j.contains("run"))
        field("run", [&] {
            parseRunConfig(j.at("run"), s.run);
            return 0;
        });
    s.out_dir = j.contains("out") ? resolvePath(base, j.at("out").get<std::string>()) : base / "runs";
    if (j.contains("prompt_dir"))
        s.prompt_dir = resolvePath(base, j.at("prompt_dir").get<std::string>());
    return s;
}

auto execute_datagen(const DatagenSettings& settings) -> DatagenOutput
{
    auto const prompts = prompt_library_for(settings.prompt_dir);
    auto const queries = load_queries(settings.queries);
    auto config = settings.run;
    config.session.seed = static_cast<std::int64_t>(settings.seed);

    auto owned = std::vector<std::unique_ptr<ModelBackend>> {};
    auto agents = std::vector<ModelBackend*> {};
    for (const auto& spec: settings.agents)
    {
        owned.push_back(make_backend(spec, settings.base_dir, settings.seed));
        agents.push_back(owned.back().get());
    }

    auto output = DatagenOutput {};
    auto incidents = std::vector<Incident> {};
    output.collected = collect_episodes(queries, agents, prompts, config, &incidents);

    auto all = output.collected;
    if (!settings.quotas.empty())
    {
        if (!settings.elicitor)
            throw ConfigError("quotas: an elicitor backend is required");
        auto elicitor = make_backend(*settings.elicitor, settings.base_dir, settings.seed);
        for (const auto& [envId, labels]: settings.quotas)
        {
            auto const env = make_environment(envId);
            for (const auto& [label, quota]: labels)
            {
                auto found = 0;
                for (int round = 0; round < settings.max_rounds && found < quota; ++round)
                {
                    auto const yield = elicit_targeted_failures(*env, label, *elicitor, prompts, config, {}, &incidents);
                    if (yield.empty())
                        break;
                    found += static_cast<int>(yield.size());
                    all.insert(all.end(), yield.begin(), yield.end());
                }
                if (found < quota)
                {
                    output.shortfalls.push_back(envId + "/" + label + ": " + std::to_string(found) + " of "
                                                + std::to_string(quota));
                    spdlog::warn("datagen quota shortfall for {}/{}: {} of {}", envId, label, found, quota);
                }
            }
        }
    }

    auto const table = build_table(all);
    output.yields = table.counts();
    if (settings.rebalance && !all.empty())
        output.emitted = sample_rebalanced(all, table, settings.sample_k == 0 ? all.size() : settings.sample_k,
                                           settings.seed);
    else
        output.emitted = all;

    auto hashInput = settings.raw;
    output.run_dir = makeRunDir(settings.out_dir, config_hash(hashInput));
    output.corpus = output.run_dir / "corpus.jsonl";
    static_cast<void>(emit_sft(output.emitted, prompts, output.corpus));

    auto const audit = audit_corpus(output.emitted);
    auto yields = Value::array();
    for (const auto& [key, count]: output.yields)
        yields.push_back(Value {{"key", key.str()}, {"count", count}});
    auto summary = Value {{"collected", output.collected.size()},
                          {"total", all.size()},
                          {"emitted", output.emitted.size()},
                          {"rebalanced", settings.rebalance},
                          {"yields", yields},
                          {"shortfalls", output.shortfalls},
                          {"incidents", incidents},
                          {"audit", Value {{"checked", audit.checked},
                                           {"mismatches", audit.mismatches.size()},
                                           {"not_real", audit.not_real.size()}}}};
    writeText(output.run_dir / "summary.json", summary.dump(2) + "\n");
    auto manifest = Value {{"config_hash", config_hash(hashInput)},
                           {"config", settings.raw},
                           {"seeds", Value {{"run", settings.seed}}},
                           {"template_dir", prompts.directory().string()},
                           {"template_hash", prompts.hash()},
                           {"created", timestamp()}};
    writeText(output.run_dir / "manifest.json", manifest.dump(2) + "\n");
    if (!audit.ok())
        throw Error("corpus audit failed: " + std::to_string(audit.mismatches.size()) + " mismatching rows");
    return output;
}

auto load_pairs(const std::filesystem::path& path) -> std::vector<std::pair<std::string, std::string>>
{
    auto const text = read_file(path);
    auto out = std::vector<std::pair<std::string, std::string>> {};
    auto in = std::istringstream(text);
    auto line = std::string {};
    auto lineNo = 0;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        try
        {
            auto const j = parse_json(line);
            out.emplace_back(j.at("candidate").get<std::string>(), j.at("perfect").get<std::string>());
        }
        catch (const std::exception& e)
        {
            throw ConfigError(path.string() + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return out;
}

auto load_results(const std::filesystem::path& path) -> std::vector<RunRecord>
{
    auto const file = std::filesystem::is_directory(path) ? path / "results.jsonl" : path;
    auto const text = read_file(file);
    auto out = std::vector<RunRecord> {};
    auto in = std::istringstream(text);
    auto line = std::string {};
    auto lineNo = 0;
    while (std::getline(in, line))
    {
        ++lineNo;
        if (line.empty())
            continue;
        try
        {
            auto const j = parse_json(line);
            out.push_back(RunRecord {j.at("method").get<std::string>(), j.at("n").get<int>(),
                                     j.at("task_id").get<std::string>(), j.at("success").get<bool>(),
                                     j.at("ledger").get<UsageLedger>()});
        }
        catch (const std::exception& e)
        {
            throw ConfigError(file.string() + ":" + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return out;
}

} // namespace atris
