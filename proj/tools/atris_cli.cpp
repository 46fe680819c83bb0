// SPDX-License-Identifier: Apache-2.0
#include <atris/runner.hpp>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <iostream>

using namespace atris;

namespace
{

constexpr int exit_config = 2;
constexpr int exit_failure = 1;

auto onOff(const std::string& text) -> bool
{
    if (text == "on")
        return true;
    if (text == "off")
        return false;
    throw ConfigError("expected on or off, got '" + text + "'");
}

auto cmdRun(const std::string& config, const RunOverrides& overrides, const std::optional<std::string>& n) -> int
{
    auto settings = load_run_settings(config);
    auto o = overrides;
    if (n)
        o.n_values = parse_n_list(*n);
    apply_overrides(settings, o);
    auto const out = execute_run(settings);
    std::cout << render_report(out.rows);
    std::cout << "run directory: " << out.run_dir.string() << '\n';
    return 0;
}

auto cmdDatagen(const std::string& config, std::optional<std::uint64_t> seed, const std::optional<std::string>& rebalance,
                const std::optional<std::string>& out) -> int
{
    auto settings = load_datagen_settings(config);
    if (seed)
        settings.seed = *seed;
    if (rebalance)
        settings.rebalance = onOff(*rebalance);
    if (out)
        settings.out_dir = *out;
    auto const result = execute_datagen(settings);
    std::cout << "collected " << result.collected.size() << ", emitted " << result.emitted.size() << '\n';
    for (const auto& [key, count]: result.yields)
        std::cout << "  " << key.str() << "  " << count << '\n';
    for (const auto& s: result.shortfalls)
        std::cout << "shortfall: " << s << '\n';
    std::cout << "corpus: " << result.corpus.string() << '\n';
    return 0;
}

auto cmdFidelity(const std::string& pairs_path, const std::string& embedder, double threshold) -> int
{
    if (embedder != "hashed")
        throw ConfigError("embedder: only 'hashed' is available, got '" + embedder + "'");
    auto const pairs = load_pairs(pairs_path);
    auto const report = fidelity_report(pairs, HashedBagEmbedder {}, threshold);
    std::printf("pairs %zu\nmean_similarity %.4f\nhf_ratio %.4f (threshold > %.2f)\n", report.pairs,
                report.mean_similarity, report.hf_ratio, report.threshold);
    return 0;
}

auto cmdReport(const std::vector<std::string>& paths, bool json) -> int
{
    auto records = std::vector<RunRecord> {};
    for (const auto& p: paths)
    {
        auto loaded = load_results(p);
        records.insert(records.end(), loaded.begin(), loaded.end());
    }
    auto const rows = ledger_report(records);
    if (json)
    {
        for (const auto& row: rows)
            std::cout << Value(row).dump() << '\n';
    }
    else
        std::cout << render_report(rows);
    return 0;
}

} // namespace

auto main(int argc, char** argv) -> int
{
    spdlog::set_default_logger(spdlog::stderr_color_mt("atris"));
    spdlog::set_pattern("[%l] %v");

    auto app = CLI::App {"Decision-time simulation engine for tool-using agents"};
    app.require_subcommand(1);
    auto verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* run = app.add_subcommand("run", "Run tasks from a configuration file");
    auto runConfig = std::string {};
    auto overrides = RunOverrides {};
    auto nList = std::optional<std::string> {};
    auto recordPrompts = false;
    run->add_option("--config", runConfig, "Run configuration (JSON)")->required();
    run->add_option("--method", overrides.method, "atris-seq, atris-par, direct, bon or seqrev");
    run->add_option("--n", nList, "Attempt budget, or a comma-separated sweep");
    run->add_option("--backend", overrides.backend, "scripted:<name>, replay:<dir> or remote");
    run->add_option("--simulator", overrides.simulator, "perfect, learned or scripted");
    run->add_option("--jobs", overrides.jobs, "Worker threads")->check(CLI::PositiveNumber);
    run->add_option("--seed", overrides.seed, "Run seed");
    run->add_option("--out", overrides.out_dir, "Output directory");
    run->add_option("--prompt-dir", overrides.prompt_dir, "Prompt template directory");
    run->add_flag("--record-prompts", recordPrompts, "Store rendered prompts in the transcript");

    auto* datagen = app.add_subcommand("datagen", "Collect and rebalance simulator training data");
    auto datagenConfig = std::string {};
    auto datagenSeed = std::optional<std::uint64_t> {};
    auto rebalance = std::optional<std::string> {};
    auto datagenOut = std::optional<std::string> {};
    datagen->add_option("--config", datagenConfig, "Datagen configuration (JSON)")->required();
    datagen->add_option("--seed", datagenSeed, "Sampling seed");
    datagen->add_option("--rebalance", rebalance, "on or off")->check(CLI::IsMember({"on", "off"}));
    datagen->add_option("--out", datagenOut, "Output directory");

    auto* fidelity = app.add_subcommand("fidelity", "Similarity between simulated and real tool outputs");
    auto pairs = std::string {};
    auto embedder = std::string {"hashed"};
    auto threshold = high_fidelity_threshold;
    fidelity->add_option("--pairs", pairs, "JSONL of {candidate, perfect}")->required();
    fidelity->add_option("--embedder", embedder, "Embedding model");
    fidelity->add_option("--threshold", threshold, "High-fidelity cut (strict)");

    auto* report = app.add_subcommand("report", "Summarise one or more runs");
    auto paths = std::vector<std::string> {};
    auto reportJson = false;
    report->add_option("runs", paths, "Run directories or results.jsonl files")->required();
    report->add_flag("--json", reportJson, "One JSON record per row instead of the table");

    CLI11_PARSE(app, argc, argv);
    if (verbose)
        spdlog::set_level(spdlog::level::debug);

    try
    {
        if (*run)
        {
            if (recordPrompts)
                overrides.record_prompts = true;
            return cmdRun(runConfig, overrides, nList);
        }
        if (*datagen)
            return cmdDatagen(datagenConfig, datagenSeed, rebalance, datagenOut);
        if (*fidelity)
            return cmdFidelity(pairs, embedder, threshold);
        return cmdReport(paths, reportJson);
    }
    catch (const ConfigError& e)
    {
        spdlog::error("{}", e.what());
        return exit_config;
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return exit_failure;
    }
}
