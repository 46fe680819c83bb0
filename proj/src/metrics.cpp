// SPDX-License-Identifier: Apache-2.0
#include <atris/hash.hpp>
#include <atris/metrics.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace atris
{

auto to_string(ScoreReason reason) -> std::string_view
{
    switch (reason)
    {
        case ScoreReason::state_match: return "state_match";
        case ScoreReason::milestone_match: return "milestone_match";
        case ScoreReason::mismatch: return "mismatch";
        case ScoreReason::discarded: return "discarded";
    }
    return "mismatch";
}

auto score_task(std::string_view task_id, std::span<const TurnResult> turns, std::string_view final_fingerprint,
                const Expectation& expectation) -> TaskScore
{
    if (!expectation.fingerprint && expectation.required_calls.empty())
        throw ConfigError("expectation: needs a final state and/or required calls");
    auto score = TaskScore {std::string(task_id), false, ScoreReason::mismatch};
    if (std::any_of(turns.begin(), turns.end(), [](const TurnResult& t) { return t.discarded; }))
    {
        score.reason = ScoreReason::discarded;
        return score;
    }
    if (expectation.fingerprint && *expectation.fingerprint != final_fingerprint)
        return score;

    auto next = expectation.required_calls.begin();
    for (const auto& turn: turns)
    {
        for (const auto& step: turn.final_trajectory.steps)
        {
            for (const auto& call: step.calls)
            {
                if (next != expectation.required_calls.end() && canonicalize_call(call) == *next)
                    ++next;
            }
        }
    }
    if (next != expectation.required_calls.end())
        return score;
    score.success = true;
    score.reason = expectation.fingerprint ? ScoreReason::state_match : ScoreReason::milestone_match;
    return score;
}

auto HashedBagEmbedder::tokens(std::string_view text) -> std::vector<std::string>
{
    auto out = std::vector<std::string> {};
    auto current = std::string {};
    for (auto ch: text)
    {
        auto const c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) != 0)
            current.push_back(static_cast<char>(std::tolower(c)));
        else if (!current.empty())
            out.push_back(std::exchange(current, {}));
    }
    if (!current.empty())
        out.push_back(std::move(current));
    return out;
}

auto HashedBagEmbedder::bucket(std::string_view token) const -> std::size_t
{
    return static_cast<std::size_t>(fnv1a64(token) % _dim);
}

auto HashedBagEmbedder::embed(std::string_view text) const -> std::vector<double>
{
    auto v = std::vector<double>(_dim, 0.0);
    for (const auto& t: tokens(text))
        v[bucket(t)] += 1.0;
    return v;
}

auto cosine(std::span<const double> a, std::span<const double> b) -> double
{
    if (a.size() != b.size())
        throw InvariantError("cosine of vectors with different dimensions");
    auto dot = 0.0;
    auto na = 0.0;
    auto nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
    {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0)
        return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

auto similarity(std::string_view a, std::string_view b, const Embedder& embedder) -> double
{
    return cosine(embedder.embed(a), embedder.embed(b));
}

auto fidelity_report(std::span<const std::pair<std::string, std::string>> pairs, const Embedder& embedder,
                     double threshold) -> FidelityReport
{
    if (pairs.empty())
        throw InvariantError("fidelity report needs at least one pair");
    auto report = FidelityReport {};
    report.pairs = pairs.size();
    report.threshold = threshold;
    auto sum = 0.0;
    auto high = std::size_t {0};
    for (const auto& [candidate, perfect]: pairs)
    {
        auto const s = similarity(candidate, perfect, embedder);
        sum += s;
        if (s > threshold)
            ++high;
    }
    report.mean_similarity = sum / static_cast<double>(pairs.size());
    report.hf_ratio = static_cast<double>(high) / static_cast<double>(pairs.size());
    return report;
}

auto step_pairs(std::span<const Step> steps, const Environment& base) -> std::vector<TextPair>
{
    auto shadow = base.clone();
    auto out = std::vector<TextPair> {};
    for (const auto& step: steps)
    {
        auto const perfect = shadow->execute(step.calls);
        out.emplace_back(format_payloads(step.outcome.payloads), format_payloads(perfect.payloads));
    }
    return out;
}

auto trajectory_similarity(std::span<const TextPair> pairs, const Embedder& embedder) -> double
{
    if (pairs.empty())
        return 1.0;
    auto sum = 0.0;
    for (const auto& [candidate, perfect]: pairs)
        sum += similarity(candidate, perfect, embedder);
    return sum / static_cast<double>(pairs.size());
}

auto ledger_report(std::span<const RunRecord> records) -> std::vector<ReportRow>
{
    auto rows = std::vector<ReportRow> {};
    for (const auto& r: records)
    {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const ReportRow& row) { return row.method == r.method && row.n == r.n; });
        if (it == rows.end())
        {
            rows.push_back(ReportRow {r.method, r.n, 0, 0, {}});
            it = rows.end() - 1;
        }
        ++it->runs;
        if (r.success)
            ++it->successes;
        it->ledger.merge(r.ledger);
    }
    return rows;
}

auto render_report(std::span<const ReportRow> rows) -> std::string
{
    auto out = std::ostringstream {};
    auto const header = std::vector<std::string> {
        "Method",       "N",          "ACC(%)",          "Calls.Total",  "Calls.Action",  "Calls.SelfEval",
        "Compl.Total",  "Compl.Action", "Compl.SelfEval", "Prompt.Total", "Prompt.Action", "Prompt.SelfEval"};
    auto table = std::vector<std::vector<std::string>> {header};
    for (const auto& row: rows)
    {
        auto const total = row.ledger.total();
        auto const& action = row.ledger.at(AgentRole::action);
        auto const& eval = row.ledger.at(AgentRole::self_eval);
        auto acc = std::ostringstream {};
        acc << std::fixed << std::setprecision(1) << row.accuracy();
        table.push_back({row.method, std::to_string(row.n), acc.str(), std::to_string(total.api_calls),
                         std::to_string(action.api_calls), std::to_string(eval.api_calls),
                         std::to_string(total.completion_tokens), std::to_string(action.completion_tokens),
                         std::to_string(eval.completion_tokens), std::to_string(total.prompt_tokens),
                         std::to_string(action.prompt_tokens), std::to_string(eval.prompt_tokens)});
    }
    auto widths = std::vector<std::size_t>(header.size(), 0);
    for (const auto& line: table)
    {
        for (std::size_t c = 0; c < line.size(); ++c)
            widths[c] = std::max(widths[c], line[c].size());
    }
    for (std::size_t r = 0; r < table.size(); ++r)
    {
        for (std::size_t c = 0; c < table[r].size(); ++c)
        {
            if (c > 0)
                out << "  ";
            if (c == 0)
                out << std::left << std::setw(static_cast<int>(widths[c])) << table[r][c];
            else
                out << std::right << std::setw(static_cast<int>(widths[c])) << table[r][c];
        }
        out << '\n';
        if (r == 0)
        {
            auto width = std::size_t {0};
            for (auto w: widths)
                width += w + 2;
            out << std::string(width - 2, '-') << '\n';
        }
    }
    return out.str();
}

void to_json(Value& j, const ReportRow& row)
{
    j = Value {{"method", row.method},     {"n", row.n},           {"runs", row.runs},
               {"successes", row.successes}, {"accuracy", row.accuracy()}, {"ledger", row.ledger}};
}

} // namespace atris
