// SPDX-License-Identifier: Apache-2.0
#include <atris/hash.hpp>
#include <atris/prompts.hpp>
#include <atris/scripted_backend.hpp>
#include <atris/transcript.hpp>

namespace atris
{

namespace
{

auto joinContents(const std::vector<Message>& messages) -> std::string
{
    auto out = std::string {};
    for (const auto& m: messages)
    {
        out += m.content;
        out.push_back('\n');
    }
    return out;
}

auto stringList(const Value& j, const char* key) -> std::vector<std::string>
{
    if (!j.contains(key))
        return {};
    auto const& v = j.at(key);
    if (v.is_string())
        return {v.get<std::string>()};
    return v.get<std::vector<std::string>>();
}

/// Assistant message contents after the last user message.
auto trajectoryMessages(const std::vector<Message>& messages) -> std::vector<std::string>
{
    auto out = std::vector<std::string> {};
    for (const auto& m: messages)
    {
        if (m.role == Role::user)
            out.clear();
        else if (m.role == Role::assistant)
            out.push_back(m.content);
    }
    return out;
}

auto followsPrefix(const std::vector<std::string>& emitted, const std::vector<std::string>& sequence) -> bool
{
    for (std::size_t i = 0; i < emitted.size(); ++i)
    {
        auto const& expected = sequence.empty() ? std::string {} : sequence[std::min(i, sequence.size() - 1)];
        if (emitted[i] != expected)
            return false;
    }
    return true;
}

auto pick(const std::vector<std::string>& sequence, int step) -> std::string
{
    if (sequence.empty())
        return {};
    return sequence[std::min<std::size_t>(static_cast<std::size_t>(step), sequence.size() - 1)];
}

} // namespace

auto parse_script(const Value& j) -> Script
{
    auto script = Script {};
    try
    {
        script.seed = j.value("seed", std::uint64_t {0});
        auto index = 0;
        for (const auto& r: j.at("rules"))
        {
            auto const where = "rules[" + std::to_string(index++) + "]";
            auto rule = ScriptRule {};
            if (r.contains("role"))
                rule.role = agent_role_from_string(r.at("role").get<std::string>());
            rule.contains = stringList(r, "contains");
            rule.excludes = stringList(r, "excludes");
            if (r.contains("regex"))
                rule.regex = r.at("regex").get<std::string>();
            if (r.contains("step"))
                rule.step = r.at("step").get<int>();
            if (r.contains("text"))
                rule.text = r.at("text").get<std::string>();
            rule.sequence = stringList(r, "sequence");
            if (r.contains("p"))
            {
                rule.p = r.at("p").get<double>();
                if (*rule.p < 0.0 || *rule.p > 1.0)
                    throw ConfigError(where + ".p: probability must lie in [0, 1]");
            }
            rule.good = stringList(r, "good");
            rule.bad = stringList(r, "bad");
            if (r.contains("usage"))
                rule.usage = Usage {r.at("usage").at("prompt").get<std::int64_t>(),
                                    r.at("usage").at("completion").get<std::int64_t>()};
            auto const kinds = int(rule.text.has_value()) + int(!rule.sequence.empty()) + int(rule.p.has_value());
            if (kinds != 1)
                throw ConfigError(where + ": exactly one of text, sequence or p/good/bad is required");
            if (rule.p && (rule.good.empty() || rule.bad.empty()))
                throw ConfigError(where + ": stochastic rules need non-empty good and bad sequences");
            script.rules.push_back(std::move(rule));
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("script: ") + e.what());
    }
    catch (const InvariantError& e)
    {
        throw ConfigError(std::string("script: ") + e.what());
    }
    return script;
}

auto load_script(const std::filesystem::path& path) -> Script
{
    try
    {
        return parse_script(parse_json(read_file(path)));
    }
    catch (const DecodeError& e)
    {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

auto trajectory_step(const std::vector<Message>& messages) -> int
{
    return static_cast<int>(trajectoryMessages(messages).size());
}

ScriptedBackend::ScriptedBackend(Script script): ScriptedBackend(script, script.seed) {}

ScriptedBackend::ScriptedBackend(Script script, std::uint64_t seed): _seed(seed)
{
    for (auto& rule: script.rules)
    {
        auto compiled = CompiledRule {std::move(rule), std::nullopt};
        if (compiled.rule.regex)
        {
            try
            {
                compiled.pattern.emplace(*compiled.rule.regex);
            }
            catch (const std::regex_error& e)
            {
                throw ConfigError("script regex '" + *compiled.rule.regex + "': " + e.what());
            }
        }
        _rules.push_back(std::move(compiled));
    }
}

auto ScriptedBackend::draw(const std::string& tag, std::size_t rule_index) -> double
{
    auto counter = std::uint64_t {0};
    {
        auto lock = std::lock_guard(_mutex);
        counter = _counters[{tag, rule_index}]++;
    }
    auto h = splitmix64(_seed ^ fnv1a64(tag));
    h = splitmix64(h ^ (rule_index * 0x9e3779b97f4a7c15ULL));
    h = splitmix64(h ^ counter);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

auto ScriptedBackend::send(const ChatRequest& request, AgentRole role) -> ChatResponse
{
    auto const joined = joinContents(request.messages);
    auto const step = trajectory_step(request.messages);

    for (std::size_t i = 0; i < _rules.size(); ++i)
    {
        auto const& [rule, pattern] = _rules[i];
        if (rule.role && *rule.role != role)
            continue;
        if (rule.step && *rule.step != step)
            continue;
        auto const containsAll = std::all_of(rule.contains.begin(), rule.contains.end(),
                                             [&](const auto& s) { return joined.find(s) != std::string::npos; });
        if (!containsAll)
            continue;
        auto const excluded = std::any_of(rule.excludes.begin(), rule.excludes.end(),
                                          [&](const auto& s) { return joined.find(s) != std::string::npos; });
        if (excluded)
            continue;
        auto match = std::smatch {};
        if (pattern && !std::regex_search(joined, match, *pattern))
            continue;

        auto text = std::string {};
        if (rule.text)
            text = *rule.text;
        else if (!rule.sequence.empty())
            text = pick(rule.sequence, step);
        else
        {
            auto useGood = true;
            if (step == 0)
                useGood = draw(request.tag, i) < *rule.p;
            else
            {
                auto const emitted = trajectoryMessages(request.messages);
                useGood = followsPrefix(emitted, rule.good) || !followsPrefix(emitted, rule.bad);
            }
            text = pick(useGood ? rule.good : rule.bad, step);
        }

        if (pattern && match.size() > 1)
        {
            auto const capture = match[1].str();
            for (auto pos = text.find("{{1}}"); pos != std::string::npos; pos = text.find("{{1}}", pos + capture.size()))
                text.replace(pos, 5, capture);
        }

        auto usage = rule.usage.value_or(Usage {static_cast<std::int64_t>(estimate_context(request.messages)),
                                                static_cast<std::int64_t>(estimate_context(text))});
        return ChatResponse {std::move(text), usage};
    }
    throw NoMatchingRuleError("no script rule matches request for role " + std::string(to_string(role)));
}

} // namespace atris
