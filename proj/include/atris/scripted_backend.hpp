// SPDX-License-Identifier: Apache-2.0
//
// Deterministic rule-driven backend used as a test oracle substrate.
//
// A script is an ordered list of rules; the first rule whose matchers all
// accept the request produces the response. Matchers look at the agent role,
// substrings / a regex over the concatenated message contents, and the
// trajectory step (number of assistant messages after the last user message).
//
// A rule responds with either a fixed `text`, a `sequence` indexed by the
// trajectory step, or a stochastic choice between a `good` and a `bad`
// sequence: at the start of each trajectory it draws good with probability
// `p` from a stream derived from (seed, request tag, rule, draw counter), and
// later steps continue whichever sequence the trajectory's earlier assistant
// messages follow.
#pragma once

#include <atris/backend.hpp>

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace atris
{

class NoMatchingRuleError : public Error
{
  public:
    using Error::Error;
};

struct ScriptRule
{
    std::optional<AgentRole> role;
    std::vector<std::string> contains;
    std::vector<std::string> excludes;
    std::optional<std::string> regex;
    std::optional<int> step;

    std::optional<std::string> text;
    std::vector<std::string> sequence;
    std::optional<double> p;
    std::vector<std::string> good;
    std::vector<std::string> bad;

    std::optional<Usage> usage;
};

struct Script
{
    std::vector<ScriptRule> rules;
    std::uint64_t seed = 0;
};

/// Reads a script from its JSON form:
/// `{"seed": 7, "rules": [{"role": "action", "contains": ["..."], "p": 0.3, "good": [...], "bad": [...]}, ...]}`
[[nodiscard]] auto parse_script(const Value& j) -> Script;
[[nodiscard]] auto load_script(const std::filesystem::path& path) -> Script;

/// Number of assistant messages after the last user message.
[[nodiscard]] auto trajectory_step(const std::vector<Message>& messages) -> int;

class ScriptedBackend final : public ModelBackend
{
  public:
    explicit ScriptedBackend(Script script);
    ScriptedBackend(Script script, std::uint64_t seed);

    auto send(const ChatRequest& request, AgentRole role) -> ChatResponse override;

  private:
    struct CompiledRule
    {
        ScriptRule rule;
        std::optional<std::regex> pattern;
    };

    auto draw(const std::string& tag, std::size_t rule_index) -> double;

    std::vector<CompiledRule> _rules;
    std::uint64_t _seed;
    std::mutex _mutex;
    std::map<std::pair<std::string, std::size_t>, std::uint64_t> _counters;
};

} // namespace atris
