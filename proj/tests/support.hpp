// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures and hand-rolled generators for the test suites.
#pragma once

#include <atris/backend.hpp>
#include <atris/conversation.hpp>
#include <atris/environment.hpp>
#include <atris/prompts.hpp>
#include <atris/scripted_backend.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

namespace atris::test
{

inline auto prompts() -> const PromptLibrary&
{
    static const auto library = PromptLibrary::load(ATRIS_DEFAULT_PROMPT_DIR);
    return library;
}

inline auto temp_dir(const std::string& name) -> std::filesystem::path
{
    auto dir = std::filesystem::temp_directory_path() / ("atris-test-" + name + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline auto call(std::string tool, std::vector<std::pair<std::string, Value>> args = {}) -> ToolCall
{
    return ToolCall {std::move(tool), std::move(args)};
}

inline auto script(const Value& j) -> Script
{
    return parse_script(j);
}

/// Rule shorthand for scripts built in code.
inline auto rule(std::string role, std::vector<std::string> contains, std::string text) -> Value
{
    return Value {{"role", std::move(role)}, {"contains", std::move(contains)}, {"text", std::move(text)}};
}

inline auto eval_text(bool pass, const std::string& suggestion = "Try again.") -> std::string
{
    return "<Evaluation>\n" + std::string(pass ? "Looks right." : "Wrong.") + "\n</Evaluation>\n\n<Result>\n"
         + (pass ? "1" : "0") + "\n</Result>\n\n<Suggestion>\n" + suggestion + "\n</Suggestion>";
}

inline auto summary_text(const std::string& recommendation) -> std::string
{
    return "{\n \"recommendation\": \"" + recommendation + "\",\n \"rationale\": \"from the attempts\"\n}";
}

class Gen
{
  public:
    explicit Gen(std::uint64_t seed): _rng(seed) {}

    auto uniform(std::uint64_t n) -> std::uint64_t { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(_rng); }
    auto chance(double p) -> bool { return std::bernoulli_distribution(p)(_rng); }
    auto real(double lo, double hi) -> double { return std::uniform_real_distribution<double>(lo, hi)(_rng); }
    auto engine() -> std::mt19937_64& { return _rng; }

    auto identifier() -> std::string
    {
        static constexpr std::string_view head = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_";
        static constexpr std::string_view tail = "abcdefghijklmnopqrstuvwxyz0123456789_";
        auto out = std::string(1, head[uniform(head.size())]);
        auto const len = uniform(8);
        for (std::uint64_t i = 0; i < len; ++i)
            out.push_back(tail[uniform(tail.size())]);
        return out;
    }

    auto text() -> std::string
    {
        static constexpr std::string_view alphabet = "abc XYZ 019 \"'\\\n\t,()[]{}=:é";
        auto out = std::string {};
        auto const len = uniform(12);
        for (std::uint64_t i = 0; i < len; ++i)
        {
            auto const c = alphabet[uniform(alphabet.size())];
            // keep multi-byte characters whole
            if (static_cast<unsigned char>(c) >= 0x80)
                out += "é";
            else
                out.push_back(c);
        }
        return out;
    }

    /// Random literal tree of the action grammar, depth ≤ `depth`.
    auto literal(int depth) -> Value
    {
        auto const kind = uniform(depth > 0 ? 8 : 6);
        switch (kind)
        {
            case 0: return text();
            case 1: return static_cast<std::int64_t>(uniform(2000)) - 1000;
            case 2: return std::round(real(-1000, 1000) * 1000) / 1000.0;
            case 3: return chance(0.5);
            case 4: return nullptr;
            case 5: return identifier();
            case 6:
            {
                auto list = Value::array();
                auto const n = uniform(4);
                for (std::uint64_t i = 0; i < n; ++i)
                    list.push_back(literal(depth - 1));
                return list;
            }
            default:
            {
                auto map = Value::object();
                auto const n = uniform(4);
                for (std::uint64_t i = 0; i < n; ++i)
                    map[text()] = literal(depth - 1);
                return map;
            }
        }
    }

    auto tool_call(int depth = 4) -> ToolCall
    {
        auto c = ToolCall {identifier(), {}};
        auto const n = uniform(4);
        for (std::uint64_t i = 0; i < n; ++i)
        {
            auto name = identifier();
            if (c.arg(name) == nullptr)
                c.arguments.emplace_back(std::move(name), literal(depth - 1));
        }
        return c;
    }

    /// Calls over the vault tool set with plausible and implausible arguments.
    auto vault_call() -> ToolCall
    {
        static const std::vector<std::string> accounts {"A", "B", "C", "Z", ""};
        auto account = [&] { return Value(accounts[uniform(accounts.size())]); };
        auto amount = [&]() -> Value {
            switch (uniform(4))
            {
                case 0: return static_cast<std::int64_t>(uniform(150));
                case 1: return std::round(real(-10, 120) * 100) / 100.0;
                case 2: return "ten";
                default: return static_cast<std::int64_t>(uniform(40)) + 1;
            }
        };
        switch (uniform(7))
        {
            case 0: return call("balance", {{"account", account()}});
            case 1: return call("transfer", {{"src", account()}, {"dst", account()}, {"amount", amount()}});
            case 2: return call("deposit", {{"account", account()}, {"amount", amount()}});
            case 3: return call("withdraw", {{"account", account()}, {"amount", amount()}});
            case 4: return call("open_account", {{"name", account()}});
            case 5: return call("list_accounts");
            default: return call("steal", {{"account", account()}});
        }
    }

    auto fileio_call() -> ToolCall
    {
        static const std::vector<std::string> paths {"/home/user/notes.txt", "/home/user/todo.txt", "/etc/config.ini",
                                                     "/tmp/x.txt",           "relative.txt",        "/home/../etc",
                                                     "/home/user/"};
        auto path = [&] { return Value(paths[uniform(paths.size())]); };
        switch (uniform(7))
        {
            case 0: return call("read_file", {{"path", path()}});
            case 1: return call("write_file", {{"path", path()}, {"content", text()}});
            case 2: return call("create_file", {{"path", path()}, {"content", text()}});
            case 3: return call("delete_file", {{"path", path()}});
            case 4: return call("move_file", {{"src", path()}, {"dst", path()}});
            case 5: return call("list_files", {{"prefix", Value(uniform(2) == 0 ? "/home" : "/")}});
            default: return call("chmod", {{"path", path()}});
        }
    }

  private:
    std::mt19937_64 _rng;
};

} // namespace atris::test
