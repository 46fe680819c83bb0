// SPDX-License-Identifier: Apache-2.0
//
// Parsers for every structured model output the agent prompts ask for.
//
// Action grammar (keyword arguments only):
//
//   action  := '[' call (',' call)* ']'
//   call    := ident '(' (kwarg (',' kwarg)*)? ')'
//   kwarg   := ident '=' literal
//   literal := string | integer | decimal | bool | null | list | map
//   string  := '"' ... '"' | '\'' ... '\''       (backslash escapes)
//   bool    := True | true | False | false
//   null    := None | null
//   list    := '[' (literal (',' literal)*)? ']'
//   map     := '{' (string ':' literal (',' string ':' literal)*)? '}'
//
// Whitespace is allowed between any two tokens.
#pragma once

#include <atris/conversation.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atris
{

class ParseError : public Error
{
  public:
    ParseError(std::size_t position, std::string expected, std::string found);

    [[nodiscard]] auto position() const noexcept -> std::size_t { return _position; }
    [[nodiscard]] auto expected() const -> const std::string& { return _expected; }
    [[nodiscard]] auto found() const -> const std::string& { return _found; }

  private:
    std::size_t _position;
    std::string _expected;
    std::string _found;
};

class TagMissingError : public Error
{
  public:
    explicit TagMissingError(std::string tag);

    [[nodiscard]] auto tag() const -> const std::string& { return _tag; }

  private:
    std::string _tag;
};

class MalformedEvaluationError : public Error
{
  public:
    using Error::Error;
};

class UnparseableOutputError : public Error
{
  public:
    using Error::Error;
};

class SummaryMissingError : public Error
{
  public:
    using Error::Error;
};

struct ActionOutput
{
    enum class Kind
    {
        calls,
        natural_reply,
    };

    Kind kind = Kind::natural_reply;
    std::vector<ToolCall> calls;
    std::string reply;

    [[nodiscard]] auto has_calls() const -> bool { return kind == Kind::calls; }
};

/// A bracketed call list when the first non-whitespace character is '[';
/// otherwise a natural reply carrying the raw text. Malformed call lists throw
/// ParseError rather than degrading to a reply.
[[nodiscard]] auto parse_action_output(std::string_view text) -> ActionOutput;

/// Parses a single literal that must span all of `text` (surrounding whitespace allowed).
[[nodiscard]] auto parse_literal(std::string_view text) -> Value;

/// Trimmed contents of the first `<tag>...</tag>` span. Tag names are case sensitive.
[[nodiscard]] auto extract_tagged(std::string_view text, std::string_view tag) -> std::string;

/// Self-evaluation output: pass iff the Result section's first token is "1".
/// Throws MalformedEvaluationError when the Result section is missing or invalid.
[[nodiscard]] auto parse_evaluation(std::string_view text) -> EvaluationResult;

/// Total variant of parse_evaluation(): malformed output becomes a failing
/// verdict and `incident` describes what went wrong.
struct EvaluationParse
{
    EvaluationResult result;
    std::optional<std::string> incident;
};

[[nodiscard]] auto parse_evaluation_lenient(std::string_view text) -> EvaluationParse;

struct SimulatorOutput
{
    std::vector<Value> payloads;
    std::optional<std::string> repair; // set when padding/truncation happened
};

/// Payload list from a simulator's `<Output>` section, padded with synthesized
/// error payloads or truncated to exactly `expected_count` entries.
[[nodiscard]] auto parse_simulator_output(std::string_view text, std::size_t expected_count) -> SimulatorOutput;

inline constexpr std::string_view omitted_response_error = "simulator omitted response";

/// First top-level braced object holding string fields "recommendation" and "rationale".
[[nodiscard]] auto parse_summary(std::string_view text) -> Summary;

/// Scorer output `{"evaluation": ..., ["suggestion": ...,] "score": 1..10}`.
struct ScoreParse
{
    int score = 1;
    std::string evaluation;
    std::optional<std::string> suggestion;
    std::optional<std::string> incident; // set when the score fell back to 1
};

[[nodiscard]] auto parse_score(std::string_view text) -> ScoreParse;

/// First braced object in `text` that parses as a map literal and holds every
/// key in `required_keys`.
[[nodiscard]] auto find_object(std::string_view text, std::initializer_list<std::string_view> required_keys)
    -> std::optional<Value>;

} // namespace atris
