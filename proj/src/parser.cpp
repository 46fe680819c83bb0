// SPDX-License-Identifier: Apache-2.0
#include <atris/parser.hpp>

#include <array>
#include <charconv>
#include <cmath>

namespace atris
{

namespace
{

constexpr int maxNesting = 64;

auto describe(std::string_view input, std::size_t pos) -> std::string
{
    if (pos >= input.size())
        return "end of input";
    auto const c = static_cast<unsigned char>(input[pos]);
    if (c < 0x20 || c >= 0x7f)
    {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "0x%02x", c);
        return buf;
    }
    return std::string("'") + input[pos] + "'";
}

auto trim(std::string_view s) -> std::string_view
{
    auto const ws = " \t\r\n\f\v";
    auto const b = s.find_first_not_of(ws);
    if (b == std::string_view::npos)
        return {};
    auto const e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

void appendUtf8(std::string& out, std::uint32_t cp)
{
    if (cp < 0x80)
        out.push_back(static_cast<char>(cp));
    else if (cp < 0x800)
    {
        out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
    else if (cp < 0x10000)
    {
        out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
    else
    {
        out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
    }
}

/// Recursive-descent reader over the action and literal grammar.
class Reader
{
  public:
    explicit Reader(std::string_view input, std::size_t pos = 0): _in(input), _pos(pos) {}

    [[nodiscard]] auto pos() const -> std::size_t { return _pos; }

    void skipSpace()
    {
        while (_pos < _in.size() && std::isspace(static_cast<unsigned char>(_in[_pos])))
            ++_pos;
    }

    [[nodiscard]] auto atEnd() -> bool
    {
        skipSpace();
        return _pos >= _in.size();
    }

    [[noreturn]] void fail(std::string expected) const { throw ParseError(_pos, std::move(expected), describe(_in, _pos)); }

    void expect(char c)
    {
        skipSpace();
        if (_pos >= _in.size() || _in[_pos] != c)
            fail(std::string("'") + c + "'");
        ++_pos;
    }

    auto accept(char c) -> bool
    {
        skipSpace();
        if (_pos < _in.size() && _in[_pos] == c)
        {
            ++_pos;
            return true;
        }
        return false;
    }

    auto peek() -> char
    {
        skipSpace();
        return _pos < _in.size() ? _in[_pos] : '\0';
    }

    auto identifier() -> std::string
    {
        skipSpace();
        auto const start = _pos;
        if (_pos < _in.size() && (std::isalpha(static_cast<unsigned char>(_in[_pos])) || _in[_pos] == '_'))
        {
            ++_pos;
            while (_pos < _in.size()
                   && (std::isalnum(static_cast<unsigned char>(_in[_pos])) || _in[_pos] == '_' || _in[_pos] == '.'))
                ++_pos;
        }
        if (_pos == start)
            fail("identifier");
        return std::string(_in.substr(start, _pos - start));
    }

    auto callList() -> std::vector<ToolCall>
    {
        expect('[');
        auto calls = std::vector<ToolCall> {};
        do
        {
            calls.push_back(call());
        } while (accept(','));
        expect(']');
        return calls;
    }

    auto call() -> ToolCall
    {
        auto c = ToolCall {};
        c.tool = identifier();
        expect('(');
        if (!accept(')'))
        {
            do
            {
                auto const argPos = (skipSpace(), _pos);
                auto name = identifier();
                if (c.arg(name) != nullptr)
                    throw ParseError(argPos, "unique argument name", "duplicate '" + name + "'");
                expect('=');
                c.arguments.emplace_back(std::move(name), literal(0));
            } while (accept(','));
            expect(')');
        }
        return c;
    }

    auto literal(int depth) -> Value
    {
        skipSpace();
        if (depth > maxNesting)
            fail("literal nested at most 64 deep");
        if (_pos >= _in.size())
            fail("literal");
        auto const c = _in[_pos];
        if (c == '"' || c == '\'')
            return Value(string());
        if (c == '[')
            return list(depth);
        if (c == '{')
            return map(depth);
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c)))
            return number();
        if (std::isalpha(static_cast<unsigned char>(c)))
        {
            auto const start = _pos;
            while (_pos < _in.size() && std::isalnum(static_cast<unsigned char>(_in[_pos])))
                ++_pos;
            auto const word = _in.substr(start, _pos - start);
            if (word == "True" || word == "true")
                return Value(true);
            if (word == "False" || word == "false")
                return Value(false);
            if (word == "None" || word == "null")
                return Value(nullptr);
            _pos = start;
        }
        fail("literal");
    }

    auto string() -> std::string
    {
        auto const quote = _in[_pos++];
        auto out = std::string {};
        while (true)
        {
            if (_pos >= _in.size())
                fail(std::string("closing ") + quote);
            auto const c = _in[_pos];
            if (c == quote)
            {
                ++_pos;
                return out;
            }
            if (c != '\\')
            {
                out.push_back(c);
                ++_pos;
                continue;
            }
            ++_pos;
            if (_pos >= _in.size())
                fail("escape character");
            switch (_in[_pos])
            {
                case '"': out.push_back('"'); break;
                case '\'': out.push_back('\''); break;
                case '\\': out.push_back('\\'); break;
                case '/': out.push_back('/'); break;
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case 'b': out.push_back('\b'); break;
                case 'f': out.push_back('\f'); break;
                case 'u':
                {
                    auto cp = hex4(_pos + 1);
                    _pos += 4;
                    if (cp >= 0xd800 && cp <= 0xdbff && _pos + 6 < _in.size() && _in[_pos + 1] == '\\'
                        && _in[_pos + 2] == 'u')
                    {
                        auto const low = hex4(_pos + 3);
                        if (low >= 0xdc00 && low <= 0xdfff)
                        {
                            cp = 0x10000 + ((cp - 0xd800) << 10) + (low - 0xdc00);
                            _pos += 6;
                        }
                    }
                    appendUtf8(out, cp);
                    break;
                }
                default: fail("valid escape sequence");
            }
            ++_pos;
        }
    }

    auto hex4(std::size_t at) -> std::uint32_t
    {
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < 4; ++i)
        {
            if (at + i >= _in.size() || !std::isxdigit(static_cast<unsigned char>(_in[at + i])))
                throw ParseError(std::min(at + i, _in.size()), "hex digit", describe(_in, at + i));
            auto const c = static_cast<char>(std::tolower(static_cast<unsigned char>(_in[at + i])));
            v = v * 16 + static_cast<std::uint32_t>(c <= '9' ? c - '0' : c - 'a' + 10);
        }
        return v;
    }

    auto number() -> Value
    {
        auto const start = _pos;
        if (_in[_pos] == '-')
            ++_pos;
        auto digits = [&] {
            auto const s = _pos;
            while (_pos < _in.size() && std::isdigit(static_cast<unsigned char>(_in[_pos])))
                ++_pos;
            return _pos - s;
        };
        if (digits() == 0)
            fail("digit");
        auto isDecimal = false;
        if (_pos < _in.size() && _in[_pos] == '.')
        {
            ++_pos;
            isDecimal = true;
            if (digits() == 0)
                fail("digit");
        }
        if (_pos < _in.size() && (_in[_pos] == 'e' || _in[_pos] == 'E'))
        {
            ++_pos;
            isDecimal = true;
            if (_pos < _in.size() && (_in[_pos] == '+' || _in[_pos] == '-'))
                ++_pos;
            if (digits() == 0)
                fail("exponent digit");
        }
        auto const text = _in.substr(start, _pos - start);
        if (!isDecimal)
        {
            std::int64_t v = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
            if (ec == std::errc {} && p == text.data() + text.size())
                return Value(v);
            throw ParseError(start, "integer within 64-bit range", std::string(text));
        }
        double d = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
        if (ec != std::errc {} || !std::isfinite(d))
            throw ParseError(start, "finite decimal", std::string(text));
        return Value(d);
    }

    auto list(int depth) -> Value
    {
        ++_pos; // '['
        auto out = Value::array();
        if (accept(']'))
            return out;
        do
        {
            out.push_back(literal(depth + 1));
        } while (accept(','));
        expect(']');
        return out;
    }

    auto map(int depth) -> Value
    {
        ++_pos; // '{'
        auto out = Value::object();
        if (accept('}'))
            return out;
        do
        {
            skipSpace();
            auto const keyPos = _pos;
            if (_pos >= _in.size() || (_in[_pos] != '"' && _in[_pos] != '\''))
                fail("string key");
            auto key = string();
            if (out.contains(key))
                throw ParseError(keyPos, "unique map key", "duplicate \"" + key + "\"");
            expect(':');
            out[key] = literal(depth + 1);
        } while (accept(','));
        expect('}');
        return out;
    }

  private:
    std::string_view _in;
    std::size_t _pos;
};

constexpr std::array<std::string_view, 6> knownTags {"Evaluation", "Result", "Suggestion", "Output", "Attempt", "Action"};

auto findTagged(std::string_view text, std::string_view tag) -> std::optional<std::string>
{
    auto const open = "<" + std::string(tag) + ">";
    auto const close = "</" + std::string(tag) + ">";
    auto const b = text.find(open);
    if (b == std::string_view::npos)
        return std::nullopt;
    auto const start = b + open.size();
    auto const e = text.find(close, start);
    if (e == std::string_view::npos)
        return std::nullopt;
    return std::string(trim(text.substr(start, e - start)));
}

} // namespace

ParseError::ParseError(std::size_t position, std::string expected, std::string found):
    Error("parse error at offset " + std::to_string(position) + ": expected " + expected + ", found " + found),
    _position(position),
    _expected(std::move(expected)),
    _found(std::move(found))
{
}

TagMissingError::TagMissingError(std::string tag): Error("missing <" + tag + "> section"), _tag(std::move(tag)) {}

auto parse_action_output(std::string_view text) -> ActionOutput
{
    auto r = Reader(text);
    if (r.peek() != '[')
        return ActionOutput {ActionOutput::Kind::natural_reply, {}, std::string(text)};

    auto out = ActionOutput {};
    out.kind = ActionOutput::Kind::calls;
    out.calls = r.callList();
    if (!r.atEnd())
        r.fail("end of input after call list");
    return out;
}

auto parse_literal(std::string_view text) -> Value
{
    auto r = Reader(text);
    auto v = r.literal(0);
    if (!r.atEnd())
        r.fail("end of input");
    return v;
}

auto extract_tagged(std::string_view text, std::string_view tag) -> std::string
{
    if (std::find(knownTags.begin(), knownTags.end(), tag) == knownTags.end())
        throw std::invalid_argument("unknown section tag '" + std::string(tag) + "'");
    auto found = findTagged(text, tag);
    if (!found)
        throw TagMissingError(std::string(tag));
    return *found;
}

auto parse_evaluation(std::string_view text) -> EvaluationResult
{
    auto result = std::string {};
    try
    {
        result = extract_tagged(text, "Result");
    }
    catch (const TagMissingError&)
    {
        throw MalformedEvaluationError("evaluation has no <Result> section");
    }
    auto const token = result.substr(0, result.find_first_of(" \t\r\n"));
    if (token != "0" && token != "1")
        throw MalformedEvaluationError("evaluation result must be 0 or 1, got '" + token + "'");

    auto eval = EvaluationResult {};
    eval.verdict = token == "1" ? Verdict::pass : Verdict::fail;
    eval.rationale = findTagged(text, "Evaluation").value_or("");
    eval.suggestion = findTagged(text, "Suggestion");
    if (eval.verdict == Verdict::fail && !eval.suggestion)
        eval.suggestion = std::string {};
    return eval;
}

auto parse_evaluation_lenient(std::string_view text) -> EvaluationParse
{
    try
    {
        return EvaluationParse {parse_evaluation(text), std::nullopt};
    }
    catch (const MalformedEvaluationError& e)
    {
        auto result = EvaluationResult {Verdict::fail, std::string(trim(text)), findTagged(text, "Suggestion").value_or("")};
        return EvaluationParse {std::move(result), std::string(e.what())};
    }
}

auto parse_simulator_output(std::string_view text, std::size_t expected_count) -> SimulatorOutput
{
    if (expected_count == 0)
        throw std::invalid_argument("expected_count must be >= 1");
    auto section = std::string {};
    try
    {
        section = extract_tagged(text, "Output");
    }
    catch (const TagMissingError&)
    {
        throw UnparseableOutputError("simulator output has no <Output> section");
    }

    auto list = Value {};
    try
    {
        list = parse_literal(section);
    }
    catch (const ParseError& e)
    {
        throw UnparseableOutputError(std::string("simulator output is not a literal list: ") + e.what());
    }
    if (!list.is_array())
        throw UnparseableOutputError("simulator output is not a list");
    for (const auto& item: list)
    {
        if (!item.is_object())
            throw UnparseableOutputError("simulator output list must contain only objects");
    }

    auto out = SimulatorOutput {};
    out.payloads.assign(list.begin(), list.end());
    if (out.payloads.size() < expected_count)
    {
        out.repair = "padded " + std::to_string(out.payloads.size()) + " payload(s) to " + std::to_string(expected_count);
        while (out.payloads.size() < expected_count)
            out.payloads.push_back(error_payload(omitted_response_error));
    }
    else if (out.payloads.size() > expected_count)
    {
        out.repair =
            "truncated " + std::to_string(out.payloads.size()) + " payload(s) to " + std::to_string(expected_count);
        out.payloads.resize(expected_count);
    }
    return out;
}

auto find_object(std::string_view text, std::initializer_list<std::string_view> required_keys) -> std::optional<Value>
{
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos)
    {
        auto r = Reader(text, pos);
        try
        {
            auto v = r.literal(0);
            auto const ok = std::all_of(required_keys.begin(), required_keys.end(),
                                        [&](std::string_view k) { return v.contains(std::string(k)); });
            if (ok)
                return v;
            pos = r.pos();
        }
        catch (const ParseError&)
        {
            ++pos;
        }
    }
    return std::nullopt;
}

auto parse_summary(std::string_view text) -> Summary
{
    auto obj = find_object(text, {"recommendation", "rationale"});
    if (!obj || !(*obj)["recommendation"].is_string() || !(*obj)["rationale"].is_string())
        throw SummaryMissingError("no object with \"recommendation\" and \"rationale\" found");
    auto s = Summary {(*obj)["recommendation"].get<std::string>(), (*obj)["rationale"].get<std::string>()};
    if (s.recommendation.empty())
        throw SummaryMissingError("summary recommendation is empty");
    return s;
}

auto parse_score(std::string_view text) -> ScoreParse
{
    auto out = ScoreParse {};
    auto obj = find_object(text, {"score"});
    if (!obj)
    {
        out.incident = "scorer output has no object with a \"score\" field";
        out.evaluation = std::string(trim(text));
        return out;
    }
    auto const& score = (*obj)["score"];
    if (obj->contains("evaluation") && (*obj)["evaluation"].is_string())
        out.evaluation = (*obj)["evaluation"].get<std::string>();
    if (obj->contains("suggestion") && (*obj)["suggestion"].is_string())
        out.suggestion = (*obj)["suggestion"].get<std::string>();
    if (score.is_number_integer() && score.get<std::int64_t>() >= 1 && score.get<std::int64_t>() <= 10)
        out.score = static_cast<int>(score.get<std::int64_t>());
    else
        out.incident = "scorer returned out-of-range score " + score.dump();
    return out;
}

} // namespace atris
