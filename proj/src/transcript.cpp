// SPDX-License-Identifier: Apache-2.0
#include <atris/transcript.hpp>

#include <sstream>

namespace atris
{

void to_json(Value& j, const Message& m)
{
    j = Value {{"role", std::string(to_string(m.role))}, {"content", m.content}};
}

void from_json(const Value& j, Message& m)
{
    m.role = role_from_string(j.at("role").get<std::string>());
    m.content = j.at("content").get<std::string>();
    m = make_message(m.role, std::move(m.content));
}

void to_json(Value& j, const ParamSpec& p)
{
    j = Value {{"name", p.name}, {"type", p.type}, {"required", p.required}, {"description", p.description}};
}

void from_json(const Value& j, ParamSpec& p)
{
    p.name = j.at("name").get<std::string>();
    p.type = j.at("type").get<std::string>();
    p.required = j.value("required", true);
    p.description = j.value("description", std::string {});
}

void to_json(Value& j, const ToolSpec& s)
{
    j = Value {{"name", s.name}, {"description", s.description}, {"parameters", s.parameters}};
}

void from_json(const Value& j, ToolSpec& s)
{
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", std::string {});
    s.parameters = j.value("parameters", std::vector<ParamSpec> {});
    validate(s);
}

void to_json(Value& j, const ToolCall& c)
{
    auto args = Value::array();
    for (const auto& [name, value]: c.arguments)
        args.push_back(Value::array({name, value}));
    j = Value {{"tool", c.tool}, {"arguments", std::move(args)}};
}

void from_json(const Value& j, ToolCall& c)
{
    c.tool = j.at("tool").get<std::string>();
    c.arguments.clear();
    for (const auto& pair: j.at("arguments"))
        c.arguments.emplace_back(pair.at(0).get<std::string>(), pair.at(1));
    validate(c);
}

void to_json(Value& j, const OutcomeTypeKey& k)
{
    j = Value {{"tool", k.tool}, {"otype", k.otype}};
}

void from_json(const Value& j, OutcomeTypeKey& k)
{
    k.tool = j.at("tool").get<std::string>();
    k.otype = j.at("otype").get<std::string>();
}

void to_json(Value& j, const ToolOutcome& o)
{
    j = Value {{"payloads", o.payloads}, {"status", std::string(to_string(o.status))}, {"types", o.types}};
}

void from_json(const Value& j, ToolOutcome& o)
{
    o.payloads = j.at("payloads").get<std::vector<Value>>();
    auto const status = j.at("status").get<std::string>();
    if (status != "success" && status != "failure")
        throw InvariantError("unknown outcome status '" + status + "'");
    o.status = status == "success" ? Status::success : Status::failure;
    o.types = j.value("types", std::vector<OutcomeTypeKey> {});
    validate(o);
}

void to_json(Value& j, const Step& s)
{
    j = Value {{"calls", s.calls}, {"outcome", s.outcome}};
}

void from_json(const Value& j, Step& s)
{
    s.calls = j.at("calls").get<std::vector<ToolCall>>();
    s.outcome = j.at("outcome").get<ToolOutcome>();
    validate(s);
}

void to_json(Value& j, const TurnHistory& h)
{
    j = Value {{"base", h.base}, {"steps", h.steps}};
    j["closing_reply"] = h.closing_reply ? Value(*h.closing_reply) : Value(nullptr);
}

void from_json(const Value& j, TurnHistory& h)
{
    h.base = j.at("base").get<std::vector<Message>>();
    h.steps = j.at("steps").get<std::vector<Step>>();
    auto const& reply = j.at("closing_reply");
    h.closing_reply = reply.is_null() ? std::nullopt : std::optional<std::string>(reply.get<std::string>());
}

void to_json(Value& j, const EvaluationResult& e)
{
    j = Value {{"verdict", std::string(to_string(e.verdict))}, {"rationale", e.rationale}};
    j["suggestion"] = e.suggestion ? Value(*e.suggestion) : Value(nullptr);
}

void from_json(const Value& j, EvaluationResult& e)
{
    auto const verdict = j.at("verdict").get<std::string>();
    if (verdict != "pass" && verdict != "fail")
        throw InvariantError("unknown verdict '" + verdict + "'");
    e.verdict = verdict == "pass" ? Verdict::pass : Verdict::fail;
    e.rationale = j.at("rationale").get<std::string>();
    auto const& s = j.at("suggestion");
    e.suggestion = s.is_null() ? std::nullopt : std::optional<std::string>(s.get<std::string>());
    validate(e);
}

void to_json(Value& j, const AttemptRecord& a)
{
    j = Value {{"index", a.index}, {"trajectory", a.trajectory}};
    j["evaluation"] = a.evaluation ? Value(*a.evaluation) : Value(nullptr);
    j["discarded"] = a.discarded;
    j["step_capped"] = a.step_capped;
}

void from_json(const Value& j, AttemptRecord& a)
{
    a.index = j.at("index").get<int>();
    if (a.index < 1)
        throw InvariantError("attempt index must be >= 1");
    a.trajectory = j.at("trajectory").get<TurnHistory>();
    auto const& e = j.at("evaluation");
    a.evaluation = e.is_null() ? std::nullopt : std::optional<EvaluationResult>(e.get<EvaluationResult>());
    a.discarded = j.at("discarded").get<bool>();
    a.step_capped = j.value("step_capped", false);
}

void to_json(Value& j, const Summary& s)
{
    j = Value {{"recommendation", s.recommendation}, {"rationale", s.rationale}};
}

void from_json(const Value& j, Summary& s)
{
    s.recommendation = j.at("recommendation").get<std::string>();
    s.rationale = j.at("rationale").get<std::string>();
    validate(s);
}

auto parse_json(std::string_view text) -> Value
{
    try
    {
        return Value::parse(text);
    }
    catch (const nlohmann::json::parse_error& e)
    {
        // nlohmann reports the 1-based index of the last byte read.
        auto const pos = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
        throw DecodeError(pos, e.what());
    }
}

auto encode_record(const TranscriptRecord& record) -> std::string
{
    auto j = Value::object();
    j["task_id"] = record.task_id;
    j["turn_id"] = record.turn_id;
    j["attempt"] = record.attempt ? Value(*record.attempt) : Value("final");
    j["record_kind"] = record.kind;
    j["data"] = record.data;
    return j.dump();
}

auto decode_record(std::string_view line) -> TranscriptRecord
{
    auto const j = parse_json(line);
    try
    {
        auto r = TranscriptRecord {};
        r.task_id = j.at("task_id").get<std::string>();
        r.turn_id = j.at("turn_id").get<int>();
        auto const& attempt = j.at("attempt");
        if (attempt.is_string())
        {
            if (attempt.get<std::string>() != "final")
                throw DecodeError(line.size(), "attempt must be an index or \"final\"");
        }
        else
        {
            r.attempt = attempt.get<int>();
        }
        r.kind = j.at("record_kind").get<std::string>();
        r.data = j.at("data");
        return r;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DecodeError(line.size(), e.what());
    }
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path): _out(path, std::ios::app), _path(path)
{
    if (!_out)
        throw Error("cannot open transcript for writing: " + path.string());
}

void TranscriptWriter::write(const TranscriptRecord& record)
{
    write_line(encode_record(record));
}

void TranscriptWriter::write_line(std::string_view line)
{
    auto lock = std::lock_guard(_mutex);
    _out << line << '\n';
    _out.flush();
    if (!_out)
        throw Error("write failed: " + _path.string());
}

auto read_file(const std::filesystem::path& path) -> std::string
{
    auto in = std::ifstream(path, std::ios::binary);
    if (!in)
        throw Error("cannot read file: " + path.string());
    auto buf = std::ostringstream {};
    buf << in.rdbuf();
    return buf.str();
}

auto read_transcript(const std::filesystem::path& path) -> std::vector<TranscriptRecord>
{
    auto const text = read_file(path);
    auto records = std::vector<TranscriptRecord> {};
    std::size_t offset = 0;
    while (offset < text.size())
    {
        auto end = text.find('\n', offset);
        if (end == std::string::npos)
            end = text.size();
        auto const line = std::string_view(text).substr(offset, end - offset);
        if (!line.empty())
        {
            try
            {
                records.push_back(decode_record(line));
            }
            catch (const DecodeError& e)
            {
                throw DecodeError(offset + e.position(), std::string("in ") + path.string() + ": " + e.what());
            }
        }
        offset = end + 1;
    }
    return records;
}

} // namespace atris
