// SPDX-License-Identifier: Apache-2.0
//
// Line-delimited transcript persistence. Every line is one JSON object tagged
// with {task_id, turn_id, attempt ("final" or a 1-based index), record_kind}
// and a `data` payload holding one of the conversation-core types.
#pragma once

#include <atris/conversation.hpp>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atris
{

void to_json(Value& j, const Message& m);
void from_json(const Value& j, Message& m);
void to_json(Value& j, const ParamSpec& p);
void from_json(const Value& j, ParamSpec& p);
void to_json(Value& j, const ToolSpec& s);
void from_json(const Value& j, ToolSpec& s);
void to_json(Value& j, const ToolCall& c);
void from_json(const Value& j, ToolCall& c);
void to_json(Value& j, const OutcomeTypeKey& k);
void from_json(const Value& j, OutcomeTypeKey& k);
void to_json(Value& j, const ToolOutcome& o);
void from_json(const Value& j, ToolOutcome& o);
void to_json(Value& j, const Step& s);
void from_json(const Value& j, Step& s);
void to_json(Value& j, const TurnHistory& h);
void from_json(const Value& j, TurnHistory& h);
void to_json(Value& j, const EvaluationResult& e);
void from_json(const Value& j, EvaluationResult& e);
void to_json(Value& j, const AttemptRecord& a);
void from_json(const Value& j, AttemptRecord& a);
void to_json(Value& j, const Summary& s);
void from_json(const Value& j, Summary& s);

/// Parses `text` as JSON, mapping syntax errors to DecodeError with the byte
/// position of the failure.
[[nodiscard]] auto parse_json(std::string_view text) -> Value;

/// Compact single-line serialization of a record.
template <typename T>
[[nodiscard]] auto serialize(const T& record) -> std::string
{
    return Value(record).dump();
}

/// Inverse of serialize(). Throws DecodeError on corrupt or truncated input.
template <typename T>
[[nodiscard]] auto deserialize(std::string_view text) -> T
{
    auto const j = parse_json(text);
    try
    {
        return j.get<T>();
    }
    catch (const nlohmann::json::exception& e)
    {
        throw DecodeError(text.size(), e.what());
    }
    catch (const InvariantError& e)
    {
        throw DecodeError(text.size(), e.what());
    }
}

struct TranscriptRecord
{
    std::string task_id;
    int turn_id = 0;
    std::optional<int> attempt; // nullopt means "final"
    std::string kind;
    Value data;

    auto operator==(const TranscriptRecord&) const -> bool = default;
};

[[nodiscard]] auto encode_record(const TranscriptRecord& record) -> std::string;
[[nodiscard]] auto decode_record(std::string_view line) -> TranscriptRecord;

/// Appends records to a transcript file; safe to share between threads.
class TranscriptWriter
{
  public:
    explicit TranscriptWriter(const std::filesystem::path& path);

    void write(const TranscriptRecord& record);
    void write_line(std::string_view line);

  private:
    std::mutex _mutex;
    std::ofstream _out;
    std::filesystem::path _path;
};

/// Reads every record of a transcript file. DecodeError positions are offsets
/// within the whole file.
[[nodiscard]] auto read_transcript(const std::filesystem::path& path) -> std::vector<TranscriptRecord>;

/// Reads a file into a string, throwing Error naming the path on failure.
[[nodiscard]] auto read_file(const std::filesystem::path& path) -> std::string;

} // namespace atris
