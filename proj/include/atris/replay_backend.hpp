// SPDX-License-Identifier: Apache-2.0
//
// Record/replay of backend exchanges.
//
// RecordingBackend forwards to an inner backend and appends one JSON line per
// exchange: {tag, role, fingerprint, text, usage}. ReplayBackend serves those
// lines back. Lookups are keyed on (tag, role, request fingerprint); repeated
// identical requests under one key are answered in recorded order.
#pragma once

#include <atris/backend.hpp>
#include <atris/transcript.hpp>

#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <tuple>

namespace atris
{

class ReplayMissError : public Error
{
  public:
    using Error::Error;
};

struct Exchange
{
    std::string tag;
    AgentRole role = AgentRole::action;
    std::string fingerprint;
    std::string text;
    Usage usage;
};

void to_json(Value& j, const Exchange& e);
void from_json(const Value& j, Exchange& e);

class RecordingBackend final : public ModelBackend
{
  public:
    RecordingBackend(ModelBackend& inner, const std::filesystem::path& path);

    auto send(const ChatRequest& request, AgentRole role) -> ChatResponse override;

  private:
    ModelBackend& _inner;
    TranscriptWriter _writer;
};

class ReplayBackend final : public ModelBackend
{
  public:
    explicit ReplayBackend(std::vector<Exchange> exchanges);

    /// Reads an exchanges file, or the `exchanges.jsonl` inside a run directory.
    [[nodiscard]] static auto load(const std::filesystem::path& path) -> std::unique_ptr<ReplayBackend>;

    auto send(const ChatRequest& request, AgentRole role) -> ChatResponse override;

  private:
    using Key = std::tuple<std::string, AgentRole, std::string>;

    std::mutex _mutex;
    std::map<Key, std::deque<Exchange>> _pending;
};

} // namespace atris
