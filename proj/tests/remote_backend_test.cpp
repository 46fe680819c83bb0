// SPDX-License-Identifier: Apache-2.0
#include <atris/remote_backend.hpp>
#include <atris/transcript.hpp>

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <thread>

using namespace atris;

namespace
{

auto okBody(const std::string& text) -> std::string
{
    return Value {{"choices", {{{"message", {{"role", "assistant"}, {"content", text}}}}}},
                  {"usage", {{"prompt_tokens", 11}, {"completion_tokens", 4}}}}
        .dump();
}

/// Local endpoint that answers with a scripted list of (status, body) pairs.
class FakeEndpoint
{
  public:
    explicit FakeEndpoint(std::vector<std::pair<int, std::string>> replies): _replies(std::move(replies))
    {
        _server.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            auto const i = std::min<std::size_t>(_hits++, _replies.size() - 1);
            _lastBody = req.body;
            _lastAuth = req.get_header_value("Authorization");
            res.status = _replies[i].first;
            res.set_content(_replies[i].second, "application/json");
        });
        _port = _server.bind_to_any_port("127.0.0.1");
        _thread = std::thread([this] { _server.listen_after_bind(); });
        _server.wait_until_ready();
    }

    ~FakeEndpoint()
    {
        _server.stop();
        _thread.join();
    }

    FakeEndpoint(const FakeEndpoint&) = delete;
    auto operator=(const FakeEndpoint&) -> FakeEndpoint& = delete;

    [[nodiscard]] auto config() const -> RemoteConfig
    {
        auto c = RemoteConfig {};
        c.base_url = "http://127.0.0.1:" + std::to_string(_port) + "/v1/";
        c.api_key = "sk-test";
        c.default_model = "m-default";
        c.models[AgentRole::simulator] = "m-sim";
        c.initial_backoff = std::chrono::milliseconds(100);
        c.timeout = std::chrono::seconds(5);
        return c;
    }

    [[nodiscard]] auto hits() const -> std::size_t { return _hits; }
    [[nodiscard]] auto last_body() const -> Value { return parse_json(_lastBody); }
    [[nodiscard]] auto last_auth() const -> const std::string& { return _lastAuth; }

  private:
    std::vector<std::pair<int, std::string>> _replies;
    httplib::Server _server;
    std::thread _thread;
    int _port = 0;
    std::atomic<std::size_t> _hits {0};
    std::string _lastBody;
    std::string _lastAuth;
};

auto request() -> ChatRequest
{
    auto r = ChatRequest {};
    r.messages = {{Role::system, "sys"}, {Role::user, "q"}, {Role::assistant, "[f()]"}, {Role::tool, "[{}]"}};
    r.temperature = 0.01;
    r.max_tokens = 256;
    r.seed = 5;
    r.tag = "not-sent";
    return r;
}

} // namespace

TEST(Remote, SuccessfulCompletion)
{
    auto server = FakeEndpoint({{200, okBody("hello")}});
    auto sleeps = std::vector<std::chrono::milliseconds> {};
    auto backend = RemoteBackend(server.config(), [&](auto d) { sleeps.push_back(d); });
    auto const r = backend.send(request(), AgentRole::simulator);
    EXPECT_EQ(r.text, "hello");
    EXPECT_EQ(r.usage, (Usage {11, 4}));
    EXPECT_TRUE(sleeps.empty());
    EXPECT_EQ(server.last_auth(), "Bearer sk-test");

    auto const body = server.last_body();
    EXPECT_EQ(body["model"], "m-sim");
    EXPECT_EQ(body["temperature"], 0.01);
    EXPECT_EQ(body["max_tokens"], 256);
    EXPECT_EQ(body["seed"], 5);
    EXPECT_FALSE(body.contains("tag"));
    ASSERT_EQ(body["messages"].size(), 4u);
    EXPECT_EQ(body["messages"][3]["role"], "user");
    EXPECT_EQ(body["messages"][2]["role"], "assistant");
}

TEST(Remote, RetriesTransientStatusWithBackoff)
{
    auto server = FakeEndpoint({{429, "{}"}, {503, "{}"}, {200, okBody("late")}});
    auto sleeps = std::vector<std::chrono::milliseconds> {};
    auto backend = RemoteBackend(server.config(), [&](auto d) { sleeps.push_back(d); });
    EXPECT_EQ(backend.send(request(), AgentRole::action).text, "late");
    EXPECT_EQ(server.hits(), 3u);
    ASSERT_EQ(sleeps.size(), 2u);
    EXPECT_EQ(sleeps[0].count(), 100);
    EXPECT_EQ(sleeps[1].count(), 200);
}

TEST(Remote, GivesUpAfterMaxRetries)
{
    auto server = FakeEndpoint({{500, "{}"}});
    auto backend = RemoteBackend(server.config(), [](auto) {});
    EXPECT_THROW((void)backend.send(request(), AgentRole::action), TransportError);
    EXPECT_EQ(server.hits(), 4u);
}

TEST(Remote, ClientErrorIsNotRetried)
{
    auto server = FakeEndpoint({{401, R"({"error": "bad key"})"}});
    auto backend = RemoteBackend(server.config(), [](auto) {});
    EXPECT_THROW((void)backend.send(request(), AgentRole::action), TransportError);
    EXPECT_EQ(server.hits(), 1u);
}

TEST(Remote, ContextLengthBecomesOverflow)
{
    auto server =
        FakeEndpoint({{400, R"({"error": {"message": "This model's maximum context length is 8192 tokens"}})"}});
    auto backend = RemoteBackend(server.config(), [](auto) {});
    EXPECT_THROW((void)backend.send(request(), AgentRole::action), ContextOverflowError);
    EXPECT_EQ(server.hits(), 1u);
}

TEST(Remote, UnreachableEndpointIsTransportError)
{
    auto config = RemoteConfig {};
    config.base_url = "http://127.0.0.1:1";
    config.max_retries = 1;
    auto backend = RemoteBackend(config, [](auto) {});
    EXPECT_THROW((void)backend.send(request(), AgentRole::action), TransportError);
}

TEST(Remote, ResponseParsing)
{
    EXPECT_EQ(parse_chat_response(okBody("x")).text, "x");
    EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"y"}}]})").usage, (Usage {}));
    EXPECT_THROW((void)parse_chat_response("{}"), TransportError);
    EXPECT_THROW((void)parse_chat_response("<html>"), TransportError);
    EXPECT_THROW((void)parse_chat_response(R"({"choices":[{"message":{"content":null}}]})"), TransportError);
}

TEST(Remote, BadBaseUrl)
{
    auto config = RemoteConfig {};
    config.base_url = "localhost:8000";
    EXPECT_THROW(RemoteBackend(config, [](auto) {}), ConfigError);
}
