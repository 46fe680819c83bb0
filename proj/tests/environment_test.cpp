// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <atris/environment.hpp>

#include <gtest/gtest.h>

using namespace atris;
using atris::test::call;
using atris::test::Gen;

namespace
{

auto one(Environment& env, ToolCall c) -> Value
{
    auto const calls = std::vector<ToolCall> {std::move(c)};
    auto const out = env.execute(calls);
    EXPECT_EQ(out.payloads.size(), 1u);
    return out.payloads.at(0);
}

auto otype(Environment& env, ToolCall c) -> std::string
{
    auto const calls = std::vector<ToolCall> {std::move(c)};
    return env.execute(calls).types.at(0).otype;
}

} // namespace

TEST(Vault, FreshBalance)
{
    auto env = make_vault();
    EXPECT_EQ(one(*env, call("balance", {{"account", "A"}})), (Value {{"balance", 100}}));
}

TEST(Vault, TransferMovesFunds)
{
    auto env = make_vault();
    EXPECT_EQ(one(*env, call("transfer", {{"src", "A"}, {"dst", "B"}, {"amount", 30}})),
              (Value {{"status", "ok"}, {"src_balance", 70}, {"dst_balance", 30}}));
    EXPECT_EQ(one(*env, call("balance", {{"account", "B"}})), (Value {{"balance", 30}}));
}

TEST(Vault, OverdraftFailsWithoutChangingState)
{
    auto env = make_vault();
    auto const before = env->snapshot();
    EXPECT_EQ(one(*env, call("transfer", {{"src", "A"}, {"dst", "B"}, {"amount", 150}})),
              (Value {{"error", "insufficient funds"}}));
    EXPECT_EQ(env->snapshot(), before);
}

TEST(Vault, UnknownAccount)
{
    auto env = make_vault();
    EXPECT_EQ(one(*env, call("balance", {{"account", "Z"}})), (Value {{"error", "unknown account Z"}}));
    EXPECT_EQ(otype(*env, call("balance", {{"account", "Z"}})), "unknown_account");
}

TEST(Vault, FailureLabels)
{
    auto env = make_vault();
    EXPECT_EQ(otype(*env, call("withdraw", {{"account", "B"}, {"amount", 5}})), "insufficient_funds");
    EXPECT_EQ(otype(*env, call("deposit", {{"account", "A"}, {"amount", -5}})), "invalid_amount");
    EXPECT_EQ(otype(*env, call("deposit", {{"account", "A"}, {"amount", 0}})), "invalid_amount");
    EXPECT_EQ(otype(*env, call("deposit", {{"account", "A"}, {"amount", "ten"}})), "bad_argument_type");
    EXPECT_EQ(otype(*env, call("deposit", {{"account", "A"}})), "bad_argument_type");
    EXPECT_EQ(otype(*env, call("open_account", {{"name", "A"}})), "account_exists");
    EXPECT_EQ(otype(*env, call("steal", {{"account", "A"}})), "unknown_tool");
    EXPECT_EQ(otype(*env, call("list_accounts")), "success");
}

TEST(Vault, BatchContinuesAfterFailure)
{
    auto env = make_vault();
    auto const calls = std::vector<ToolCall> {
        call("transfer", {{"src", "B"}, {"dst", "A"}, {"amount", 30}}),
        call("transfer", {{"src", "A"}, {"dst", "B"}, {"amount", 30}}),
        call("balance", {{"account", "B"}}),
    };
    auto const out = env->execute(calls);
    ASSERT_EQ(out.payloads.size(), 3u);
    EXPECT_TRUE(is_error_payload(out.payloads[0]));
    EXPECT_EQ(out.payloads[2], (Value {{"balance", 30}}));
    EXPECT_EQ(out.status, Status::failure);
    EXPECT_EQ(out.types[0].str(), "vault.transfer/insufficient_funds");
    EXPECT_EQ(out.types[1].str(), "vault.transfer/success");
}

TEST(Vault, SnapshotVersionCountsMutations)
{
    auto env = make_vault();
    EXPECT_EQ(env->snapshot().version, 0);
    (void)one(*env, call("balance", {{"account", "A"}}));
    EXPECT_EQ(env->snapshot().version, 0);
    (void)one(*env, call("deposit", {{"account", "A"}, {"amount", 1}}));
    EXPECT_EQ(env->snapshot().version, 1);
    (void)one(*env, call("withdraw", {{"account", "B"}, {"amount", 1}}));
    EXPECT_EQ(env->snapshot().version, 1);
}

TEST(Vault, InitialStateValidation)
{
    EXPECT_THROW((void)make_vault(Value {{"accounts", Value::array()}}), ConfigError);
    EXPECT_THROW((void)make_vault(Value {{"accounts", {{"A", "lots"}}}}), ConfigError);
    EXPECT_THROW((void)make_environment("bank"), ConfigError);
}

TEST(FileIo, ReadWriteAndPermissions)
{
    auto env = make_fileio();
    EXPECT_EQ(one(*env, call("read_file", {{"path", "/home/user/notes.txt"}})), (Value {{"content", "meeting at 10"}}));
    EXPECT_EQ(one(*env, call("write_file", {{"path", "/tmp/x.txt"}, {"content", "hey"}})),
              (Value {{"status", "ok"}, {"bytes", 3}}));
    EXPECT_EQ(otype(*env, call("delete_file", {{"path", "/etc/config.ini"}})), "permission_denied");
    EXPECT_EQ(otype(*env, call("read_file", {{"path", "/nope.txt"}})), "not_found");
    EXPECT_EQ(otype(*env, call("read_file", {{"path", "/home/../etc"}})), "bad_path");
    EXPECT_EQ(otype(*env, call("create_file", {{"path", "/tmp/x.txt"}, {"content", ""}})), "already_exists");
    EXPECT_EQ(one(*env, call("list_files", {{"prefix", "/home"}})),
              (Value {{"files", {"/home/user/notes.txt", "/home/user/todo.txt"}}}));
}

TEST(FileIo, MoveRespectsDestination)
{
    auto env = make_fileio();
    EXPECT_EQ(otype(*env, call("move_file", {{"src", "/home/user/todo.txt"}, {"dst", "/home/user/notes.txt"}})),
              "already_exists");
    EXPECT_EQ(otype(*env, call("move_file", {{"src", "/home/user/todo.txt"}, {"dst", "/home/user/done.txt"}})),
              "success");
    EXPECT_EQ(one(*env, call("read_file", {{"path", "/home/user/done.txt"}})), (Value {{"content", "buy milk"}}));
}

TEST(Environment, RestoreRejectsForeignState)
{
    auto vault = make_vault();
    auto files = make_fileio();
    EXPECT_THROW(vault->restore(files->snapshot()), EnvMismatchError);
}

TEST(Environment, FingerprintIgnoresKeyOrder)
{
    auto a = make_vault(Value {{"accounts", {{"A", 1}, {"B", 2}}}});
    auto b = make_vault(Value {{"accounts", {{"B", 2}, {"A", 1}}}});
    EXPECT_EQ(a->fingerprint(), b->fingerprint());
    auto c = make_vault(Value {{"accounts", {{"A", 1}, {"B", 3}}}});
    EXPECT_NE(a->fingerprint(), c->fingerprint());
}

class EnvironmentProperty : public ::testing::TestWithParam<std::string>
{
  protected:
    auto randomCall(Gen& g) -> ToolCall { return GetParam() == "vault" ? g.vault_call() : g.fileio_call(); }
};

// Whatever a batch does to a clone, the original is untouched.
TEST_P(EnvironmentProperty, CloneIsIndependent)
{
    auto g = Gen(7);
    for (int i = 0; i < 300; ++i)
    {
        auto env = make_environment(GetParam());
        auto const before = env->snapshot();
        auto copy = env->clone();
        auto batch = std::vector<ToolCall> {};
        for (std::uint64_t k = 0; k < 1 + g.uniform(5); ++k)
            batch.push_back(randomCall(g));
        (void)copy->execute(batch);
        ASSERT_EQ(env->snapshot(), before);
    }
}

// Failed calls leave the state where it was; the returned type agrees with classify().
TEST_P(EnvironmentProperty, FailuresAreAtomicAndClassified)
{
    auto g = Gen(8);
    auto env = make_environment(GetParam());
    for (int i = 0; i < 2000; ++i)
    {
        auto const c = randomCall(g);
        auto const before = env->snapshot();
        auto const calls = std::vector<ToolCall> {c};
        auto const out = env->execute(calls);
        ASSERT_EQ(out.payloads.size(), 1u);
        ASSERT_EQ(out.types.size(), 1u);
        if (is_error_payload(out.payloads[0]))
        {
            ASSERT_EQ(env->snapshot(), before) << format_call(c);
            ASSERT_FALSE(out.types[0].is_success());
            ASSERT_EQ(out.status, Status::failure);
        }
        ASSERT_EQ(env->classify(c, out.payloads[0]), out.types[0]) << format_call(c);
        auto const labels = env->failure_labels();
        ASSERT_TRUE(out.types[0].is_success()
                    || std::find(labels.begin(), labels.end(), out.types[0].otype) != labels.end())
            << out.types[0].str();
    }
}

// Restoring a snapshot rewinds both the state and its fingerprint.
TEST_P(EnvironmentProperty, SnapshotRestoreRoundTrip)
{
    auto g = Gen(9);
    auto env = make_environment(GetParam());
    for (int i = 0; i < 300; ++i)
    {
        auto const snap = env->snapshot();
        auto const fp = env->fingerprint();
        for (int k = 0; k < 3; ++k)
        {
            auto const calls = std::vector<ToolCall> {randomCall(g)};
            (void)env->execute(calls);
        }
        auto const later = env->snapshot();
        env->restore(snap);
        ASSERT_EQ(env->snapshot(), snap);
        ASSERT_EQ(env->fingerprint(), fp);
        env->restore(later);
        auto state = Value(later);
        ASSERT_EQ(state.get<EnvironmentState>(), later);
    }
}

INSTANTIATE_TEST_SUITE_P(Both, EnvironmentProperty, ::testing::Values("vault", "fileio"));
