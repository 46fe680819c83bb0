// SPDX-License-Identifier: Apache-2.0
#include "support.hpp"

#include <atris/metrics.hpp>
#include <atris/orchestrator.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace atris;
using atris::test::call;
using atris::test::Gen;

namespace
{

/// Reference cosine over exact token bags, no hashing.
auto bagCosine(std::string_view a, std::string_view b) -> double
{
    auto bag = [](std::string_view text) {
        auto m = std::map<std::string, double> {};
        for (const auto& t: HashedBagEmbedder::tokens(text))
            m[t] += 1.0;
        return m;
    };
    auto const x = bag(a);
    auto const y = bag(b);
    auto dot = 0.0;
    auto nx = 0.0;
    auto ny = 0.0;
    for (const auto& [t, v]: x)
    {
        nx += v * v;
        if (auto it = y.find(t); it != y.end())
            dot += v * it->second;
    }
    for (const auto& [_, v]: y)
        ny += v * v;
    return dot / std::sqrt(nx * ny);
}

auto repeat(const std::vector<std::pair<std::string, int>>& counts) -> std::string
{
    auto out = std::string {};
    for (const auto& [word, n]: counts)
        for (int i = 0; i < n; ++i)
            out += word + " ";
    return out;
}

auto turnWith(std::vector<ToolCall> calls, bool discarded = false) -> TurnResult
{
    auto r = TurnResult {};
    auto env = make_vault();
    auto outcome = env->execute(calls);
    r.final_trajectory.steps.push_back(Step {std::move(calls), std::move(outcome)});
    r.discarded = discarded;
    return r;
}

} // namespace

TEST(Embedder, TokensAndBuckets)
{
    EXPECT_EQ(HashedBagEmbedder::tokens("Transfer OK: 70, {\"x\"}"),
              (std::vector<std::string> {"transfer", "ok", "70", "x"}));
    auto const e = HashedBagEmbedder {};
    auto buckets = std::set<std::size_t> {};
    for (auto w: {"alpha", "bravo", "charlie", "delta", "echo", "transfer", "ok", "70", "71"})
        buckets.insert(e.bucket(w));
    EXPECT_EQ(buckets.size(), 9u);
}

TEST(Similarity, KnownVectors)
{
    auto const e = HashedBagEmbedder {};
    EXPECT_NEAR(similarity(repeat({{"alpha", 24}, {"bravo", 7}}), "alpha", e), 0.96, 1e-12);
    EXPECT_NEAR(similarity(repeat({{"alpha", 19}, {"bravo", 5}, {"charlie", 3}, {"delta", 2}, {"echo", 1}}), "alpha", e),
                0.95, 1e-12);
    EXPECT_NEAR(similarity(repeat({{"alpha", 1}, {"bravo", 4}, {"charlie", 2}, {"delta", 2}}), "alpha", e), 0.2, 1e-12);
    EXPECT_NEAR(similarity("transfer ok 70", "transfer ok 71", e), bagCosine("transfer ok 70", "transfer ok 71"), 1e-9);
    EXPECT_EQ(similarity("", "alpha", e), 0.0);
}

TEST(Similarity, CosineEdgeCases)
{
    auto const a = std::vector<double> {1, 0};
    auto const z = std::vector<double> {0, 0};
    auto const neg = std::vector<double> {-2, 0};
    EXPECT_EQ(cosine(a, z), 0.0);
    EXPECT_EQ(cosine(a, neg), -1.0);
}

// Symmetric, 1 on identical non-empty text, and matches the exact-bag reference.
TEST(SimilarityProperty, SymmetricAndBounded)
{
    auto g = Gen(90);
    auto const e = HashedBagEmbedder {};
    static const std::vector<std::string> words {"ok", "error", "balance", "70", "insufficient", "funds", "a", "b"};
    for (int i = 0; i < 2000; ++i)
    {
        auto a = std::string {};
        auto b = std::string {};
        for (std::uint64_t k = 0; k < 1 + g.uniform(10); ++k)
            a += words[g.uniform(words.size())] + " ";
        for (std::uint64_t k = 0; k < 1 + g.uniform(10); ++k)
            b += words[g.uniform(words.size())] + ",";
        auto const s = similarity(a, b, e);
        ASSERT_DOUBLE_EQ(s, similarity(b, a, e));
        ASSERT_GE(s, 0.0);
        ASSERT_LE(s, 1.0);
        ASSERT_NEAR(similarity(a, a, e), 1.0, 1e-12);
        ASSERT_NEAR(s, bagCosine(a, b), 1e-9);
    }
}

TEST(Fidelity, StrictThreshold)
{
    auto const pairs = std::vector<TextPair> {
        {repeat({{"alpha", 24}, {"bravo", 7}}), "alpha"},
        {repeat({{"alpha", 19}, {"bravo", 5}, {"charlie", 3}, {"delta", 2}, {"echo", 1}}), "alpha"},
        {"alpha", "alpha"},
        {repeat({{"alpha", 1}, {"bravo", 4}, {"charlie", 2}, {"delta", 2}}), "alpha"},
    };
    auto const r = fidelity_report(pairs, HashedBagEmbedder {});
    EXPECT_EQ(r.pairs, 4u);
    EXPECT_DOUBLE_EQ(r.hf_ratio, 0.5);
    EXPECT_NEAR(r.mean_similarity, (0.96 + 0.95 + 1.0 + 0.2) / 4, 1e-12);
    EXPECT_THROW((void)fidelity_report({}, HashedBagEmbedder {}), InvariantError);
}

// Raising the threshold never raises the high-fidelity ratio.
TEST(FidelityProperty, MonotoneInThreshold)
{
    auto g = Gen(91);
    auto pairs = std::vector<TextPair> {};
    for (int i = 0; i < 200; ++i)
        pairs.emplace_back(g.text() + " ok", g.text() + " ok");
    auto prev = 2.0;
    for (auto t = 0.0; t <= 1.0; t += 0.05)
    {
        auto const r = fidelity_report(pairs, HashedBagEmbedder {}, t).hf_ratio;
        ASSERT_LE(r, prev);
        prev = r;
    }
}

TEST(StepPairs, SimulatedAgainstPerfectReplay)
{
    auto env = make_vault();
    auto const t = call("transfer", {{"src", "A"}, {"dst", "B"}, {"amount", 30}});
    auto const b = call("balance", {{"account", "A"}});
    auto const steps = std::vector<Step> {
        Step {{t}, make_outcome({Value {{"status", "ok"}, {"src_balance", 70}, {"dst_balance", 30}}}, {})},
        Step {{b}, make_outcome({Value {{"balance", 71}}}, {})},
    };
    auto const pairs = step_pairs(steps, *env);
    ASSERT_EQ(pairs.size(), 2u);
    EXPECT_EQ(pairs[0].first, pairs[0].second);
    EXPECT_EQ(pairs[1].first, R"([{"balance":71}])");
    EXPECT_EQ(pairs[1].second, R"([{"balance":70}])");
    auto const sim = trajectory_similarity(pairs, HashedBagEmbedder {});
    EXPECT_NEAR(sim, (1.0 + bagCosine(pairs[1].first, pairs[1].second)) / 2, 1e-12);
    EXPECT_EQ(trajectory_similarity({}, HashedBagEmbedder {}), 1.0);
    EXPECT_EQ(env->snapshot().version, 0);
}

TEST(ScoreTask, StateAndMilestones)
{
    auto const pay = call("transfer", {{"src", "A"}, {"dst", "B"}, {"amount", 30}});
    auto const turns = std::vector<TurnResult> {turnWith({pay})};
    auto const expectation = Expectation {"fp", {canonicalize_call(pay)}};

    EXPECT_TRUE(score_task("t", turns, "fp", expectation).success);
    EXPECT_EQ(score_task("t", turns, "fp", expectation).reason, ScoreReason::state_match);
    EXPECT_EQ(score_task("t", turns, "other", expectation).reason, ScoreReason::mismatch);

    auto const milestones = Expectation {std::nullopt, {canonicalize_call(pay), canonicalize_call(pay)}};
    EXPECT_FALSE(score_task("t", turns, "fp", milestones).success);
    auto const once = Expectation {std::nullopt, {canonicalize_call(pay)}};
    EXPECT_EQ(score_task("t", turns, "x", once).reason, ScoreReason::milestone_match);

    auto const discarded = std::vector<TurnResult> {turnWith({pay}, true)};
    EXPECT_EQ(score_task("t", discarded, "fp", expectation).reason, ScoreReason::discarded);
    EXPECT_THROW((void)score_task("t", turns, "fp", Expectation {}), ConfigError);
}

TEST(Report, RowsPerMethodAndN)
{
    auto l = UsageLedger {};
    l.add(AgentRole::action, RoleUsage {2, 100, 10});
    l.add(AgentRole::self_eval, RoleUsage {1, 50, 5});
    auto const records = std::vector<RunRecord> {
        {"atris-seq", 3, "a", true, l},
        {"atris-seq", 3, "b", false, l},
        {"direct", 0, "a", true, l},
    };
    auto const rows = ledger_report(records);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].method, "atris-seq");
    EXPECT_EQ(rows[0].runs, 2u);
    EXPECT_DOUBLE_EQ(rows[0].accuracy(), 50.0);
    EXPECT_EQ(rows[0].ledger.total(), (RoleUsage {6, 300, 30}));

    auto const text = render_report(rows);
    EXPECT_NE(text.find("Method"), std::string::npos);
    EXPECT_NE(text.find("50.0"), std::string::npos);
    EXPECT_NE(text.find("100.0"), std::string::npos);
    EXPECT_EQ(Value(rows[1])["method"], "direct");
}
