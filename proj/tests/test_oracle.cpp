#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "adsh/oracle.hpp"
#include "test_support.hpp"

using namespace adsh;
using adsh::testing::random_tiny;

TEST(FiniteDifference, Quadratic) {
    const auto g = oracle::finite_difference_grad({3.0}, [](std::span<const double> t) { return t[0] * t[0]; });
    ASSERT_EQ(g.size(), 1u);
    EXPECT_NEAR(g[0], 6.0, 1e-8);
}

TEST(FiniteDifference, ConstantHasZeroGradient) {
    const auto g = oracle::finite_difference_grad({1.0, -2.0, 0.5}, [](std::span<const double>) { return 4.0; });
    for (double x : g) EXPECT_EQ(x, 0.0);
}

TEST(FiniteDifference, RejectsBadStepAndNonFiniteLoss) {
    EXPECT_THROW(oracle::finite_difference_grad({1.0}, [](std::span<const double>) { return 0.0; }, 0.0),
                 ValidationError);
    EXPECT_THROW(oracle::finite_difference_grad({1.0}, [](std::span<const double>) { return NAN; }), NumericError);
}

TEST(NaiveObjective, HandComputed) {
    oracle::TinyInstance inst;
    inst.n = 1;
    inst.m = 1;
    inst.c = 2;
    inst.u = {{0.5, 0.5}};
    inst.s = {{1}};
    inst.w = {{1.0}};
    inst.v = {{1, 1}};
    EXPECT_DOUBLE_EQ(oracle::naive_objective(inst), 1.0);
    inst.omega = {0};
    inst.gamma = 1.0;
    EXPECT_DOUBLE_EQ(oracle::naive_objective(inst), 1.5);
}

TEST(ExhaustiveColumnMin, SingleDatabasePoint) {
    // One point, one query similar to it with u = 0.8: v = +1 is the minimum.
    oracle::TinyInstance inst;
    inst.n = 1;
    inst.m = 1;
    inst.c = 1;
    inst.u = {{0.8}};
    inst.s = {{1}};
    inst.w = {{1.0}};
    inst.v = {{-1}};
    const auto best = oracle::exhaustive_column_min(inst, 0);
    EXPECT_EQ(best.column, std::vector<int>{1});
    EXPECT_NEAR(best.objective, 0.04, 1e-12);
}

TEST(ExhaustiveColumnMin, TieKeepsFirstCandidate) {
    std::mt19937_64 rng(1);
    auto inst = random_tiny(rng, 4, 2, 2, 0.0, false, false);
    for (auto& row : inst.u) row[1] = 0.0;
    const auto best = oracle::exhaustive_column_min(inst, 1);
    EXPECT_EQ(best.column, std::vector<int>(4, 1));
}

TEST(ExhaustiveColumnMin, LargeGammaFollowsQueryCodes) {
    // With a huge regularizer the sampled points copy sign(u) of their query.
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        auto inst = random_tiny(rng, 8, 4, 3, 1e6, false, true);
        const auto best = oracle::exhaustive_column_min(inst, 0);
        for (std::size_t i = 0; i < inst.m; ++i) {
            EXPECT_EQ(best.column[inst.omega[i]], inst.u[i][0] >= 0.0 ? 1 : -1);
        }
    }
}

TEST(ExhaustiveColumnMin, NeverWorseThanStart) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = random_tiny(rng, 10, 3, 4, 1.0, trial % 2 == 0, true);
        const double start = oracle::naive_objective(inst);
        EXPECT_LE(oracle::exhaustive_column_min(inst, trial % 4).objective, start + 1e-12);
    }
}

TEST(TinyInstance, SizeCaps) {
    std::mt19937_64 rng(4);
    auto inst = random_tiny(rng, 12, 6, 6, 0.0, false, false);
    EXPECT_NO_THROW(inst.validate());
    auto too_big = random_tiny(rng, 13, 2, 2, 0.0, false, false);
    EXPECT_THROW(oracle::exhaustive_column_min(too_big, 0), ValidationError);
    auto too_many_bits = random_tiny(rng, 4, 2, 7, 0.0, false, false);
    EXPECT_THROW(too_many_bits.validate(), ValidationError);
    EXPECT_THROW(oracle::exhaustive_column_min(inst, 6), ValidationError);
}

TEST(NaiveEncoderLoss, MatchesObjectiveOfForwardPass) {
    std::mt19937_64 rng(5);
    auto inst = random_tiny(rng, 6, 3, 2, 2.0, true, true);
    const auto model = EncoderModel::glorot({4, 5, 2}, 9);
    std::vector<std::vector<double>> x(3, std::vector<double>(4));
    Matrix xm(3, 4);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t f = 0; f < 4; ++f) xm(i, f) = x[i][f] = g(rng);
    }
    const auto p = adsh::testing::to_problem(inst, true);
    const Matrix u = relaxed_codes(model, xm);
    EXPECT_NEAR(oracle::naive_encoder_loss(model, x, inst), objective(u, p.codes, p.sim, p.gamma, true), 1e-9);
}
