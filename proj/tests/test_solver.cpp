#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "adsh/adsh.hpp"
#include "adsh/oracle.hpp"
#include "test_support.hpp"

using namespace adsh;
using adsh::testing::column_of;
using adsh::testing::random_tiny;
using adsh::testing::set_column;
using adsh::testing::to_problem;

namespace {

LabeledFeatures small_clusters(std::uint64_t seed, std::size_t per_cluster = 30) {
    return gen_synthetic_clusters(4, per_cluster, 8, 0.1, seed);
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.code_len = 8;
    cfg.query_count = 40;
    cfg.outer_iters = 3;
    cfg.inner_iters = 2;
    cfg.batch_size = 16;
    cfg.hidden_dims = {16};
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST(Objective, ExactFitIsZero) {
    const auto codes = CodeMatrix::from_signs(1, 3, std::vector<Sign>{1, 1, 1});
    SimilarityBlock sim{1, 1, {1}, 1.0, {0}};
    EXPECT_DOUBLE_EQ(objective(Matrix::Ones(1, 3), codes, sim, 123.0, true), 0.0);
}

TEST(Objective, HandComputedValue) {
    const auto codes = CodeMatrix::from_signs(1, 2, std::vector<Sign>{1, 1});
    SimilarityBlock sim{1, 1, {1}, 1.0, {0}};
    Matrix u(1, 2);
    u << 0.5, 0.5;
    EXPECT_DOUBLE_EQ(objective(u, codes, sim, 1.0, false), 1.5);
    // Separate-query block: no regularizer.
    sim.query_indices.clear();
    EXPECT_DOUBLE_EQ(objective(u, codes, sim, 1.0, false), 1.0);
}

TEST(Objective, LinearInGamma) {
    std::mt19937_64 rng(2);
    auto inst = random_tiny(rng, 9, 4, 5, 3.0, true, true);
    const auto p = to_problem(inst, true);
    double reg = 0.0;
    for (std::size_t i = 0; i < inst.m; ++i) {
        for (std::size_t b = 0; b < inst.c; ++b) reg += std::pow(inst.v[inst.omega[i]][b] - inst.u[i][b], 2);
    }
    const double j1 = objective(p.u_tilde, p.codes, p.sim, 3.0, true);
    const double j2 = objective(p.u_tilde, p.codes, p.sim, 6.0, true);
    EXPECT_NEAR(j2 - j1, 3.0 * reg, 1e-9 * j2);
}

TEST(Objective, MatchesNaiveTripleLoop) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const bool weighted = trial % 2 == 0;
        auto inst = random_tiny(rng, 12, 6, 6, trial % 3 == 0 ? 200.0 : 0.7, weighted, trial % 4 != 0);
        const auto p = to_problem(inst, weighted);
        const double ours = objective(p.u_tilde, p.codes, p.sim, p.gamma, weighted);
        const double naive = oracle::naive_objective(inst);
        ASSERT_LE(std::abs(ours - naive), 1e-9 * std::max(1.0, std::abs(naive)));
    }
}

TEST(Objective, ShapeChecks) {
    SimilarityBlock sim{2, 3, std::vector<Sign>(6, 1), 1.0, {}};
    EXPECT_THROW(objective(Matrix::Zero(1, 4), CodeMatrix(3, 4), sim, 0.0, false), ValidationError);
    EXPECT_THROW(objective(Matrix::Zero(2, 4), CodeMatrix(2, 4), sim, 0.0, false), ValidationError);
    EXPECT_THROW(objective(Matrix::Zero(2, 5), CodeMatrix(3, 4), sim, 0.0, false), ValidationError);
}

TEST(VStepColumn, AlignsWithSimilarQuery) {
    // Single query u = all +1 similar to every database point; column k
    // goes to +1 regardless of its start.
    const std::size_t n = 5, c = 3;
    CodeMatrix codes(n, c);  // all -1
    SimilarityBlock sim{1, n, std::vector<Sign>(n, 1), 1.0, {}};
    const Matrix u = Matrix::Constant(1, c, 0.9);
    for (std::size_t k = 0; k < c; ++k) {
        auto a = codes;
        v_step_column(u, a, sim, k, 0.0, false);
        for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(a.get(j, k), 1);
        auto b = codes;
        v_step_column_matrix_form(u, b, sim, k, 0.0);
        EXPECT_EQ(a, b);
    }
}

TEST(VStepColumn, ZeroArgumentYieldsMinusOne) {
    // U~ column k is zero, so the argument is zero for every row.
    CodeMatrix codes = CodeMatrix::from_signs(2, 2, std::vector<Sign>{1, 1, 1, 1});
    SimilarityBlock sim{1, 2, {1, -1}, 1.0, {}};
    Matrix u(1, 2);
    u << 0.5, 0.0;
    v_step_column(u, codes, sim, 1, 0.0, false);
    EXPECT_EQ(codes.get(0, 1), -1);
    EXPECT_EQ(codes.get(1, 1), -1);
}

TEST(VStepColumn, AttainsExhaustiveMinimum) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::size_t> nd(1, 10), md(1, 4), cd(1, 4);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = nd(rng), c = cd(rng);
        const std::size_t m = std::min(md(rng), n);
        const bool weighted = trial % 2 == 0;
        const double gamma = std::array{0.0, 1.0, 200.0}[trial % 3];
        auto inst = random_tiny(rng, n, m, c, gamma, weighted, trial % 5 != 0);
        const std::size_t k = trial % c;
        const auto best = oracle::exhaustive_column_min(inst, k);
        auto p = to_problem(inst, weighted);
        v_step_column(p.u_tilde, p.codes, p.sim, k, p.gamma, weighted);
        auto after = inst;
        set_column(after, k, column_of(p.codes, k));
        ASSERT_NEAR(oracle::naive_objective(after), best.objective, 1e-9 * std::max(1.0, best.objective))
            << "trial " << trial;
    }
}

TEST(VStepColumn, MatrixFormBitIdenticalWithUnitWeights) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 40; ++trial) {
        auto inst = random_tiny(rng, 30, 6, 6, trial % 2 ? 200.0 : 0.5, false, trial % 3 != 0);
        const auto p = to_problem(inst, false);
        for (std::size_t k = 0; k < 6; ++k) {
            auto a = p.codes;
            auto b = p.codes;
            v_step_column(p.u_tilde, a, p.sim, k, p.gamma, false);
            v_step_column_matrix_form(p.u_tilde, b, p.sim, k, p.gamma);
            ASSERT_EQ(a, b) << "trial " << trial << " bit " << k;
        }
    }
}

TEST(VStepColumn, MatrixFormRejectsWeights) {
    std::mt19937_64 rng(1);
    auto inst = random_tiny(rng, 5, 2, 2, 0.0, true, false);
    const auto p = to_problem(inst, true);
    EXPECT_THROW(ColumnUpdater(p.u_tilde, p.codes, p.sim, 0.0, true, ColumnUpdater::Form::matrix), ValidationError);
    auto codes = p.codes;
    EXPECT_THROW(v_step_column(p.u_tilde, codes, p.sim, 2, 0.0, true), ValidationError);
}

TEST(VStep, MonotoneAcrossColumns) {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 30; ++trial) {
        const bool weighted = trial % 2 == 0;
        auto inst = random_tiny(rng, 40, 6, 6, 50.0, weighted, true);
        auto p = to_problem(inst, weighted);
        int calls = 0;
        v_step(p.u_tilde, p.codes, p.sim, p.gamma, weighted, [&](const ColumnEvent& e) {
            ++calls;
            EXPECT_LE(e.objective_after, e.objective_before + 1e-9);
        });
        EXPECT_EQ(calls, 6);
    }
}

TEST(VStep, SweepsMatchSequentialColumnUpdates) {
    std::mt19937_64 rng(53);
    for (bool weighted : {false, true}) {
        auto inst = random_tiny(rng, 25, 5, 5, 2.0, weighted, true);
        const auto p = to_problem(inst, weighted);
        auto sweep = p.codes;
        v_step(p.u_tilde, sweep, p.sim, p.gamma, weighted);
        auto manual = p.codes;
        for (std::size_t k = 0; k < 5; ++k) v_step_column(p.u_tilde, manual, p.sim, k, p.gamma, weighted);
        EXPECT_EQ(sweep, manual);
    }
}

TEST(VStep, SingleBitEqualsOneColumnUpdate) {
    std::mt19937_64 rng(59);
    auto inst = random_tiny(rng, 9, 3, 1, 1.0, false, true);
    const auto p = to_problem(inst, false);
    auto a = p.codes, b = p.codes;
    v_step(p.u_tilde, a, p.sim, p.gamma, false);
    v_step_column(p.u_tilde, b, p.sim, 0, p.gamma, false);
    EXPECT_EQ(a, b);
}

TEST(VStep, ReachesFixedPointWithShrinkingChanges) {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 20; ++trial) {
        const bool weighted = trial % 2 == 1;
        auto inst = random_tiny(rng, 8, 4, 4, 1.0, weighted, true);
        auto p = to_problem(inst, weighted);
        double previous_j = objective(p.u_tilde, p.codes, p.sim, p.gamma, weighted);
        double previous_drop = INFINITY;
        bool fixed = false;
        for (std::size_t sweep = 0; sweep < 4 * 8; ++sweep) {
            const auto before = p.codes;
            v_step(p.u_tilde, p.codes, p.sim, p.gamma, weighted);
            const double j = objective(p.u_tilde, p.codes, p.sim, p.gamma, weighted);
            const double drop = previous_j - j;
            ASSERT_GE(drop, -1e-9);
            if (sweep == 1) {
                ASSERT_LE(drop, previous_drop + 1e-9);
            }
            previous_drop = drop;
            previous_j = j;
            if (p.codes == before) {
                fixed = true;
                break;
            }
        }
        EXPECT_TRUE(fixed) << "trial " << trial;
    }
}

TEST(Train, SeparableClustersReduceObjective) {
    const auto data = gen_synthetic_clusters(10, 200, 32, 0.1, 1);
    TrainConfig cfg;
    cfg.code_len = 16;
    cfg.query_count = 200;
    cfg.outer_iters = 5;
    cfg.inner_iters = 3;
    cfg.seed = 3;
    const auto result = train({data.features, data.labels}, cfg);
    ASSERT_FALSE(result.aborted) << result.diagnostic;
    ASSERT_EQ(result.history.size(), 5u * 3u * 2u);
    // The objective floor here is ~0.4 J0: ten classes cannot be mutually
    // antipodal in 16 bits, so dissimilar pairs keep a residual near c^2.
    EXPECT_LT(result.history.back().objective, 0.65 * result.history.front().objective);
    for (const auto& h : result.history) EXPECT_TRUE(std::isfinite(h.objective));
}

TEST(Train, DegenerateScheduleIsOneVStepAgainstInitialModel) {
    const auto data = small_clusters(2);
    TrainConfig cfg = small_config();
    cfg.outer_iters = 1;
    cfg.inner_iters = 1;
    cfg.learning_rate = 0.0;
    const auto result = train({data.features, data.labels}, cfg);

    // Replay the initialization with the same seed stream.
    std::mt19937_64 rng(cfg.seed);
    const auto init_model = EncoderModel::glorot(detail::model_dims(8, cfg), rng());
    auto codes = detail::random_codes(data.labels.rows(), cfg.code_len, rng);
    const auto omega = sample_query_indices(data.labels.rows(), cfg.query_count, rng());
    EXPECT_EQ(result.model, init_model);
    EXPECT_EQ(result.last_omega, omega);
    const auto sim = build_sampled_similarity(data.labels, omega);
    const Matrix u = relaxed_codes(init_model, select_rows(data.features, omega));
    v_step(u, codes, sim, cfg.gamma, cfg.imbalance_weighting);
    EXPECT_EQ(result.codes, codes);
}

TEST(Train, DeterministicForSeed) {
    const auto data = small_clusters(3);
    const auto cfg = small_config();
    const auto a = train({data.features, data.labels}, cfg);
    const auto b = train({data.features, data.labels}, cfg);
    EXPECT_EQ(a.codes, b.codes);
    EXPECT_EQ(a.model, b.model);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].objective, b.history[i].objective);
    auto other = cfg;
    other.seed = 6;
    EXPECT_NE(train({data.features, data.labels}, other).codes, a.codes);
}

TEST(Train, ColumnHookSeesMonotoneObjective) {
    const auto data = small_clusters(4);
    const auto cfg = small_config();
    TrainHooks hooks;
    std::size_t columns = 0;
    hooks.on_column = [&](std::size_t, std::size_t, const ColumnEvent& e) {
        ++columns;
        EXPECT_LE(e.objective_after, e.objective_before + 1e-9);
    };
    std::size_t outers = 0;
    hooks.on_outer = [&](const OuterEvent& e) {
        ++outers;
        EXPECT_EQ(e.codes.rows(), data.labels.rows());
    };
    train({data.features, data.labels}, cfg, hooks);
    EXPECT_EQ(columns, cfg.outer_iters * cfg.inner_iters * cfg.code_len);
    EXPECT_EQ(outers, cfg.outer_iters);
}

TEST(Train, SeparateQueryModeUsesFixedQueries) {
    const auto data = small_clusters(5);
    const auto parts = split(data.labels.rows(), 30, 0, 1);
    const auto db = select(data, parts.database);
    const auto q = select(data, parts.query);
    auto cfg = small_config();
    cfg.mode = TrainMode::asymmetric_separate_queries;
    cfg.query_count = 30;
    const auto result = train({db.features, db.labels, &q.features, &q.labels}, cfg);
    ASSERT_FALSE(result.aborted);
    EXPECT_TRUE(result.last_omega.empty());
    EXPECT_EQ(result.codes.rows(), db.labels.rows());
    // The objective reported is the unregularized one over the fixed block.
    const auto sim = build_similarity(q.labels, db.labels);
    const Matrix u = relaxed_codes(result.model, q.features);
    EXPECT_NEAR(result.history.back().objective, objective(u, result.codes, sim, 0.0, cfg.imbalance_weighting),
                1e-6 * result.history.back().objective);
    cfg.mode = TrainMode::asymmetric_separate_queries;
    EXPECT_THROW(train({db.features, db.labels}, cfg), ValidationError);
}

TEST(Train, RejectsInvalidConfigs) {
    const auto data = small_clusters(6);
    auto cfg = small_config();
    cfg.query_count = 1000;
    EXPECT_THROW(train({data.features, data.labels}, cfg), ValidationError);
    cfg = small_config();
    cfg.batch_size = cfg.query_count + 1;
    EXPECT_THROW(train({data.features, data.labels}, cfg), ValidationError);
    cfg = small_config();
    cfg.gamma = -1.0;
    EXPECT_THROW(train({data.features, data.labels}, cfg), ValidationError);
    cfg = small_config();
    cfg.code_len = 0;
    EXPECT_THROW(cfg.validate(), ValidationError);
}

TEST(Train, NumericFailureKeepsLastGoodState) {
    const auto data = small_clusters(7);
    auto cfg = small_config();
    cfg.learning_rate = std::numeric_limits<double>::max();
    cfg.normalize_gradient = false;
    const auto result = train({data.features, data.labels}, cfg);
    EXPECT_TRUE(result.aborted);
    EXPECT_FALSE(result.diagnostic.empty());
    EXPECT_TRUE(result.model.finite());
    EXPECT_EQ(result.codes.rows(), data.labels.rows());
}

TEST(SymmetricBaseline, ProducesCodesForAllPoints) {
    const auto data = gen_synthetic_clusters(4, 50, 8, 0.1, 9);
    auto cfg = small_config();
    cfg.mode = TrainMode::symmetric_baseline;
    const auto result = train_symmetric_baseline(data.features, data.labels, cfg);
    ASSERT_FALSE(result.aborted);
    EXPECT_EQ(result.codes.rows(), 200u);
    EXPECT_EQ(result.codes.code_len(), cfg.code_len);
    EXPECT_TRUE(result.codes.pad_bits_clear());
    EXPECT_EQ(result.codes, encode_queries(result.model, data.features));
    EXPECT_EQ(result.history.size(), cfg.outer_iters);
}

TEST(SymmetricBaseline, DeterministicForSeed) {
    const auto data = gen_synthetic_clusters(4, 50, 8, 0.1, 10);
    auto cfg = small_config();
    cfg.symmetric_all_pairs = true;
    const auto a = train_symmetric_baseline(data.features, data.labels, cfg);
    const auto b = train_symmetric_baseline(data.features, data.labels, cfg);
    ASSERT_EQ(a.history.size(), b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) EXPECT_EQ(a.history[i].objective, b.history[i].objective);
    EXPECT_EQ(a.codes, b.codes);
}

TEST(History, CsvLayout) {
    std::ostringstream os;
    const std::vector<HistoryEntry> h{{1, 2, "v", 3.5, 0.25}};
    write_history_csv(os, h);
    EXPECT_EQ(os.str(), "outer,inner,phase,J,seconds\n1,2,v,3.5,0.25\n");
}
