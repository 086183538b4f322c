#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "adsh/bench.hpp"

using namespace adsh;

TEST(LoglogSlope, RecoversPowerLaw) {
    const std::vector<double> x{1, 2, 4, 8};
    std::vector<double> linear, quadratic;
    for (double v : x) {
        linear.push_back(3.0 * v);
        quadratic.push_back(0.5 * v * v);
    }
    EXPECT_NEAR(loglog_slope(x, linear), 1.0, 1e-12);
    EXPECT_NEAR(loglog_slope(x, quadratic), 2.0, 1e-12);
    EXPECT_THROW(loglog_slope(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
    EXPECT_THROW(loglog_slope(std::vector<double>{1, 2}, std::vector<double>{1, 0}), ValidationError);
}

TEST(ComplexityProbe, SmallRun) {
    ProbeConfig probe;
    probe.n_values = {200, 400, 800};
    probe.query_count = 50;
    probe.code_len = 8;
    probe.feature_dim = 8;
    probe.hidden_dims = {8};
    probe.batch_size = 25;
    probe.repeats = 1;
    const auto result = complexity_probe(probe);
    ASSERT_EQ(result.rows.size(), 3u);
    for (const auto& r : result.rows) {
        EXPECT_GT(r.adsh_seconds, 0.0);
        EXPECT_GT(r.symmetric_seconds, 0.0);
    }
    EXPECT_TRUE(std::isfinite(result.adsh_slope));
    std::ostringstream os;
    write_probe_csv(os, result);
    EXPECT_EQ(os.str().rfind("n,adsh_seconds,symmetric_seconds\n", 0), 0u);

    probe.n_values = {200, 405, 800};
    EXPECT_THROW(complexity_probe(probe), ValidationError);
    probe.n_values = {200, 400};
    EXPECT_THROW(complexity_probe(probe), ValidationError);
}

TEST(ThetaEpoch, OneTimingPerQueryCount) {
    ProbeConfig probe;
    probe.code_len = 8;
    probe.feature_dim = 8;
    probe.hidden_dims = {8};
    probe.repeats = 1;
    const std::vector<std::size_t> ms{50, 100};
    const auto t = theta_epoch_seconds(probe, 400, ms);
    ASSERT_EQ(t.size(), 2u);
    for (double s : t) EXPECT_GT(s, 0.0);
}
