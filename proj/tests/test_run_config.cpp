#include <sstream>

#include <gtest/gtest.h>

#include "adsh/run_config.hpp"

using namespace adsh;

TEST(RunConfig, DefaultsMapToTrainConfig) {
    const RunConfig rc;
    const auto cfg = rc.train_config();
    EXPECT_EQ(cfg.code_len, 12u);
    EXPECT_DOUBLE_EQ(cfg.gamma, 200.0);
    EXPECT_EQ(cfg.query_count, 1000u);
    EXPECT_EQ(cfg.outer_iters, 50u);
    EXPECT_EQ(cfg.inner_iters, 3u);
    EXPECT_EQ(cfg.mode, TrainMode::asymmetric_sampled);
    EXPECT_EQ(cfg.hidden_dims, std::vector<std::size_t>{512});
    EXPECT_FALSE(rc.map_cutoff().has_value());
}

TEST(RunConfig, FileThenOverrides) {
    RunConfig rc;
    std::istringstream file("# run\nbits = 24\ngamma=10 # inline comment\n\nmode = symmetric\nhidden = none\n");
    rc.load(file);
    rc.set("gamma", "50");
    const auto cfg = rc.train_config();
    EXPECT_EQ(cfg.code_len, 24u);
    EXPECT_DOUBLE_EQ(cfg.gamma, 50.0);
    EXPECT_EQ(cfg.mode, TrainMode::symmetric_baseline);
    EXPECT_TRUE(cfg.hidden_dims.empty());
    std::ostringstream os;
    rc.write(os);
    EXPECT_NE(os.str().find("bits = 24\n"), std::string::npos);
}

TEST(RunConfig, RejectsUnknownKeysAndBadValues) {
    RunConfig rc;
    EXPECT_THROW(rc.set("bitz", "3"), ConfigError);
    std::istringstream no_eq("bits 3\n");
    EXPECT_THROW(rc.load(no_eq), ConfigError);
    rc.set("bits", "-3");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("bits", "12x");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("bits", "0");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("bits", "12");
    rc.set("weighting", "maybe");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("weighting", "off");
    rc.set("mode", "other");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("mode", "asymmetric");
    rc.set("optimizer", "rmsprop");
    EXPECT_THROW(rc.train_config(), ConfigError);
    rc.set("optimizer", "adam");
    EXPECT_EQ(rc.train_config().optimizer, OptimizerKind::adam);
    EXPECT_THROW(rc.require_path("features"), ConfigError);
}

TEST(RunConfig, MapCutoffAndLists) {
    RunConfig rc;
    rc.set("map_cutoff", "500");
    EXPECT_EQ(rc.map_cutoff(), 500u);
    rc.set("map_cutoff", "0");
    EXPECT_THROW(rc.map_cutoff(), ConfigError);
    rc.set("n_values", "1, 2,3");
    EXPECT_EQ(rc.get_uint_list("n_values"), (std::vector<std::uint64_t>{1, 2, 3}));
    rc.set("gammas", "0.5,x");
    EXPECT_THROW(rc.get_double_list("gammas"), ConfigError);
}
