#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "adsh/dataio.hpp"
#include "adsh/errors.hpp"
#include "adsh/solver.hpp"

namespace adsh {

struct ProbeConfig {
    std::vector<std::size_t> n_values = {2000, 4000, 8000, 16000};
    std::size_t query_count = 200;  // m, held fixed across n
    std::size_t code_len = 16;
    std::size_t feature_dim = 32;
    std::vector<std::size_t> hidden_dims = {64};
    std::size_t inner_iters = 1;
    std::size_t batch_size = 100;
    std::size_t repeats = 3;  // best-of timing
    bool include_symmetric = true;
    std::uint64_t seed = 0;
};

struct ProbeRow {
    std::size_t n = 0;
    double adsh_seconds = 0.0;       // one outer iteration
    double symmetric_seconds = 0.0;  // one all-pairs epoch; 0 when skipped
};

struct ProbeResult {
    std::vector<ProbeRow> rows;
    double adsh_slope = 0.0;
    double symmetric_slope = 0.0;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size() && x.size() >= 2, "loglog_slope: need >= 2 matching points");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        detail::require(x[i] > 0.0 && y[i] > 0.0, "loglog_slope: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

namespace detail {

template <class F>
double best_of(std::size_t repeats, F&& f) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < std::max<std::size_t>(repeats, 1); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
        best = std::min(best, d.count());
    }
    return best;
}

inline TrainConfig probe_train_config(const ProbeConfig& probe) {
    TrainConfig cfg;
    cfg.code_len = probe.code_len;
    cfg.query_count = probe.query_count;
    cfg.outer_iters = 1;
    cfg.inner_iters = probe.inner_iters;
    cfg.batch_size = std::min(probe.batch_size, probe.query_count);
    cfg.hidden_dims = probe.hidden_dims;
    cfg.seed = probe.seed;
    return cfg;
}

inline LabeledFeatures probe_data(const ProbeConfig& probe, std::size_t n) {
    constexpr std::size_t clusters = 10;
    detail::require(n >= clusters && n % clusters == 0, "complexity_probe: n must be a multiple of 10");
    return gen_synthetic_clusters(clusters, n / clusters, probe.feature_dim, 0.1, probe.seed + n);
}

}  // namespace detail

/**
 * Wall-clock of one asymmetric outer iteration (fixed m, c) and of one
 * all-pairs symmetric epoch for each n, with fitted log-log slopes.
 */
inline ProbeResult complexity_probe(const ProbeConfig& probe) {
    detail::require(probe.n_values.size() >= 3, "complexity_probe: need at least 3 values of n");
    ProbeResult result;
    const TrainConfig cfg = detail::probe_train_config(probe);
    TrainConfig sym_cfg = cfg;
    sym_cfg.mode = TrainMode::symmetric_baseline;
    sym_cfg.symmetric_all_pairs = true;

    for (std::size_t n : probe.n_values) {
        const LabeledFeatures data = detail::probe_data(probe, n);
        ProbeRow row{n, 0.0, 0.0};
        row.adsh_seconds = detail::best_of(probe.repeats, [&] {
            const TrainResult r = train({data.features, data.labels}, cfg);
            if (r.aborted) throw NumericError("complexity_probe: " + r.diagnostic);
        });
        if (probe.include_symmetric) {
            row.symmetric_seconds = detail::best_of(probe.repeats, [&] {
                const TrainResult r = train_symmetric_baseline(data.features, data.labels, sym_cfg);
                if (r.aborted) throw NumericError("complexity_probe: " + r.diagnostic);
            });
        }
        result.rows.push_back(row);
    }

    std::vector<double> ns;
    std::vector<double> adsh;
    std::vector<double> sym;
    for (const auto& r : result.rows) {
        ns.push_back(static_cast<double>(r.n));
        adsh.push_back(r.adsh_seconds);
        sym.push_back(r.symmetric_seconds);
    }
    result.adsh_slope = loglog_slope(ns, adsh);
    if (probe.include_symmetric) result.symmetric_slope = loglog_slope(ns, sym);
    return result;
}

/// Time of one pass of minibatch theta steps over m queries, n fixed.
inline std::vector<double> theta_epoch_seconds(const ProbeConfig& probe, std::size_t n,
                                               std::span<const std::size_t> m_values) {
    const LabeledFeatures data = detail::probe_data(probe, n);
    std::vector<double> out;
    for (std::size_t m : m_values) {
        TrainConfig cfg = detail::probe_train_config(probe);
        cfg.query_count = m;
        cfg.batch_size = std::min(cfg.batch_size, m);
        const auto omega = sample_query_indices(n, m, probe.seed);
        const SimilarityBlock sim = build_sampled_similarity(data.labels, omega);
        const Matrix xq = select_rows(data.features, omega);
        std::mt19937_64 rng(probe.seed);
        const Matrix vd = to_dense(detail::random_codes(n, cfg.code_len, rng));
        const BatchTargets targets{sim, vd, cfg.gamma, true};
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        out.push_back(detail::best_of(probe.repeats, [&] {
            EncoderModel model = EncoderModel::glorot(detail::model_dims(probe.feature_dim, cfg), probe.seed);
            OptimizerState opt = detail::make_optimizer(cfg);
            detail::for_each_batch(order, cfg.batch_size, [&](std::span<const std::size_t> batch) {
                minibatch_step(model, opt, xq, batch, targets);
            });
        }));
    }
    return out;
}

inline void write_probe_csv(std::ostream& os, const ProbeResult& result) {
    os.precision(9);
    os << "n,adsh_seconds,symmetric_seconds\n";
    for (const auto& r : result.rows) os << r.n << ',' << r.adsh_seconds << ',' << r.symmetric_seconds << '\n';
    os << "# adsh_slope=" << result.adsh_slope << " symmetric_slope=" << result.symmetric_slope << '\n';
}

}  // namespace adsh
