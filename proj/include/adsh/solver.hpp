#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adsh/encoder.hpp"
#include "adsh/errors.hpp"
#include "adsh/hashcore.hpp"
#include "adsh/linalg.hpp"
#include "adsh/simgraph.hpp"

namespace adsh {

enum class TrainMode {
    asymmetric_sampled,           // queries sampled from the database, gamma-regularized
    asymmetric_separate_queries,  // fixed external query set, no regularizer
    symmetric_baseline,           // one encoder for both sides
};

inline std::string to_string(TrainMode mode) {
    switch (mode) {
        case TrainMode::asymmetric_sampled: return "asymmetric";
        case TrainMode::asymmetric_separate_queries: return "asymmetric_separate";
        case TrainMode::symmetric_baseline: return "symmetric";
    }
    return "unknown";
}

struct TrainConfig {
    std::size_t code_len = 12;
    double gamma = 200.0;
    std::size_t query_count = 1000;  // |Omega|; anchors per epoch for the symmetric baseline
    std::size_t outer_iters = 50;
    std::size_t inner_iters = 3;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    TrainMode mode = TrainMode::asymmetric_sampled;
    bool imbalance_weighting = true;
    std::vector<std::size_t> hidden_dims = {512};
    OptimizerKind optimizer = OptimizerKind::gradient_descent;
    bool normalize_gradient = true;
    // Symmetric baseline only: every database point is an anchor each epoch.
    bool symmetric_all_pairs = false;

    void validate() const {
        detail::require(code_len >= 1, "config: code length must be >= 1");
        detail::require(gamma >= 0.0 && std::isfinite(gamma), "config: gamma must be finite and >= 0");
        detail::require(outer_iters >= 1 && inner_iters >= 1, "config: iteration counts must be >= 1");
        detail::require(query_count >= 1, "config: query count must be >= 1");
        detail::require(batch_size >= 1 && batch_size <= query_count,
                        "config: batch size must satisfy 1 <= M <= |Omega|");
        detail::require(learning_rate >= 0.0 && std::isfinite(learning_rate),
                        "config: learning rate must be finite and >= 0");
    }
};

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

namespace detail {

// db index -> row of U~ (or -1 when the point is not a training query).
inline std::vector<long> omega_rows(const SimilarityBlock& sim) {
    std::vector<long> rows(sim.db_count, -1);
    for (std::size_t i = 0; i < sim.query_indices.size(); ++i) {
        require(sim.query_indices[i] < sim.db_count, "similarity: query index out of range");
        rows[sim.query_indices[i]] = static_cast<long>(i);
    }
    return rows;
}

inline void check_shapes(const Matrix& u_tilde, const CodeMatrix& codes, const SimilarityBlock& sim) {
    require(static_cast<std::size_t>(u_tilde.rows()) == sim.query_count,
            "solver: U~ rows (" + std::to_string(u_tilde.rows()) + ") != query count (" +
                std::to_string(sim.query_count) + ")");
    require(codes.rows() == sim.db_count, "solver: V rows != database count");
    require(static_cast<std::size_t>(u_tilde.cols()) == codes.code_len(), "solver: code length mismatch");
    require(sim.query_indices.empty() || sim.query_indices.size() == sim.query_count,
            "solver: query index set size != query count");
}

inline double weight_of(const SimilarityBlock& sim, Sign s, bool weighted) {
    return (weighted && s < 0) ? sim.neg_weight : 1.0;
}

}  // namespace detail

/**
 * J = sum_{i,j} w_ij (u_i^T v_j - c S_ij)^2 + gamma sum_{i in Omega} |v_i - u_i|^2.
 * The regularizer is present only when the block was sampled from the
 * database; w_ij is 1 unless weighted, in which case negatives get the
 * imbalance ratio.
 */
inline double objective(const Matrix& u_tilde, const CodeMatrix& codes, const SimilarityBlock& sim,
                        double gamma, bool weighted) {
    detail::check_shapes(u_tilde, codes, sim);
    const Matrix vd = to_dense(codes);
    const double c = static_cast<double>(codes.code_len());
    const Matrix inner = u_tilde * vd.transpose();
    double pair_term = 0.0;
    for (std::size_t j = 0; j < sim.db_count; ++j) {
        for (std::size_t i = 0; i < sim.query_count; ++i) {
            const Sign s = sim.sign(i, j);
            const double r = inner(i, j) - c * s;
            pair_term += detail::weight_of(sim, s, weighted) * r * r;
        }
    }
    double reg_term = 0.0;
    for (std::size_t i = 0; i < sim.query_indices.size(); ++i) {
        reg_term += (vd.row(sim.query_indices[i]) - u_tilde.row(i)).squaredNorm();
    }
    return pair_term + gamma * reg_term;
}

// ---------------------------------------------------------------------------
// V-step
// ---------------------------------------------------------------------------

/**
 * Holds the dense copy of V and whatever per-sweep precomputation the
 * chosen update form needs, so a full sweep over c columns costs O(mnc).
 *
 * Per-entry form (any weights): the coefficient of V_jk in J is
 *   sum_i w_ij u_ik (u_i^T v_j - u_ik V_jk - c S_ij) - gamma ubar_jk
 * and V_jk = -sign(coefficient). The inner products u_i^T v_j are cached
 * and patched after each column commit.
 *
 * Matrix form (unit weights only): V_*k = -sign(2 Vhat_k Uhat_k^T U_*k + Q_*k)
 * with Q = -2c S^T U - 2 gamma Ubar and the c x c Gram matrix U^T U.
 *
 * sign(0) := +1, so a zero argument yields V_jk = -1.
 */
class ColumnUpdater {
public:
    enum class Form { per_entry, matrix };

    ColumnUpdater(const Matrix& u_tilde, const CodeMatrix& codes, const SimilarityBlock& sim, double gamma,
                  bool weighted, Form form)
        : u_(u_tilde), sim_(sim), gamma_(gamma), weighted_(weighted), form_(form), dense_(to_dense(codes)) {
        detail::check_shapes(u_tilde, codes, sim);
        detail::require(form == Form::per_entry || !weighted,
                        "ColumnUpdater: matrix form requires unit weights");
        const auto rows = detail::omega_rows(sim);
        const std::size_t n = sim.db_count;
        const std::size_t m = sim.query_count;
        const std::size_t c = codes.code_len();
        const double cd = static_cast<double>(c);

        if (form_ == Form::per_entry) {
            inner_ = u_ * dense_.transpose();  // m x n
            // Constant part per (j, k): -c sum_i w_ij S_ij u_ik - gamma ubar_jk.
            constant_ = Matrix::Zero(c, n);
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < m; ++i) {
                    const Sign s = sim.sign(i, j);
                    constant_.col(j) -= (cd * detail::weight_of(sim, s, weighted) * s) * u_.row(i).transpose();
                }
                if (rows[j] >= 0) constant_.col(j) -= gamma * u_.row(rows[j]).transpose();
            }
        } else {
            gram_ = u_.transpose() * u_;  // c x c
            q_ = Matrix::Zero(c, n);      // Q^T
            for (std::size_t j = 0; j < n; ++j) {
                for (std::size_t i = 0; i < m; ++i) {
                    q_.col(j) -= (2.0 * cd * sim.sign(i, j)) * u_.row(i).transpose();
                }
                if (rows[j] >= 0) q_.col(j) -= 2.0 * gamma * u_.row(rows[j]).transpose();
            }
        }
    }

    /// Replaces column k with the exact minimizer given the other columns.
    void update_column(std::size_t k) {
        const std::size_t c = static_cast<std::size_t>(dense_.cols());
        detail::require(k < c, "v_step_column: bit index out of range");
        const std::size_t n = sim_.db_count;
        const std::size_t m = sim_.query_count;
        if (form_ == Form::per_entry) {
            for (std::size_t j = 0; j < n; ++j) {
                const double vjk = dense_(j, k);
                double arg = constant_(k, j);
                for (std::size_t i = 0; i < m; ++i) {
                    const double uik = u_(i, k);
                    const double w = detail::weight_of(sim_, sim_.sign(i, j), weighted_);
                    arg += w * uik * (inner_(i, j) - uik * vjk);
                }
                const double next = -static_cast<double>(sign_of(arg));
                if (next != vjk) {
                    inner_.col(j) += (next - vjk) * u_.col(k);
                    dense_(j, k) = next;
                }
            }
        } else {
            // Uhat_k^T U_*k: Gram column k without its diagonal entry.
            Vector cross = gram_.col(k);
            cross(k) = 0.0;
            Vector arg = 2.0 * (dense_ * cross) + q_.row(k).transpose();
            for (std::size_t j = 0; j < n; ++j) dense_(j, k) = -static_cast<double>(sign_of(arg(j)));
        }
    }

    const Matrix& dense_codes() const { return dense_; }

    void write_column(CodeMatrix& codes, std::size_t k) const {
        for (std::size_t j = 0; j < sim_.db_count; ++j) codes.set(j, k, dense_(j, k) > 0 ? Sign{1} : Sign{-1});
    }

private:
    const Matrix& u_;
    const SimilarityBlock& sim_;
    double gamma_;
    bool weighted_;
    Form form_;
    Matrix dense_;     // n x c, +-1
    Matrix inner_;     // m x n, u_i^T v_j (per-entry form)
    Matrix constant_;  // c x n (per-entry form)
    Matrix gram_;      // c x c (matrix form)
    Matrix q_;         // c x n, Q^T (matrix form)
};

/// Per-entry update of one column; handles weighted and unit-weight blocks.
inline void v_step_column(const Matrix& u_tilde, CodeMatrix& codes, const SimilarityBlock& sim, std::size_t k,
                          double gamma, bool weighted) {
    ColumnUpdater updater(u_tilde, codes, sim, gamma, weighted, ColumnUpdater::Form::per_entry);
    updater.update_column(k);
    updater.write_column(codes, k);
}

/// Literal matrix-form column update; unit weights only.
inline void v_step_column_matrix_form(const Matrix& u_tilde, CodeMatrix& codes, const SimilarityBlock& sim,
                                      std::size_t k, double gamma) {
    ColumnUpdater updater(u_tilde, codes, sim, gamma, false, ColumnUpdater::Form::matrix);
    updater.update_column(k);
    updater.write_column(codes, k);
}

struct ColumnEvent {
    std::size_t bit = 0;
    double objective_before = 0.0;
    double objective_after = 0.0;
};

using ColumnHook = std::function<void(const ColumnEvent&)>;

/**
 * Bit-by-bit sweep k = 0..c-1, each column seeing the latest V. Unit
 * weights take the Gram/Q fast path; weighted blocks use the per-entry
 * form. When a hook is set, the full objective is evaluated around every
 * column commit and reported.
 */
inline void v_step(const Matrix& u_tilde, CodeMatrix& codes, const SimilarityBlock& sim, double gamma,
                   bool weighted, const ColumnHook& hook = {}) {
    const auto form = weighted ? ColumnUpdater::Form::per_entry : ColumnUpdater::Form::matrix;
    ColumnUpdater updater(u_tilde, codes, sim, gamma, weighted, form);
    for (std::size_t k = 0; k < codes.code_len(); ++k) {
        const double before = hook ? objective(u_tilde, codes, sim, gamma, weighted) : 0.0;
        updater.update_column(k);
        updater.write_column(codes, k);
        if (hook) hook({k, before, objective(u_tilde, codes, sim, gamma, weighted)});
    }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct HistoryEntry {
    std::size_t outer = 0;
    std::size_t inner = 0;
    std::string phase;  // "theta" or "v"
    double objective = 0.0;
    double seconds = 0.0;  // training time since start, hooks excluded

    bool operator==(const HistoryEntry&) const = default;
};

inline void write_history_csv(std::ostream& os, std::span<const HistoryEntry> history) {
    os << "outer,inner,phase,J,seconds\n";
    os.precision(17);
    for (const auto& h : history) {
        os << h.outer << ',' << h.inner << ',' << h.phase << ',' << h.objective << ',' << h.seconds << '\n';
    }
}

struct OuterEvent {
    std::size_t outer = 0;
    double seconds = 0.0;
    const EncoderModel& model;
    const CodeMatrix& codes;  // V for asymmetric runs; empty for the symmetric baseline
};

struct TrainHooks {
    // Called after every column commit (asymmetric modes), with the outer
    // and inner iteration numbers (1-based).
    std::function<void(std::size_t, std::size_t, const ColumnEvent&)> on_column;
    // Called at the end of each outer iteration. Time spent here is not
    // counted in the reported training seconds.
    std::function<void(const OuterEvent&)> on_outer;
};

struct TrainResult {
    EncoderModel model;
    CodeMatrix codes;  // database codes
    std::vector<HistoryEntry> history;
    std::vector<std::size_t> last_omega;
    bool aborted = false;
    std::string diagnostic;
};

/// Training inputs. Separate-query mode reads query_features/query_labels
/// and ignores db_features.
struct TrainingData {
    const Matrix& db_features;
    const LabelMatrix& db_labels;
    const Matrix* query_features = nullptr;
    const LabelMatrix* query_labels = nullptr;
};

namespace detail {

class TrainClock {
public:
    TrainClock() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        return d.count() - paused_;
    }
    template <class F>
    void excluded(F&& f) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - t0;
        paused_ += d.count();
    }

private:
    std::chrono::steady_clock::time_point start_;
    double paused_ = 0.0;
};

inline std::vector<std::size_t> model_dims(std::size_t input, const TrainConfig& cfg) {
    std::vector<std::size_t> dims{input};
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(cfg.code_len);
    return dims;
}

inline CodeMatrix random_codes(std::size_t n, std::size_t c, std::mt19937_64& rng) {
    CodeMatrix codes(n, c);
    std::bernoulli_distribution coin(0.5);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t b = 0; b < c; ++b) codes.set(j, b, coin(rng) ? Sign{1} : Sign{-1});
    }
    return codes;
}

template <class F>
void for_each_batch(std::span<const std::size_t> order, std::size_t batch_size, F&& f) {
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t len = std::min(batch_size, order.size() - start);
        f(order.subspan(start, len));
    }
}

inline OptimizerState make_optimizer(const TrainConfig& cfg) {
    OptimizerState opt;
    opt.kind = cfg.optimizer;
    opt.learning_rate = cfg.learning_rate;
    return opt;
}

}  // namespace detail

/**
 * Alternating optimization. Each outer iteration resamples Omega (sampled
 * mode) and rebuilds its similarity rows from labels; each inner iteration
 * runs ceil(m/M) minibatch steps over a shuffled Omega, refreshes U~, then
 * sweeps all c columns of V. Theta and V carry over between outer
 * iterations.
 *
 * A numeric failure stops training; the result then holds the last good
 * model and codes with aborted set.
 */
inline TrainResult train(const TrainingData& data, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    detail::require(cfg.mode != TrainMode::symmetric_baseline, "train: use train_symmetric_baseline");
    const bool separate = cfg.mode == TrainMode::asymmetric_separate_queries;
    const std::size_t n = data.db_labels.rows();
    detail::require(n >= 1, "train: empty database");

    const Matrix* query_features = &data.db_features;
    SimilarityBlock sim;
    if (separate) {
        detail::require(data.query_features != nullptr && data.query_labels != nullptr,
                        "train: separate-query mode needs query features and labels");
        detail::require(static_cast<std::size_t>(data.query_features->rows()) == data.query_labels->rows(),
                        "train: query feature/label row mismatch");
        query_features = data.query_features;
        sim = build_similarity(*data.query_labels, data.db_labels);
    } else {
        detail::require(static_cast<std::size_t>(data.db_features.rows()) == n,
                        "train: database feature/label row mismatch");
        detail::require(cfg.query_count <= n, "train: |Omega| exceeds database size");
    }
    const std::size_t m = separate ? sim.query_count : cfg.query_count;
    detail::require(cfg.batch_size <= m, "train: batch size exceeds query count");

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    result.model = EncoderModel::glorot(detail::model_dims(query_features->cols(), cfg), rng());
    result.codes = detail::random_codes(n, cfg.code_len, rng);
    OptimizerState optimizer = detail::make_optimizer(cfg);
    const bool weighted = cfg.imbalance_weighting;

    detail::TrainClock clock;
    Matrix xq;
    std::vector<std::size_t> order(m);
    try {
        for (std::size_t outer = 1; outer <= cfg.outer_iters; ++outer) {
            if (!separate) {
                result.last_omega = sample_query_indices(n, m, rng());
                sim = build_sampled_similarity(data.db_labels, result.last_omega);
                xq = select_rows(data.db_features, result.last_omega);
            } else if (outer == 1) {
                xq = *query_features;
            }
            for (std::size_t inner = 1; inner <= cfg.inner_iters; ++inner) {
                const Matrix vd = to_dense(result.codes);
                const BatchTargets targets{sim, vd, cfg.gamma, weighted};
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::shuffle(order.begin(), order.end(), rng);
                detail::for_each_batch(order, cfg.batch_size, [&](std::span<const std::size_t> batch) {
                    minibatch_step(result.model, optimizer, xq, batch, targets, cfg.normalize_gradient);
                });
                const Matrix u = relaxed_codes(result.model, xq);
                const double j_theta = objective(u, result.codes, sim, cfg.gamma, weighted);
                if (!std::isfinite(j_theta)) throw NumericError("train: non-finite objective after theta step");
                result.history.push_back({outer, inner, "theta", j_theta, clock.seconds()});

                ColumnHook column_hook;
                if (hooks.on_column) {
                    column_hook = [&](const ColumnEvent& e) { hooks.on_column(outer, inner, e); };
                }
                CodeMatrix next = result.codes;
                v_step(u, next, sim, cfg.gamma, weighted, column_hook);
                const double j_v = objective(u, next, sim, cfg.gamma, weighted);
                if (!std::isfinite(j_v)) throw NumericError("train: non-finite objective after V step");
                result.codes = std::move(next);
                result.history.push_back({outer, inner, "v", j_v, clock.seconds()});
            }
            if (hooks.on_outer) {
                clock.excluded([&] { hooks.on_outer({outer, clock.seconds(), result.model, result.codes}); });
            }
        }
    } catch (const NumericError& e) {
        result.aborted = true;
        result.diagnostic = e.what();
    }
    if (separate) result.last_omega.clear();
    return result;
}

/**
 * Symmetric baseline: one encoder produces both sides of every pair. Each
 * epoch caches tanh(F(x)) for all n points, then takes minibatch steps over
 * the anchors (all n points, or |Omega| sampled ones), pairing each anchor
 * with every cached output. Database codes come from encoding all points
 * afterwards. Epoch cost is O(anchors * n).
 */
inline TrainResult train_symmetric_baseline(const Matrix& features, const LabelMatrix& labels,
                                            const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    cfg.validate();
    const std::size_t n = labels.rows();
    detail::require(n >= 1 && static_cast<std::size_t>(features.rows()) == n,
                    "train_symmetric_baseline: feature/label row mismatch");
    const std::size_t anchors_per_epoch = cfg.symmetric_all_pairs ? n : cfg.query_count;
    detail::require(anchors_per_epoch <= n, "train_symmetric_baseline: |Omega| exceeds database size");

    std::mt19937_64 rng(cfg.seed);
    TrainResult result;
    result.model = EncoderModel::glorot(detail::model_dims(features.cols(), cfg), rng());
    OptimizerState optimizer = detail::make_optimizer(cfg);
    const CodeMatrix no_codes;

    detail::TrainClock clock;
    try {
        for (std::size_t epoch = 1; epoch <= cfg.outer_iters; ++epoch) {
            Matrix cached = relaxed_codes(result.model, features);
            std::vector<std::size_t> anchors;
            if (cfg.symmetric_all_pairs) {
                anchors.resize(n);
                std::iota(anchors.begin(), anchors.end(), std::size_t{0});
            } else {
                anchors = sample_query_indices(n, anchors_per_epoch, rng());
            }
            std::shuffle(anchors.begin(), anchors.end(), rng);
            double epoch_loss = 0.0;
            detail::for_each_batch(anchors, cfg.batch_size, [&](std::span<const std::size_t> batch) {
                const SimilarityBlock sim = build_similarity(labels.select(batch), labels);
                const Matrix xb = select_rows(features, batch);
                std::vector<std::size_t> rows(batch.size());
                std::iota(rows.begin(), rows.end(), std::size_t{0});
                const BatchTargets targets{sim, cached, 0.0, cfg.imbalance_weighting};
                LossAndGradient lg = loss_and_gradient(result.model, xb, rows, targets);
                if (!std::isfinite(lg.loss) || !gradients_finite(lg.grads)) {
                    throw NumericError("symmetric baseline: non-finite loss or gradient");
                }
                if (cfg.normalize_gradient) {
                    const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(n));
                    for (auto& g : lg.grads) {
                        g.weight *= scale;
                        g.bias *= scale;
                    }
                }
                EncoderModel before = result.model;
                optimizer.apply(result.model, lg.grads);
                if (!result.model.finite()) {
                    result.model = std::move(before);
                    throw NumericError("symmetric baseline: parameters became non-finite");
                }
                epoch_loss += lg.loss;
                const Matrix refreshed = relaxed_codes(result.model, xb);
                for (std::size_t r = 0; r < batch.size(); ++r) cached.row(batch[r]) = refreshed.row(r);
            });
            result.history.push_back({epoch, 1, "theta", epoch_loss, clock.seconds()});
            if (hooks.on_outer) {
                clock.excluded([&] { hooks.on_outer({epoch, clock.seconds(), result.model, no_codes}); });
            }
        }
    } catch (const NumericError& e) {
        result.aborted = true;
        result.diagnostic = e.what();
    }
    result.codes = encode_queries(result.model, features);
    return result;
}

/// Dispatches on cfg.mode.
inline TrainResult train_any(const TrainingData& data, const TrainConfig& cfg, const TrainHooks& hooks = {}) {
    if (cfg.mode == TrainMode::symmetric_baseline) {
        return train_symmetric_baseline(data.db_features, data.db_labels, cfg, hooks);
    }
    return train(data, cfg, hooks);
}

}  // namespace adsh
