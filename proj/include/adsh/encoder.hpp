#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "adsh/errors.hpp"
#include "adsh/hashcore.hpp"
#include "adsh/linalg.hpp"
#include "adsh/simgraph.hpp"

namespace adsh {

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

/**
 * Feed-forward hash function F(x; theta): affine layers with tanh between
 * them. The last affine output is z (length c); the relaxed code is
 * tanh(z).
 */
class EncoderModel {
public:
    EncoderModel() = default;

    /// dims = {d, h_1, ..., h_L, c}. Parameters start at zero.
    explicit EncoderModel(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        detail::require(dims_.size() >= 2, "EncoderModel: need at least input and output dims");
        for (std::size_t d : dims_) detail::require(d >= 1, "EncoderModel: zero-width layer");
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            layers_.push_back({Matrix::Zero(dims_[l + 1], dims_[l]), Vector::Zero(dims_[l + 1])});
        }
    }

    /// Uniform +-sqrt(6 / (fan_in + fan_out)) weights, zero biases.
    static EncoderModel glorot(std::vector<std::size_t> dims, std::uint64_t seed) {
        EncoderModel model(std::move(dims));
        std::mt19937_64 rng(seed);
        for (auto& layer : model.layers_) {
            const double limit =
                std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
            std::uniform_real_distribution<double> dist(-limit, limit);
            for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
                for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
            }
        }
        return model;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t input_dim() const { return dims_.front(); }
    std::size_t code_len() const { return dims_.back(); }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::size_t parameter_count() const {
        std::size_t total = 0;
        for (const auto& l : layers_) total += l.weight.size() + l.bias.size();
        return total;
    }

    bool finite() const {
        for (const auto& l : layers_) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        }
        return true;
    }

    bool operator==(const EncoderModel& other) const {
        if (dims_ != other.dims_) return false;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            if (layers_[l].weight != other.layers_[l].weight) return false;
            if (layers_[l].bias != other.layers_[l].bias) return false;
        }
        return true;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<DenseLayer> layers_;
};

/// Same shape as the model's layers.
using Gradients = std::vector<DenseLayer>;

// Flat parameter indexing: per layer, weights row-major then biases.
template <class Layers>
auto& flat_parameter(Layers& layers, std::size_t index) {
    for (auto& l : layers) {
        const auto w = static_cast<std::size_t>(l.weight.size());
        if (index < w) return l.weight(index / l.weight.cols(), index % l.weight.cols());
        index -= w;
        const auto b = static_cast<std::size_t>(l.bias.size());
        if (index < b) return l.bias(index);
        index -= b;
    }
    throw ValidationError("flat_parameter: index out of range");
}

struct ForwardCache {
    std::vector<Matrix> activations;  // input, then each hidden tanh output
    Matrix z;                         // batch x c
    Matrix u_tilde;                   // tanh(z)
};

/// Batched forward pass; X holds one sample per row.
inline ForwardCache forward_batch(const EncoderModel& model, const Matrix& x) {
    detail::require(static_cast<std::size_t>(x.cols()) == model.input_dim(),
                    "forward: feature dim " + std::to_string(x.cols()) + " != model input dim " +
                        std::to_string(model.input_dim()));
    ForwardCache cache;
    cache.activations.push_back(x);
    const auto& layers = model.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Matrix pre = cache.activations.back() * layers[l].weight.transpose();
        pre.rowwise() += layers[l].bias.transpose();
        if (l + 1 < layers.size()) {
            cache.activations.push_back(pre.array().tanh().matrix());
        } else {
            cache.z = std::move(pre);
        }
    }
    cache.u_tilde = cache.z.array().tanh().matrix();
    if (!cache.z.allFinite()) throw NumericError("forward: non-finite encoder output");
    return cache;
}

struct EncoderOutput {
    Vector z;
    Vector u_tilde;
};

inline EncoderOutput forward(const EncoderModel& model, std::span<const double> x) {
    Matrix row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t k = 0; k < x.size(); ++k) row(0, k) = x[k];
    ForwardCache cache = forward_batch(model, row);
    return {cache.z.row(0).transpose(), cache.u_tilde.row(0).transpose()};
}

/// Backpropagates dJ/dz (batch x c) through all layers.
inline Gradients backward(const EncoderModel& model, const ForwardCache& cache, Matrix grad_z) {
    const auto& layers = model.layers();
    Gradients grads(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        const Matrix& input = cache.activations[l];
        grads[l].weight = grad_z.transpose() * input;
        grads[l].bias = grad_z.colwise().sum().transpose();
        if (l > 0) {
            Matrix grad_a = grad_z * layers[l].weight;
            grad_z = (grad_a.array() * (1.0 - input.array().square())).matrix();
        }
    }
    return grads;
}

/**
 * Pairwise supervision for a batch of training queries.
 *
 * rows index into the similarity block (0..m-1); db_codes is the dense
 * +-1 copy of V. The regularizer pulls u_i toward v_{omega_i} only when
 * the block was sampled from the database.
 */
struct BatchTargets {
    const SimilarityBlock& sim;
    const Matrix& db_codes;
    double gamma = 0.0;
    bool weighted = false;
};

/**
 * Loss of the batch and its gradient with respect to z:
 *   J_B = sum_i sum_j w_ij (u_i^T v_j - c S_ij)^2 + gamma sum_i |v_i - u_i|^2
 *   dJ/dz_i = 2 { sum_j w_ij (u_i^T v_j - c S_ij) v_j + gamma (u_i - v_i) } * (1 - u_i^2)
 */
inline double batch_loss_grad_z(const Matrix& u_batch, std::span<const std::size_t> rows,
                                const BatchTargets& t, Matrix* grad_z) {
    const Matrix& vd = t.db_codes;
    detail::require(static_cast<std::size_t>(vd.rows()) == t.sim.db_count,
                    "loss: V rows != similarity db count");
    detail::require(u_batch.cols() == vd.cols(), "loss: code length mismatch between U and V");
    detail::require(static_cast<std::size_t>(u_batch.rows()) == rows.size(), "loss: batch size mismatch");
    const double c = static_cast<double>(vd.cols());

    Matrix residual = u_batch * vd.transpose();
    double loss = 0.0;
    for (std::size_t b = 0; b < rows.size(); ++b) {
        detail::require(rows[b] < t.sim.query_count, "loss: query row out of range");
        const auto srow = t.sim.row(rows[b]);
        for (std::size_t j = 0; j < t.sim.db_count; ++j) {
            const double w = (t.weighted && srow[j] < 0) ? t.sim.neg_weight : 1.0;
            const double r = residual(b, j) - c * srow[j];
            loss += w * r * r;
            residual(b, j) = w * r;
        }
    }
    Matrix g = residual * vd;
    if (t.sim.sampled_from_database()) {
        for (std::size_t b = 0; b < rows.size(); ++b) {
            const auto diff = (u_batch.row(b) - vd.row(t.sim.query_indices[rows[b]])).eval();
            loss += t.gamma * diff.squaredNorm();
            g.row(b) += t.gamma * diff;
        }
    }
    if (grad_z != nullptr) {
        *grad_z = (2.0 * g.array() * (1.0 - u_batch.array().square())).matrix();
    }
    return loss;
}

/**
 * Gradient of the per-query loss with respect to z_i for a single query.
 * v_self is v_i when the query is a database point (regularized mode),
 * absent otherwise.
 */
inline Vector loss_grad_z(const Vector& u_tilde, const CodeMatrix& db_codes, std::span<const Sign> s_row,
                          double neg_weight, bool weighted, std::optional<std::span<const Sign>> v_self,
                          double gamma) {
    const std::size_t c = db_codes.code_len();
    detail::require(static_cast<std::size_t>(u_tilde.size()) == c, "loss_grad_z: code length mismatch");
    detail::require(s_row.size() == db_codes.rows(), "loss_grad_z: similarity row length mismatch");
    Vector acc = Vector::Zero(c);
    for (std::size_t j = 0; j < db_codes.rows(); ++j) {
        const CodeView vj = db_codes.row(j);
        double dot = 0.0;
        for (std::size_t b = 0; b < c; ++b) dot += u_tilde(b) * vj[b];
        const double w = (weighted && s_row[j] < 0) ? neg_weight : 1.0;
        const double r = w * (dot - static_cast<double>(c) * s_row[j]);
        for (std::size_t b = 0; b < c; ++b) acc(b) += r * vj[b];
    }
    if (v_self) {
        detail::require(v_self->size() == c, "loss_grad_z: v_i length mismatch");
        for (std::size_t b = 0; b < c; ++b) acc(b) += gamma * (u_tilde(b) - (*v_self)[b]);
    }
    return (2.0 * acc.array() * (1.0 - u_tilde.array().square())).matrix();
}

struct LossAndGradient {
    double loss = 0.0;
    Gradients grads;
};

/// Batch loss and exact gradient with respect to every encoder parameter.
inline LossAndGradient loss_and_gradient(const EncoderModel& model, const Matrix& batch_features,
                                         std::span<const std::size_t> rows, const BatchTargets& targets) {
    const ForwardCache cache = forward_batch(model, batch_features);
    Matrix grad_z;
    LossAndGradient out;
    out.loss = batch_loss_grad_z(cache.u_tilde, rows, targets, &grad_z);
    out.grads = backward(model, cache, std::move(grad_z));
    return out;
}

enum class OptimizerKind { gradient_descent, adam };

/// Plain gradient descent by default; optional Adam moments.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::gradient_descent;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t step = 0;
    Gradients first_moment;
    Gradients second_moment;

    void apply(EncoderModel& model, const Gradients& grads) {
        detail::require(learning_rate >= 0.0, "optimizer: negative learning rate");
        auto& layers = model.layers();
        detail::require(grads.size() == layers.size(), "optimizer: gradient shape mismatch");
        ++step;
        if (kind == OptimizerKind::gradient_descent) {
            for (std::size_t l = 0; l < layers.size(); ++l) {
                layers[l].weight -= learning_rate * grads[l].weight;
                layers[l].bias -= learning_rate * grads[l].bias;
            }
            return;
        }
        if (first_moment.empty()) {
            for (const auto& l : layers) {
                first_moment.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
                second_moment.push_back(first_moment.back());
            }
        }
        const double t = static_cast<double>(step);
        const double scale = learning_rate * std::sqrt(1.0 - std::pow(beta2, t)) / (1.0 - std::pow(beta1, t));
        auto update = [&](auto& param, const auto& grad, auto& m, auto& v) {
            m = beta1 * m + (1.0 - beta1) * grad;
            v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
            param.array() -= scale * m.array() / (v.array().sqrt() + epsilon);
        };
        for (std::size_t l = 0; l < layers.size(); ++l) {
            update(layers[l].weight, grads[l].weight, first_moment[l].weight, second_moment[l].weight);
            update(layers[l].bias, grads[l].bias, first_moment[l].bias, second_moment[l].bias);
        }
    }
};

inline bool gradients_finite(const Gradients& grads) {
    for (const auto& g : grads) {
        if (!g.weight.allFinite() || !g.bias.allFinite()) return false;
    }
    return true;
}

/**
 * One optimizer step on the batch loss. With normalize set the gradient is
 * divided by (batch size * n), so the learning rate acts on the mean
 * per-pair loss. The model is left untouched when the gradient is not
 * finite. Returns the (unnormalized) batch loss.
 */
inline double minibatch_step(EncoderModel& model, OptimizerState& optimizer, const Matrix& query_features,
                             std::span<const std::size_t> batch, const BatchTargets& targets,
                             bool normalize = true) {
    detail::require(!batch.empty(), "minibatch_step: empty batch");
    const Matrix x = select_rows(query_features, batch);
    LossAndGradient lg = loss_and_gradient(model, x, batch, targets);
    if (!std::isfinite(lg.loss) || !gradients_finite(lg.grads)) {
        throw NumericError("minibatch_step: non-finite loss or gradient (loss=" + std::to_string(lg.loss) + ")");
    }
    if (normalize) {
        const double scale = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(targets.sim.db_count));
        for (auto& g : lg.grads) {
            g.weight *= scale;
            g.bias *= scale;
        }
    }
    EncoderModel before = model;
    optimizer.apply(model, lg.grads);
    if (!model.finite()) {
        model = std::move(before);
        throw NumericError("minibatch_step: parameters became non-finite");
    }
    return lg.loss;
}

/// Relaxed codes tanh(F(x)) for every row of X.
inline Matrix relaxed_codes(const EncoderModel& model, const Matrix& features) {
    return forward_batch(model, features).u_tilde;
}

/// sign(F(x)) per row, sign(0) := +1.
inline CodeMatrix encode_queries(const EncoderModel& model, const Matrix& features) {
    return binarize_rows(forward_batch(model, features).z);
}

}  // namespace adsh
