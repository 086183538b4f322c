#pragma once

// Brute-force reference implementations for tests. Everything here works
// on plain nested vectors and shares no arithmetic with the solver or
// encoder code paths.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "adsh/encoder.hpp"
#include "adsh/errors.hpp"

namespace adsh::oracle {

inline constexpr std::size_t kMaxDb = 12;
inline constexpr std::size_t kMaxQueries = 6;
inline constexpr std::size_t kMaxBits = 6;

struct TinyInstance {
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t c = 0;
    std::vector<std::vector<double>> u;  // m x c, relaxed query codes
    std::vector<std::vector<int>> s;     // m x n, +-1
    std::vector<std::vector<double>> w;  // m x n, pair weights
    std::vector<std::size_t> omega;      // query i is database point omega[i]; empty disables the regularizer
    double gamma = 0.0;
    std::vector<std::vector<int>> v;     // n x c, +-1

    void validate() const {
        if (n == 0 || n > kMaxDb || m == 0 || m > kMaxQueries || c == 0 || c > kMaxBits) {
            throw ValidationError("oracle: instance exceeds size caps (n<=12, m<=6, c<=6)");
        }
        if ((std::size_t{1} << n) >= 5000) throw ValidationError("oracle: 2^n candidates >= 5000");
        if (!omega.empty() && omega.size() != m) throw ValidationError("oracle: omega size != m");
    }
};

/// Literal triple loop over the objective.
inline double naive_objective(const TinyInstance& inst) {
    double total = 0.0;
    for (std::size_t i = 0; i < inst.m; ++i) {
        for (std::size_t j = 0; j < inst.n; ++j) {
            double dot = 0.0;
            for (std::size_t b = 0; b < inst.c; ++b) dot += inst.u[i][b] * inst.v[j][b];
            const double r = dot - static_cast<double>(inst.c) * inst.s[i][j];
            total += inst.w[i][j] * r * r;
        }
    }
    for (std::size_t i = 0; i < inst.omega.size(); ++i) {
        for (std::size_t b = 0; b < inst.c; ++b) {
            const double d = inst.v[inst.omega[i]][b] - inst.u[i][b];
            total += inst.gamma * d * d;
        }
    }
    return total;
}

struct ColumnMinimum {
    std::vector<int> column;
    double objective = 0.0;
};

/**
 * Tries all 2^n assignments of column k (others fixed) and returns the
 * first minimizer in lexicographic order with +1 ordered before -1.
 */
inline ColumnMinimum exhaustive_column_min(const TinyInstance& inst, std::size_t k) {
    inst.validate();
    if (k >= inst.c) throw ValidationError("oracle: bit index out of range");
    TinyInstance trial = inst;
    ColumnMinimum best;
    best.objective = std::numeric_limits<double>::infinity();
    const std::size_t count = std::size_t{1} << inst.n;
    for (std::size_t t = 0; t < count; ++t) {
        for (std::size_t j = 0; j < inst.n; ++j) {
            trial.v[j][k] = ((t >> (inst.n - 1 - j)) & 1U) ? -1 : 1;
        }
        const double value = naive_objective(trial);
        if (value < best.objective) {
            best.objective = value;
            best.column.assign(inst.n, 0);
            for (std::size_t j = 0; j < inst.n; ++j) best.column[j] = trial.v[j][k];
        }
    }
    return best;
}

/// Central differences (f(x+h) - f(x-h)) / 2h for every coordinate.
inline std::vector<double> finite_difference_grad(std::vector<double> x,
                                                  const std::function<double(std::span<const double>)>& f,
                                                  double h = 1e-5) {
    if (!(h > 0.0)) throw ValidationError("finite_difference_grad: step must be > 0");
    std::vector<double> grad(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) {
        const double saved = x[p];
        x[p] = saved + h;
        const double plus = f(x);
        x[p] = saved - h;
        const double minus = f(x);
        x[p] = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericError("finite_difference_grad: non-finite loss at parameter " + std::to_string(p));
        }
        grad[p] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

/// Same, over every encoder parameter in flat order.
inline std::vector<double> finite_difference_grad(EncoderModel model,
                                                  const std::function<double(const EncoderModel&)>& loss,
                                                  double h = 1e-5) {
    if (!(h > 0.0)) throw ValidationError("finite_difference_grad: step must be > 0");
    std::vector<double> grad(model.parameter_count());
    for (std::size_t p = 0; p < grad.size(); ++p) {
        double& param = flat_parameter(model.layers(), p);
        const double saved = param;
        param = saved + h;
        const double plus = loss(model);
        param = saved - h;
        const double minus = loss(model);
        param = saved;
        if (!std::isfinite(plus) || !std::isfinite(minus)) {
            throw NumericError("finite_difference_grad: non-finite loss at parameter " + std::to_string(p));
        }
        grad[p] = (plus - minus) / (2.0 * h);
    }
    return grad;
}

/**
 * Literal loss for a batch of training queries pushed through the model
 * by hand (explicit loops, no Eigen products): same objective as
 * naive_objective but with u_i = tanh(F(x_i)).
 */
inline double naive_encoder_loss(const EncoderModel& model, const std::vector<std::vector<double>>& x,
                                 const TinyInstance& inst) {
    TinyInstance filled = inst;
    filled.u.assign(x.size(), {});
    for (std::size_t i = 0; i < x.size(); ++i) {
        std::vector<double> a = x[i];
        const auto& layers = model.layers();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& layer = layers[l];
            std::vector<double> next(static_cast<std::size_t>(layer.weight.rows()));
            for (std::size_t r = 0; r < next.size(); ++r) {
                double acc = layer.bias(r);
                for (std::size_t col = 0; col < a.size(); ++col) acc += layer.weight(r, col) * a[col];
                next[r] = std::tanh(acc);  // hidden tanh, and tanh(z) at the output
            }
            a = std::move(next);
        }
        filled.u[i] = std::move(a);
    }
    return naive_objective(filled);
}

}  // namespace adsh::oracle
