#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "adsh/hashcore.hpp"

namespace adsh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n rows x d columns of features, one point per row.
using FeatureMatrix = Eigen::MatrixXd;

inline Matrix to_dense(const CodeMatrix& codes) {
    Matrix out(codes.rows(), codes.code_len());
    for (std::size_t i = 0; i < codes.rows(); ++i) {
        const CodeView r = codes.row(i);
        for (std::size_t b = 0; b < codes.code_len(); ++b) out(i, b) = r[b];
    }
    return out;
}

/// Row-wise sign() of a real matrix, sign(0) := +1.
inline CodeMatrix binarize_rows(const Matrix& values) {
    CodeMatrix out(values.rows(), values.cols());
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index b = 0; b < values.cols(); ++b) out.set(i, b, sign_of(values(i, b)));
    }
    return out;
}

inline Matrix select_rows(const Matrix& m, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), m.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(r) = m.row(rows[r]);
    return out;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace adsh
