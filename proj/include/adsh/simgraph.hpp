#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <initializer_list>
#include <string>
#include <vector>

#include "adsh/errors.hpp"
#include "adsh/hashcore.hpp"

namespace adsh {

using LabelId = std::uint32_t;

/// Per-point label sets, each sorted ascending and non-empty.
class LabelMatrix {
public:
    LabelMatrix() = default;

    LabelMatrix(std::initializer_list<std::vector<LabelId>> rows)
        : LabelMatrix(std::vector<std::vector<LabelId>>(rows)) {}

    explicit LabelMatrix(std::vector<std::vector<LabelId>> rows) : rows_(std::move(rows)) {
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            auto& r = rows_[i];
            detail::require(!r.empty(), "LabelMatrix: row " + std::to_string(i) + " has no labels");
            std::sort(r.begin(), r.end());
            r.erase(std::unique(r.begin(), r.end()), r.end());
        }
    }

    /// Single-label convenience constructor.
    static LabelMatrix from_single(std::span<const LabelId> labels) {
        std::vector<std::vector<LabelId>> rows;
        rows.reserve(labels.size());
        for (LabelId l : labels) rows.push_back({l});
        return LabelMatrix(std::move(rows));
    }

    std::size_t rows() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    std::span<const LabelId> row(std::size_t i) const { return rows_[i]; }
    const std::vector<std::vector<LabelId>>& data() const { return rows_; }

    LabelMatrix select(std::span<const std::size_t> indices) const {
        LabelMatrix out;
        out.rows_.reserve(indices.size());
        for (std::size_t i : indices) out.rows_.push_back(rows_.at(i));
        return out;
    }

    bool operator==(const LabelMatrix&) const = default;

private:
    std::vector<std::vector<LabelId>> rows_;
};

/// True when two sorted label sets share at least one id.
inline bool labels_intersect(std::span<const LabelId> a, std::span<const LabelId> b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia == *ib) return true;
        if (*ia < *ib) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return false;
}

/**
 * Dense m x n block of signed pairwise supervision between m training
 * queries and the n database points.
 *
 * query_indices is the sampled index set into the database when the
 * queries are themselves database points; it is empty when a separate
 * query set was supplied. neg_weight is #(+1) / #(-1), or 1 when either
 * class is absent.
 */
struct SimilarityBlock {
    std::size_t query_count = 0;
    std::size_t db_count = 0;
    std::vector<Sign> signs;  // row-major, query_count x db_count
    double neg_weight = 1.0;
    std::vector<std::size_t> query_indices;

    Sign sign(std::size_t i, std::size_t j) const { return signs[i * db_count + j]; }
    std::span<const Sign> row(std::size_t i) const {
        return std::span<const Sign>(signs).subspan(i * db_count, db_count);
    }
    bool sampled_from_database() const { return !query_indices.empty(); }
};

inline double imbalance_ratio(std::span<const Sign> signs) {
    std::size_t pos = 0;
    std::size_t neg = 0;
    for (Sign s : signs) (s > 0 ? pos : neg) += 1;
    if (pos == 0 || neg == 0) return 1.0;
    return static_cast<double>(pos) / static_cast<double>(neg);
}

inline SimilarityBlock build_similarity(const LabelMatrix& query_labels, const LabelMatrix& db_labels) {
    detail::require(!query_labels.empty() && !db_labels.empty(),
                    "build_similarity: label matrices must be non-empty");
    SimilarityBlock block;
    block.query_count = query_labels.rows();
    block.db_count = db_labels.rows();
    block.signs.resize(block.query_count * block.db_count);
    for (std::size_t i = 0; i < block.query_count; ++i) {
        const auto qi = query_labels.row(i);
        Sign* out = block.signs.data() + i * block.db_count;
        for (std::size_t j = 0; j < block.db_count; ++j) {
            out[j] = labels_intersect(qi, db_labels.row(j)) ? Sign{1} : Sign{-1};
        }
    }
    block.neg_weight = imbalance_ratio(block.signs);
    return block;
}

/// Rows of the full database-vs-database similarity indexed by omega.
inline SimilarityBlock build_sampled_similarity(const LabelMatrix& db_labels,
                                                std::span<const std::size_t> omega) {
    detail::require(!omega.empty(), "build_sampled_similarity: empty index set");
    for (std::size_t i : omega) {
        detail::require(i < db_labels.rows(), "build_sampled_similarity: index out of range");
    }
    SimilarityBlock block = build_similarity(db_labels.select(omega), db_labels);
    block.query_indices.assign(omega.begin(), omega.end());
    return block;
}

/// m distinct indices drawn uniformly without replacement from [0, n).
inline std::vector<std::size_t> sample_query_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
    detail::require(m >= 1, "sample_query_indices: m must be >= 1");
    detail::require(m <= n, "sample_query_indices: m=" + std::to_string(m) +
                                " exceeds n=" + std::to_string(n));
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    // Partial Fisher-Yates: the first m slots are the sample.
    for (std::size_t i = 0; i < m; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(all[i], all[pick(rng)]);
    }
    all.resize(m);
    return all;
}

inline double pair_weight(const SimilarityBlock& block, std::size_t i, std::size_t j) {
    detail::require(i < block.query_count && j < block.db_count, "pair_weight: index out of range");
    return block.sign(i, j) > 0 ? 1.0 : block.neg_weight;
}

}  // namespace adsh
