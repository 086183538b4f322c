#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "adsh/errors.hpp"
#include "adsh/hashcore.hpp"
#include "adsh/simgraph.hpp"

namespace adsh {

/// Dense query x database 0/1 ground-truth relevance.
class Relevance {
public:
    Relevance() = default;
    Relevance(std::size_t queries, std::size_t db) : queries_(queries), db_(db), data_(queries * db, 0) {}

    static Relevance from_labels(const LabelMatrix& query_labels, const LabelMatrix& db_labels) {
        Relevance r(query_labels.rows(), db_labels.rows());
        for (std::size_t q = 0; q < r.queries_; ++q) {
            for (std::size_t j = 0; j < r.db_; ++j) r.set(q, j, labels_intersect(query_labels.row(q), db_labels.row(j)));
        }
        return r;
    }

    std::size_t queries() const { return queries_; }
    std::size_t db_size() const { return db_; }
    bool operator()(std::size_t q, std::size_t j) const { return data_[q * db_ + j] != 0; }
    void set(std::size_t q, std::size_t j, bool relevant) { data_[q * db_ + j] = relevant ? 1 : 0; }

    std::size_t relevant_count(std::size_t q) const {
        return static_cast<std::size_t>(std::count(data_.begin() + q * db_, data_.begin() + (q + 1) * db_, 1));
    }

private:
    std::size_t queries_ = 0;
    std::size_t db_ = 0;
    std::vector<std::uint8_t> data_;
};

/// Per-query database order by ascending Hamming distance, ties by index.
struct RankingResult {
    std::vector<std::vector<std::uint32_t>> order;
    std::vector<std::vector<std::uint32_t>> distance;  // parallel to order
};

inline RankingResult rank_by_hamming(const CodeMatrix& queries, const CodeMatrix& db) {
    detail::require(queries.code_len() == db.code_len(), "rank_by_hamming: code lengths differ");
    const std::size_t c = db.code_len();
    RankingResult result;
    result.order.resize(queries.rows());
    result.distance.resize(queries.rows());
    std::vector<std::uint32_t> dist(db.rows());
    std::vector<std::size_t> bucket(c + 2);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::fill(bucket.begin(), bucket.end(), 0);
        for (std::size_t j = 0; j < db.rows(); ++j) {
            dist[j] = static_cast<std::uint32_t>(hamming_distance(queries.row(q), db.row(j)));
            ++bucket[dist[j] + 1];
        }
        for (std::size_t d = 1; d < bucket.size(); ++d) bucket[d] += bucket[d - 1];
        // Counting sort is stable, so ties keep ascending index order.
        auto& order = result.order[q];
        auto& sorted = result.distance[q];
        order.resize(db.rows());
        sorted.resize(db.rows());
        for (std::size_t j = 0; j < db.rows(); ++j) {
            const std::size_t pos = bucket[dist[j]]++;
            order[pos] = static_cast<std::uint32_t>(j);
            sorted[pos] = dist[j];
        }
    }
    return result;
}

/**
 * MAP over the ranking. With cutoff R, AP sums precision@r at relevant
 * ranks r <= R and divides by min(#relevant, R); without a cutoff R is the
 * full list. Queries with no relevant items score 0 and still count.
 */
inline double mean_average_precision(const RankingResult& ranking, const Relevance& relevance,
                                     std::optional<std::size_t> cutoff = std::nullopt) {
    detail::require(!cutoff || *cutoff >= 1, "mean_average_precision: cutoff must be >= 1");
    detail::require(ranking.order.size() == relevance.queries(), "mean_average_precision: query count mismatch");
    if (ranking.order.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t q = 0; q < ranking.order.size(); ++q) {
        const auto& order = ranking.order[q];
        const std::size_t depth = cutoff ? std::min(*cutoff, order.size()) : order.size();
        const std::size_t relevant = relevance.relevant_count(q);
        if (relevant == 0) continue;
        std::size_t hits = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < depth; ++r) {
            if (relevance(q, order[r])) {
                ++hits;
                sum += static_cast<double>(hits) / static_cast<double>(r + 1);
            }
        }
        const std::size_t norm = cutoff ? std::min(relevant, *cutoff) : relevant;
        total += sum / static_cast<double>(norm);
    }
    return total / static_cast<double>(ranking.order.size());
}

/// precision@k for k = 1..k_max, averaged over queries.
inline std::vector<double> topk_precision_curve(const RankingResult& ranking, const Relevance& relevance,
                                                std::size_t k_max) {
    detail::require(ranking.order.size() == relevance.queries(), "topk_precision_curve: query count mismatch");
    detail::require(k_max <= relevance.db_size(), "topk_precision_curve: k_max exceeds database size");
    std::vector<double> curve(k_max, 0.0);
    if (ranking.order.empty()) return curve;
    for (std::size_t q = 0; q < ranking.order.size(); ++q) {
        std::size_t hits = 0;
        for (std::size_t k = 0; k < k_max; ++k) {
            if (relevance(q, ranking.order[q][k])) ++hits;
            curve[k] += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
    }
    for (double& p : curve) p /= static_cast<double>(ranking.order.size());
    return curve;
}

struct RadiusPoint {
    std::size_t radius = 0;
    double precision = 0.0;
    double recall = 0.0;
};

/**
 * Hash-lookup precision/recall for radius 0..c, averaged over queries.
 * An empty retrieval set has precision 1; a query with no relevant items
 * has recall 1.
 */
inline std::vector<RadiusPoint> precision_recall_by_radius(const CodeMatrix& queries, const CodeMatrix& db,
                                                           const Relevance& relevance) {
    detail::require(queries.code_len() == db.code_len(), "precision_recall_by_radius: code lengths differ");
    detail::require(queries.rows() == relevance.queries() && db.rows() == relevance.db_size(),
                    "precision_recall_by_radius: relevance shape mismatch");
    const std::size_t c = db.code_len();
    std::vector<RadiusPoint> curve(c + 1);
    for (std::size_t r = 0; r <= c; ++r) curve[r].radius = r;
    if (queries.rows() == 0) return curve;

    std::vector<std::size_t> retrieved(c + 1);
    std::vector<std::size_t> hits(c + 1);
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        std::fill(retrieved.begin(), retrieved.end(), 0);
        std::fill(hits.begin(), hits.end(), 0);
        std::size_t relevant = 0;
        for (std::size_t j = 0; j < db.rows(); ++j) {
            const std::size_t d = hamming_distance(queries.row(q), db.row(j));
            ++retrieved[d];
            if (relevance(q, j)) {
                ++hits[d];
                ++relevant;
            }
        }
        std::size_t cum_retrieved = 0;
        std::size_t cum_hits = 0;
        for (std::size_t r = 0; r <= c; ++r) {
            cum_retrieved += retrieved[r];
            cum_hits += hits[r];
            curve[r].precision += cum_retrieved == 0 ? 1.0
                                                     : static_cast<double>(cum_hits) / static_cast<double>(cum_retrieved);
            curve[r].recall += relevant == 0 ? 1.0 : static_cast<double>(cum_hits) / static_cast<double>(relevant);
        }
    }
    for (auto& p : curve) {
        p.precision /= static_cast<double>(queries.rows());
        p.recall /= static_cast<double>(queries.rows());
    }
    return curve;
}

struct EvalOptions {
    std::optional<std::size_t> map_cutoff;
    std::size_t topk_max = 0;  // 0 disables the top-k curve
    bool radius_curve = true;
};

struct EvalReport {
    std::optional<std::size_t> map_cutoff;
    double map = 0.0;
    std::vector<double> topk;
    std::vector<RadiusPoint> radius;
};

inline EvalReport evaluate(const CodeMatrix& queries, const CodeMatrix& db, const Relevance& relevance,
                           const EvalOptions& options) {
    EvalReport report;
    report.map_cutoff = options.map_cutoff;
    const RankingResult ranking = rank_by_hamming(queries, db);
    report.map = mean_average_precision(ranking, relevance, options.map_cutoff);
    if (options.topk_max > 0) {
        report.topk = topk_precision_curve(ranking, relevance, std::min(options.topk_max, db.rows()));
    }
    if (options.radius_curve) report.radius = precision_recall_by_radius(queries, db, relevance);
    return report;
}

/// metric,param,value rows; meta_* rows record the conventions in force.
inline void write_metrics_csv(std::ostream& os, const EvalReport& report) {
    os.precision(17);
    os << "metric,param,value\n";
    os << "meta_map_cutoff,," << (report.map_cutoff ? std::to_string(*report.map_cutoff) : "none") << '\n';
    os << "meta_map_normalization,,min(relevant,cutoff)\n";
    os << "meta_empty_retrieval_precision,,1\n";
    os << "meta_no_relevant_recall,,1\n";
    os << "map," << (report.map_cutoff ? std::to_string(*report.map_cutoff) : "all") << ',' << report.map << '\n';
    for (std::size_t k = 0; k < report.topk.size(); ++k) {
        os << "precision_at_k," << (k + 1) << ',' << report.topk[k] << '\n';
    }
    for (const auto& p : report.radius) {
        os << "radius_precision," << p.radius << ',' << p.precision << '\n';
        os << "radius_recall," << p.radius << ',' << p.recall << '\n';
    }
}

inline void write_topk_csv(std::ostream& os, std::span<const double> curve) {
    os.precision(17);
    os << "k,precision\n";
    for (std::size_t k = 0; k < curve.size(); ++k) os << (k + 1) << ',' << curve[k] << '\n';
}

inline void write_pr_csv(std::ostream& os, std::span<const RadiusPoint> curve) {
    os.precision(17);
    os << "recall,precision\n";
    for (const auto& p : curve) os << p.recall << ',' << p.precision << '\n';
}

}  // namespace adsh
