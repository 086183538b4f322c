#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adsh/encoder.hpp"
#include "adsh/errors.hpp"
#include "adsh/hashcore.hpp"
#include "adsh/linalg.hpp"
#include "adsh/simgraph.hpp"

namespace adsh {

// ---------------------------------------------------------------------------
// Synthetic data and splits
// ---------------------------------------------------------------------------

struct LabeledFeatures {
    FeatureMatrix features;
    LabelMatrix labels;
};

/**
 * num_clusters Gaussian blobs: centers uniform in [-1,1]^d, points are
 * center + N(0, sigma^2) per coordinate, label = cluster id. Points are
 * emitted cluster by cluster.
 */
inline LabeledFeatures gen_synthetic_clusters(std::size_t num_clusters, std::size_t per_cluster, std::size_t d,
                                              double sigma, std::uint64_t seed) {
    detail::require(num_clusters >= 1 && per_cluster >= 1 && d >= 1, "gen_synthetic_clusters: counts must be >= 1");
    detail::require(sigma >= 0.0, "gen_synthetic_clusters: sigma must be >= 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> center_dist(-1.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    Matrix centers(num_clusters, d);
    for (std::size_t k = 0; k < num_clusters; ++k) {
        for (std::size_t f = 0; f < d; ++f) centers(k, f) = center_dist(rng);
    }
    LabeledFeatures out;
    out.features.resize(num_clusters * per_cluster, d);
    std::vector<LabelId> labels;
    labels.reserve(num_clusters * per_cluster);
    for (std::size_t k = 0; k < num_clusters; ++k) {
        for (std::size_t p = 0; p < per_cluster; ++p) {
            const std::size_t row = k * per_cluster + p;
            for (std::size_t f = 0; f < d; ++f) out.features(row, f) = centers(k, f) + sigma * noise(rng);
            labels.push_back(static_cast<LabelId>(k));
        }
    }
    out.labels = LabelMatrix::from_single(labels);
    return out;
}

struct DatasetSplit {
    std::vector<std::size_t> database;
    std::vector<std::size_t> query;
    std::vector<std::size_t> validation;
};

/// Disjoint uniform query and validation samples; the rest (in ascending
/// order) is the database.
inline DatasetSplit split(std::size_t n, std::size_t query_count, std::size_t val_count, std::uint64_t seed) {
    detail::require(query_count + val_count < n, "split: query + validation counts (" +
                                                     std::to_string(query_count + val_count) +
                                                     ") must be < n (" + std::to_string(n) + ")");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    DatasetSplit out;
    out.query.assign(perm.begin(), perm.begin() + query_count);
    out.validation.assign(perm.begin() + query_count, perm.begin() + query_count + val_count);
    out.database.assign(perm.begin() + query_count + val_count, perm.end());
    std::sort(out.database.begin(), out.database.end());
    return out;
}

inline LabeledFeatures select(const LabeledFeatures& data, std::span<const std::size_t> rows) {
    return {select_rows(data.features, rows), data.labels.select(rows)};
}

// ---------------------------------------------------------------------------
// Binary formats (little-endian, 8-byte magic whose last char is the version)
// ---------------------------------------------------------------------------

inline constexpr std::string_view kFeatureMagic = "ADSHFTR1";
inline constexpr std::string_view kLabelMagic = "ADSHLBL1";
inline constexpr std::string_view kCodeMagic = "ADSHCOD1";
inline constexpr std::string_view kModelMagic = "ADSHMDL1";

using Bytes = std::vector<std::uint8_t>;

namespace detail {

template <class T>
T to_little_endian(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto raw = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(value);
        std::reverse(raw.begin(), raw.end());
        return std::bit_cast<T>(raw);
    }
    return value;
}

class ByteWriter {
public:
    void magic(std::string_view m) { out_.insert(out_.end(), m.begin(), m.end()); }

    template <class T>
    void put(T value) {
        const T le = to_little_endian(value);
        const auto* p = reinterpret_cast<const std::uint8_t*>(&le);
        out_.insert(out_.end(), p, p + sizeof(T));
    }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

    void magic(std::string_view expected) {
        need(expected.size(), "magic");
        const std::string_view got(reinterpret_cast<const char*>(data_.data()), expected.size());
        const auto prefix = expected.substr(0, expected.size() - 1);
        if (got.substr(0, prefix.size()) != prefix) {
            throw ParseError("bad magic: expected \"" + std::string(expected) + "\"", 0);
        }
        if (got.back() != expected.back()) {
            throw ParseError("unsupported format version '" + std::string(1, got.back()) + "' for " +
                                 std::string(prefix),
                             expected.size() - 1);
        }
        pos_ += expected.size();
    }

    template <class T>
    T get(const char* field) {
        need(sizeof(T), field);
        T value;
        std::memcpy(&value, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little_endian(value);
    }

    /// Fails early with the full expected length when the payload is short.
    void expect_remaining(std::uint64_t bytes, const char* what) {
        if (bytes > data_.size() - pos_) {
            throw ParseError(std::string("truncated ") + what + ": expected " + std::to_string(pos_ + bytes) +
                                 " bytes total, file has " + std::to_string(data_.size()),
                             data_.size());
        }
    }

    void finish() const {
        if (pos_ != data_.size()) {
            throw ParseError("trailing data: " + std::to_string(data_.size() - pos_) + " unexpected bytes", pos_);
        }
    }

    std::size_t offset() const { return pos_; }

private:
    void need(std::size_t bytes, const char* field) const {
        if (bytes > data_.size() - pos_) {
            throw ParseError(std::string("truncated while reading ") + field + ": expected " +
                                 std::to_string(pos_ + bytes) + " bytes, file has " + std::to_string(data_.size()),
                             pos_);
        }
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline std::uint64_t checked_product(std::uint64_t a, std::uint64_t b, std::size_t offset) {
    if (a != 0 && b > UINT64_MAX / a) throw ParseError("dimension overflow", offset);
    return a * b;
}

}  // namespace detail

inline Bytes encode_features(const FeatureMatrix& x) {
    detail::ByteWriter w;
    w.magic(kFeatureMagic);
    w.put<std::uint64_t>(x.rows());
    w.put<std::uint64_t>(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index f = 0; f < x.cols(); ++f) w.put<double>(x(i, f));
    }
    return w.take();
}

inline FeatureMatrix decode_features(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    r.magic(kFeatureMagic);
    const auto n = r.get<std::uint64_t>("row count");
    const std::size_t dim_offset = r.offset();
    const auto d = r.get<std::uint64_t>("column count");
    if (d == 0) throw ParseError("feature dimension must be >= 1", dim_offset);
    r.expect_remaining(detail::checked_product(detail::checked_product(n, d, dim_offset), 8, dim_offset),
                       "feature payload");
    FeatureMatrix x(n, d);
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint64_t f = 0; f < d; ++f) x(i, f) = r.get<double>("feature value");
    }
    r.finish();
    return x;
}

inline Bytes encode_labels(const LabelMatrix& labels) {
    detail::ByteWriter w;
    w.magic(kLabelMagic);
    w.put<std::uint64_t>(labels.rows());
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const auto row = labels.row(i);
        w.put<std::uint32_t>(static_cast<std::uint32_t>(row.size()));
        for (LabelId id : row) w.put<std::uint32_t>(id);
    }
    return w.take();
}

inline LabelMatrix decode_labels(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    r.magic(kLabelMagic);
    const auto n = r.get<std::uint64_t>("row count");
    r.expect_remaining(detail::checked_product(n, 4, r.offset()), "label rows");
    std::vector<std::vector<LabelId>> rows(n);
    for (auto& row : rows) {
        const std::size_t at = r.offset();
        const auto count = r.get<std::uint32_t>("label count");
        if (count == 0) throw ParseError("label row with zero labels", at);
        row.resize(count);
        for (auto& id : row) id = r.get<std::uint32_t>("label id");
    }
    r.finish();
    return LabelMatrix(std::move(rows));
}

inline Bytes encode_codes(const CodeMatrix& codes) {
    detail::ByteWriter w;
    w.magic(kCodeMagic);
    w.put<std::uint64_t>(codes.rows());
    w.put<std::uint32_t>(static_cast<std::uint32_t>(codes.code_len()));
    for (Word word : codes.words()) w.put<std::uint64_t>(word);
    return w.take();
}

inline CodeMatrix decode_codes(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    r.magic(kCodeMagic);
    const auto n = r.get<std::uint64_t>("row count");
    const std::size_t c_offset = r.offset();
    const auto c = r.get<std::uint32_t>("code length");
    if (c == 0) throw ParseError("code length must be >= 1", c_offset);
    const std::uint64_t words = detail::checked_product(n, words_for_bits(c), c_offset);
    r.expect_remaining(detail::checked_product(words, 8, c_offset), "code payload");
    const std::size_t payload_offset = r.offset();
    std::vector<Word> data(words);
    for (auto& word : data) word = r.get<std::uint64_t>("code word");
    r.finish();
    try {
        return CodeMatrix::from_words(n, c, std::move(data));
    } catch (const ValidationError& e) {
        throw ParseError(e.what(), payload_offset);
    }
}

inline Bytes encode_model(const EncoderModel& model) {
    detail::ByteWriter w;
    w.magic(kModelMagic);
    w.put<std::uint64_t>(model.layers().size());
    for (std::size_t d : model.dims()) w.put<std::uint64_t>(d);
    for (const auto& layer : model.layers()) {
        for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) w.put<double>(layer.weight(r, c));
        }
        for (Eigen::Index r = 0; r < layer.bias.size(); ++r) w.put<double>(layer.bias(r));
    }
    return w.take();
}

inline EncoderModel decode_model(std::span<const std::uint8_t> bytes) {
    detail::ByteReader r(bytes);
    r.magic(kModelMagic);
    const std::size_t count_offset = r.offset();
    const auto layers = r.get<std::uint64_t>("layer count");
    if (layers == 0 || layers > 1024) throw ParseError("implausible layer count " + std::to_string(layers), count_offset);
    std::vector<std::size_t> dims(layers + 1);
    std::uint64_t params = 0;
    for (auto& d : dims) {
        const std::size_t at = r.offset();
        d = r.get<std::uint64_t>("layer dim");
        if (d == 0) throw ParseError("layer dimension must be >= 1", at);
    }
    for (std::size_t l = 0; l < layers; ++l) {
        params += detail::checked_product(dims[l], dims[l + 1], r.offset()) + dims[l + 1];
    }
    r.expect_remaining(detail::checked_product(params, 8, r.offset()), "model parameters");
    EncoderModel model(dims);
    for (auto& layer : model.layers()) {
        for (Eigen::Index row = 0; row < layer.weight.rows(); ++row) {
            for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(row, c) = r.get<double>("weight");
        }
        for (Eigen::Index row = 0; row < layer.bias.size(); ++row) layer.bias(row) = r.get<double>("bias");
    }
    r.finish();
    return model;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ValidationError("write failed for " + path.string());
}

namespace detail {

template <class Decode>
auto read_with_context(const std::filesystem::path& path, Decode decode) {
    const Bytes bytes = read_file(path);
    try {
        return decode(bytes);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what(), e.offset());
    }
}

}  // namespace detail

inline void write_features(const std::filesystem::path& p, const FeatureMatrix& x) { write_file(p, encode_features(x)); }
inline void write_labels(const std::filesystem::path& p, const LabelMatrix& l) { write_file(p, encode_labels(l)); }
inline void write_codes(const std::filesystem::path& p, const CodeMatrix& c) { write_file(p, encode_codes(c)); }
inline void write_model(const std::filesystem::path& p, const EncoderModel& m) { write_file(p, encode_model(m)); }

inline FeatureMatrix read_features(const std::filesystem::path& p) {
    return detail::read_with_context(p, [](const Bytes& b) { return decode_features(b); });
}
inline LabelMatrix read_labels(const std::filesystem::path& p) {
    return detail::read_with_context(p, [](const Bytes& b) { return decode_labels(b); });
}
inline CodeMatrix read_codes(const std::filesystem::path& p) {
    return detail::read_with_context(p, [](const Bytes& b) { return decode_codes(b); });
}
inline EncoderModel read_model(const std::filesystem::path& p) {
    return detail::read_with_context(p, [](const Bytes& b) { return decode_model(b); });
}

// ---------------------------------------------------------------------------
// CSV interop: features as comma-separated rows; labels as one line per
// point with ids separated by spaces or semicolons.
// ---------------------------------------------------------------------------

inline FeatureMatrix parse_features_csv(std::istream& in) {
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("features csv: bad number \"" + cell + "\"", line_start);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError("features csv: row has " + std::to_string(row.size()) + " columns, expected " +
                                 std::to_string(rows.front().size()),
                             line_start);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("features csv: no rows", 0);
    FeatureMatrix x(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t f = 0; f < rows[i].size(); ++f) x(i, f) = rows[i][f];
    }
    return x;
}

inline LabelMatrix parse_labels_csv(std::istream& in) {
    std::vector<std::vector<LabelId>> rows;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        const std::size_t line_start = offset;
        offset += line.size() + 1;
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ';', ' ');
        std::stringstream ss(line);
        std::vector<LabelId> row;
        long long id = 0;
        while (ss >> id) {
            if (id < 0 || id > UINT32_MAX) throw ParseError("labels csv: label id out of range", line_start);
            row.push_back(static_cast<LabelId>(id));
        }
        if (!ss.eof()) throw ParseError("labels csv: malformed line \"" + line + "\"", line_start);
        if (row.empty()) throw ParseError("labels csv: row without labels", line_start);
        rows.push_back(std::move(row));
    }
    return LabelMatrix(std::move(rows));
}

inline void write_features_csv(std::ostream& out, const FeatureMatrix& x) {
    out.precision(17);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index f = 0; f < x.cols(); ++f) out << (f ? "," : "") << x(i, f);
        out << '\n';
    }
}

inline void write_labels_csv(std::ostream& out, const LabelMatrix& labels) {
    for (std::size_t i = 0; i < labels.rows(); ++i) {
        const auto row = labels.row(i);
        for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " " : "") << row[k];
        out << '\n';
    }
}

}  // namespace adsh
