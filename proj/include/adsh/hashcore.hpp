#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "adsh/errors.hpp"

namespace adsh {

// Logical code entry: -1 or +1.
using Sign = std::int8_t;
using Word = std::uint64_t;

inline constexpr std::size_t kWordBits = 64;

constexpr std::size_t words_for_bits(std::size_t bits) {
    return (bits + kWordBits - 1) / kWordBits;
}

/**
 * Read-only view of one bit-packed code: bit k of word w holds code
 * position w*64 + k, set when the logical value is +1. Pad bits past
 * code_len are zero.
 */
struct CodeView {
    std::span<const Word> words;
    std::size_t code_len = 0;

    Sign operator[](std::size_t b) const {
        return ((words[b / kWordBits] >> (b % kWordBits)) & 1U) ? Sign{1} : Sign{-1};
    }
};

/// Packs a +-1 vector; any other entry is rejected.
inline std::vector<Word> pack_row(std::span<const Sign> signs) {
    std::vector<Word> out(words_for_bits(signs.size()), 0);
    for (std::size_t b = 0; b < signs.size(); ++b) {
        const Sign s = signs[b];
        if (s != 1 && s != -1) {
            throw ValidationError("pack_row: entry " + std::to_string(b) + " is " +
                                  std::to_string(int{s}) + ", expected -1 or +1");
        }
        if (s == 1) out[b / kWordBits] |= Word{1} << (b % kWordBits);
    }
    return out;
}

inline std::vector<Sign> unpack_row(CodeView code) {
    std::vector<Sign> out(code.code_len);
    for (std::size_t b = 0; b < code.code_len; ++b) out[b] = code[b];
    return out;
}

inline std::size_t hamming_distance(CodeView u, CodeView v) {
    detail::require(u.code_len == v.code_len,
                    "hamming_distance: code lengths differ (" + std::to_string(u.code_len) +
                        " vs " + std::to_string(v.code_len) + ")");
    std::size_t dist = 0;
    const std::size_t words = words_for_bits(u.code_len);
    for (std::size_t w = 0; w < words; ++w) dist += std::popcount(u.words[w] ^ v.words[w]);
    return dist;
}

/// Sum of u_b * v_b over logical +-1 entries, i.e. c - 2 * hamming distance.
inline long code_inner_product(CodeView u, CodeView v) {
    const auto dist = static_cast<long>(hamming_distance(u, v));
    return static_cast<long>(u.code_len) - 2 * dist;
}

/// sign() with sign(0) := +1. NaN is rejected; infinities are accepted.
inline Sign sign_of(double z) {
    if (std::isnan(z)) throw ValidationError("binarize: NaN entry");
    return z >= 0.0 ? Sign{1} : Sign{-1};
}

inline std::vector<Sign> binarize(std::span<const double> z) {
    std::vector<Sign> out(z.size());
    for (std::size_t b = 0; b < z.size(); ++b) out[b] = sign_of(z[b]);
    return out;
}

/**
 * Row-major n x c matrix over {-1,+1}, each row stored as whole 64-bit
 * words. A freshly constructed matrix is all -1 (all bits clear).
 *
 * Const access is safe to share across threads.
 */
class CodeMatrix {
public:
    CodeMatrix() = default;

    CodeMatrix(std::size_t rows, std::size_t code_len)
        : rows_(rows),
          code_len_(code_len),
          words_per_row_(words_for_bits(code_len)),
          data_(rows * words_per_row_, 0) {}

    /// Builds from a row-major +-1 buffer of rows*code_len entries.
    static CodeMatrix from_signs(std::size_t rows, std::size_t code_len,
                                 std::span<const Sign> signs) {
        detail::require(signs.size() == rows * code_len,
                        "CodeMatrix::from_signs: expected " + std::to_string(rows * code_len) +
                            " entries, got " + std::to_string(signs.size()));
        CodeMatrix m(rows, code_len);
        for (std::size_t i = 0; i < rows; ++i) {
            const auto packed = pack_row(signs.subspan(i * code_len, code_len));
            std::copy(packed.begin(), packed.end(), m.data_.begin() + i * m.words_per_row_);
        }
        return m;
    }

    /// Takes ownership of already-packed words. Pad bits must be zero.
    static CodeMatrix from_words(std::size_t rows, std::size_t code_len, std::vector<Word> words) {
        CodeMatrix m(rows, code_len);
        detail::require(words.size() == m.data_.size(), "CodeMatrix::from_words: wrong word count");
        m.data_ = std::move(words);
        detail::require(m.pad_bits_clear(), "CodeMatrix::from_words: nonzero pad bits");
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t code_len() const { return code_len_; }
    std::size_t words_per_row() const { return words_per_row_; }
    std::span<const Word> words() const { return data_; }

    CodeView row(std::size_t i) const {
        return {std::span<const Word>(data_).subspan(i * words_per_row_, words_per_row_), code_len_};
    }

    Sign get(std::size_t i, std::size_t b) const { return row(i)[b]; }

    void set(std::size_t i, std::size_t b, Sign s) {
        Word& w = data_[i * words_per_row_ + b / kWordBits];
        const Word mask = Word{1} << (b % kWordBits);
        if (s > 0) {
            w |= mask;
        } else {
            w &= ~mask;
        }
    }

    std::vector<Sign> unpack(std::size_t i) const { return unpack_row(row(i)); }

    bool pad_bits_clear() const {
        const std::size_t used = code_len_ % kWordBits;
        if (used == 0 || words_per_row_ == 0) return true;
        const Word pad_mask = ~((Word{1} << used) - 1);
        for (std::size_t i = 0; i < rows_; ++i) {
            if (data_[(i + 1) * words_per_row_ - 1] & pad_mask) return false;
        }
        return true;
    }

    bool operator==(const CodeMatrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t code_len_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<Word> data_;
};

}  // namespace adsh
