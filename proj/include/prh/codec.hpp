#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prh/transform.hpp"
#include "prh/types.hpp"

namespace prh {

/// Packed binary codes, one row per vector. Bit b of a row is coordinate b,
/// stored LSB-first in 64-bit words; a set bit means the coordinate was >= 0.
/// Bits past n_bits in the last word of each row are always zero.
class BinaryCodeSet {
public:
    BinaryCodeSet() = default;
    BinaryCodeSet(Index n_bits, Index count);  // all-zero codes
    /// Takes ownership of packed words. Throws on size or padding violations.
    BinaryCodeSet(Index n_bits, Index count, std::vector<std::uint64_t> words);

    Index n_bits() const { return n_bits_; }
    Index count() const { return count_; }
    Index words_per_code() const { return words_per_code_; }
    std::span<const std::uint64_t> words() const { return words_; }

    std::span<const std::uint64_t> row(Index i) const {
        return {words_.data() + i * words_per_code_, static_cast<std::size_t>(words_per_code_)};
    }

    bool bit(Index i, Index b) const {
        return (row(i)[static_cast<std::size_t>(b / 64)] >> (b % 64)) & 1u;
    }

    /// Writes the sign pattern of v into row i.
    void set_row_from_signs(Index i, const Eigen::Ref<const Eigen::VectorXd>& v);

    friend bool operator==(const BinaryCodeSet&, const BinaryCodeSet&) = default;

private:
    Index n_bits_ = 0;
    Index count_ = 0;
    Index words_per_code_ = 0;
    std::vector<std::uint64_t> words_;
};

inline Index words_for_bits(Index n_bits) { return (n_bits + 63) / 64; }

/// Row i = sign pattern of apply(t, data.row(i)), with sign(0) = +1.
template <typename Derived>
BinaryCodeSet encode(const FactoredTransform& t, const Eigen::MatrixBase<Derived>& data,
                     OpCounter* ops = nullptr) {
    if (data.cols() != t.dim()) throw DimensionMismatch("encode", t.dim(), data.cols());
    BinaryCodeSet codes(t.dim(), data.rows());
    Eigen::VectorXd v(t.dim());
    for (Index r = 0; r < data.rows(); ++r) {
        v = data.row(r).transpose().template cast<double>();
        t.apply_in_place(v, ops);
        codes.set_row_from_signs(r, v);
    }
    return codes;
}

/// Popcount of a XOR b.
inline int hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
    if (a.size() != b.size()) {
        throw DimensionMismatch("hamming", static_cast<Index>(a.size()), static_cast<Index>(b.size()));
    }
    int d = 0;
    for (std::size_t w = 0; w < a.size(); ++w) d += std::popcount(a[w] ^ b[w]);
    return d;
}

struct Neighbor {
    Index index = 0;
    int distance = 0;

    friend bool operator==(const Neighbor&, const Neighbor&) = default;
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.index < b.index;
    }
};

/// Exact k nearest codes by linear scan; ascending distance, ties by index.
std::vector<Neighbor> knn_hamming(std::span<const std::uint64_t> query, const BinaryCodeSet& db, Index k);

/// knn_hamming for every query row, returned as a queries x k id matrix.
IdMatrix search(const BinaryCodeSet& queries, const BinaryCodeSet& db, Index k);

}  // namespace prh
