#include "prh/codec.hpp"

#include <algorithm>
#include <queue>

namespace prh {

BinaryCodeSet::BinaryCodeSet(Index n_bits, Index count)
    : n_bits_(n_bits), count_(count), words_per_code_(words_for_bits(n_bits)) {
    if (n_bits < 1) throw InvalidArgument("BinaryCodeSet: n_bits must be positive");
    if (count < 0) throw InvalidArgument("BinaryCodeSet: negative count");
    words_.assign(static_cast<std::size_t>(count * words_per_code_), 0);
}

BinaryCodeSet::BinaryCodeSet(Index n_bits, Index count, std::vector<std::uint64_t> words)
    : n_bits_(n_bits), count_(count), words_per_code_(words_for_bits(n_bits)), words_(std::move(words)) {
    if (n_bits < 1) throw InvalidArgument("BinaryCodeSet: n_bits must be positive");
    if (count < 0) throw InvalidArgument("BinaryCodeSet: negative count");
    if (static_cast<Index>(words_.size()) != count * words_per_code_) {
        throw InvalidArgument("BinaryCodeSet: expected " + std::to_string(count * words_per_code_) +
                              " words, got " + std::to_string(words_.size()));
    }
    const int tail = static_cast<int>(n_bits % 64);
    if (tail != 0) {
        const std::uint64_t pad_mask = ~((std::uint64_t{1} << tail) - 1);
        for (Index i = 0; i < count; ++i) {
            if (words_[static_cast<std::size_t>((i + 1) * words_per_code_ - 1)] & pad_mask) {
                throw InvalidArgument("BinaryCodeSet: nonzero padding bits in code " + std::to_string(i));
            }
        }
    }
}

void BinaryCodeSet::set_row_from_signs(Index i, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != n_bits_) throw DimensionMismatch("set_row_from_signs", n_bits_, v.size());
    std::uint64_t* out = words_.data() + i * words_per_code_;
    std::fill(out, out + words_per_code_, 0);
    for (Index b = 0; b < n_bits_; ++b) {
        if (v(b) >= 0.0) out[b / 64] |= std::uint64_t{1} << (b % 64);
    }
}

std::vector<Neighbor> knn_hamming(std::span<const std::uint64_t> query, const BinaryCodeSet& db, Index k) {
    if (k < 1) throw InvalidArgument("knn_hamming: k must be >= 1");
    if (k > db.count()) {
        throw InvalidArgument("knn_hamming: k = " + std::to_string(k) + " exceeds database size " +
                              std::to_string(db.count()));
    }
    if (static_cast<Index>(query.size()) != db.words_per_code()) {
        throw DimensionMismatch("knn_hamming", db.words_per_code(), static_cast<Index>(query.size()));
    }
    // Max-heap on (distance, index): the top is the current worst kept neighbor.
    std::priority_queue<Neighbor> heap;
    for (Index i = 0; i < db.count(); ++i) {
        const Neighbor cand{i, hamming(query, db.row(i))};
        if (static_cast<Index>(heap.size()) < k) {
            heap.push(cand);
        } else if (cand < heap.top()) {
            heap.pop();
            heap.push(cand);
        }
    }
    std::vector<Neighbor> out(heap.size());
    for (auto it = out.rbegin(); it != out.rend(); ++it) {
        *it = heap.top();
        heap.pop();
    }
    return out;
}

IdMatrix search(const BinaryCodeSet& queries, const BinaryCodeSet& db, Index k) {
    if (queries.n_bits() != db.n_bits()) throw DimensionMismatch("search", db.n_bits(), queries.n_bits());
    IdMatrix ids(queries.count(), k);
    for (Index q = 0; q < queries.count(); ++q) {
        const auto nn = knn_hamming(queries.row(q), db, k);
        for (Index r = 0; r < k; ++r) ids(q, r) = static_cast<std::int32_t>(nn[static_cast<std::size_t>(r)].index);
    }
    return ids;
}

}  // namespace prh
