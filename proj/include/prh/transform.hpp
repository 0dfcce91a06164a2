#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prh/types.hpp"

namespace prh {

/// One 2-D rotation acting on coordinates (first, second):
///   first'  = cos(angle) * first - sin(angle) * second
///   second' = sin(angle) * first + cos(angle) * second
struct PairRotation {
    Index first = 0;
    Index second = 0;
    double angle = 0.0;

    friend bool operator==(const PairRotation&, const PairRotation&) = default;
};

/// A perfect (or, for odd dim, near-perfect) matching of coordinates, each
/// matched pair carrying its own rotation angle. The sorting permutation of a
/// basic rotation is folded into the pair indices; coordinates keep their
/// positions, so no permutation is ever materialized.
class RotationStage {
public:
    /// Throws InvalidArgument unless the pairs are disjoint, in range, cover
    /// floor(dim/2) pairs and carry finite angles.
    RotationStage(Index dim, std::vector<PairRotation> pairs);

    Index dim() const { return dim_; }
    std::span<const PairRotation> pairs() const { return pairs_; }
    std::size_t size() const { return pairs_.size(); }

    /// Rotates v in place. Exactly 4 multiplies and 2 adds per pair.
    template <typename Derived>
    void rotate(Eigen::MatrixBase<Derived>& v) const {
        for (std::size_t p = 0; p < pairs_.size(); ++p) {
            const Index i = pairs_[p].first;
            const Index j = pairs_[p].second;
            const double a = v(i);
            const double b = v(j);
            v(i) = cos_[p] * a - sin_[p] * b;
            v(j) = sin_[p] * a + cos_[p] * b;
        }
    }

    double cos(std::size_t p) const { return cos_[p]; }
    double sin(std::size_t p) const { return sin_[p]; }

    friend bool operator==(const RotationStage& a, const RotationStage& b) {
        return a.dim_ == b.dim_ && a.pairs_ == b.pairs_;
    }

private:
    Index dim_;
    std::vector<PairRotation> pairs_;
    std::vector<double> cos_;
    std::vector<double> sin_;
};

/// x -> A (x - center), with A the ordered product of the stages. Immutable.
class FactoredTransform {
public:
    /// Identity transform with zero center.
    explicit FactoredTransform(Index dim);
    FactoredTransform(Eigen::VectorXd center, std::vector<RotationStage> stages);

    Index dim() const { return center_.size(); }
    const Eigen::VectorXd& center() const { return center_; }
    const std::vector<RotationStage>& stages() const { return stages_; }
    std::size_t total_pairs() const;

    /// Determinant sign of the dense form. Every pair block is a proper
    /// rotation, so this is +1 for any transform in this representation; it is
    /// recorded rather than normalized.
    int parity() const;

    /// Applies to one vector in place (after centering). Counts ops if asked.
    template <typename Derived>
    void apply_in_place(Eigen::MatrixBase<Derived>& v, OpCounter* ops = nullptr) const {
        v -= center_;
        for (const auto& stage : stages_) stage.rotate(v);
        if (ops) {
            const auto pairs = static_cast<std::uint64_t>(total_pairs());
            ops->subtractions += static_cast<std::uint64_t>(dim());
            ops->multiplies += 4 * pairs;
            ops->additions += 2 * pairs;
        }
    }

    friend bool operator==(const FactoredTransform& a, const FactoredTransform& b) {
        return a.center_ == b.center_ && a.stages_ == b.stages_;
    }

private:
    Eigen::VectorXd center_;
    std::vector<RotationStage> stages_;
};

Eigen::VectorXd apply_stage(const RotationStage& stage, const Eigen::Ref<const Eigen::VectorXd>& v);

Eigen::VectorXd apply(const FactoredTransform& t, const Eigen::Ref<const Eigen::VectorXd>& v,
                      OpCounter* ops = nullptr);

/// Applies the transform to every row of data, in double precision.
template <typename Derived>
RowMatrixXd apply_rows(const FactoredTransform& t, const Eigen::MatrixBase<Derived>& data,
                       OpCounter* ops = nullptr) {
    if (data.cols() != t.dim()) throw DimensionMismatch("apply_rows", t.dim(), data.cols());
    RowMatrixXd out = data.template cast<double>();
    Eigen::VectorXd row(t.dim());
    for (Index r = 0; r < out.rows(); ++r) {
        row = out.row(r).transpose();
        t.apply_in_place(row, ops);
        out.row(r) = row.transpose();
    }
    return out;
}

inline constexpr Index kDefaultDenseCap = 4096;

/// Dense n x n matrix of one stage.
Eigen::MatrixXd stage_to_dense(const RotationStage& stage);

/// Dense A with apply(t, v) == A (v - center). Throws if dim > cap.
Eigen::MatrixXd to_dense(const FactoredTransform& t, Index cap = kDefaultDenseCap);

/// Encoding cost of a transform, per vector.
struct TransformCost {
    std::uint64_t fill_ins = 0;    // nonzeros summed over the stage matrices: 2 per row of a pair block
    std::uint64_t multiplies = 0;  // 4 per pair
    std::uint64_t additions = 0;   // 2 per pair

    friend bool operator==(const TransformCost&, const TransformCost&) = default;
};

TransformCost multiply_count(const FactoredTransform& t);

/// ceil(log2(n)) for n >= 1.
int ceil_log2(Index n);

}  // namespace prh
