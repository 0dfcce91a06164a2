#include "prh/transform.hpp"

#include <cmath>
#include <numeric>

namespace prh {

RotationStage::RotationStage(Index dim, std::vector<PairRotation> pairs)
    : dim_(dim), pairs_(std::move(pairs)) {
    if (dim_ < 1) throw InvalidArgument("RotationStage: dim must be positive");
    if (static_cast<Index>(pairs_.size()) != dim_ / 2) {
        throw InvalidArgument("RotationStage: expected " + std::to_string(dim_ / 2) +
                              " pairs for dim " + std::to_string(dim_) + ", got " +
                              std::to_string(pairs_.size()));
    }
    std::vector<bool> used(static_cast<std::size_t>(dim_), false);
    cos_.reserve(pairs_.size());
    sin_.reserve(pairs_.size());
    for (const auto& p : pairs_) {
        for (Index idx : {p.first, p.second}) {
            if (idx < 0 || idx >= dim_) {
                throw InvalidArgument("RotationStage: index " + std::to_string(idx) +
                                      " out of range for dim " + std::to_string(dim_));
            }
            if (used[static_cast<std::size_t>(idx)]) {
                throw InvalidArgument("RotationStage: index " + std::to_string(idx) +
                                      " appears in more than one pair");
            }
            used[static_cast<std::size_t>(idx)] = true;
        }
        if (!std::isfinite(p.angle)) throw InvalidArgument("RotationStage: non-finite angle");
        cos_.push_back(std::cos(p.angle));
        sin_.push_back(std::sin(p.angle));
    }
}

FactoredTransform::FactoredTransform(Index dim) : center_(Eigen::VectorXd::Zero(dim)) {
    if (dim < 1) throw InvalidArgument("FactoredTransform: dim must be positive");
}

FactoredTransform::FactoredTransform(Eigen::VectorXd center, std::vector<RotationStage> stages)
    : center_(std::move(center)), stages_(std::move(stages)) {
    if (center_.size() < 1) throw InvalidArgument("FactoredTransform: dim must be positive");
    if (!center_.allFinite()) throw InvalidArgument("FactoredTransform: non-finite center");
    for (const auto& s : stages_) {
        if (s.dim() != center_.size()) {
            throw DimensionMismatch("FactoredTransform stage", center_.size(), s.dim());
        }
    }
}

std::size_t FactoredTransform::total_pairs() const {
    return std::accumulate(stages_.begin(), stages_.end(), std::size_t{0},
                           [](std::size_t acc, const RotationStage& s) { return acc + s.size(); });
}

int FactoredTransform::parity() const {
    // det of a 2x2 rotation block is cos^2 + sin^2 = 1; pass-through rows add a 1.
    return 1;
}

Eigen::VectorXd apply_stage(const RotationStage& stage, const Eigen::Ref<const Eigen::VectorXd>& v) {
    if (v.size() != stage.dim()) throw DimensionMismatch("apply_stage", stage.dim(), v.size());
    Eigen::VectorXd out = v;
    stage.rotate(out);
    return out;
}

Eigen::VectorXd apply(const FactoredTransform& t, const Eigen::Ref<const Eigen::VectorXd>& v,
                      OpCounter* ops) {
    if (v.size() != t.dim()) throw DimensionMismatch("apply", t.dim(), v.size());
    Eigen::VectorXd out = v;
    t.apply_in_place(out, ops);
    return out;
}

Eigen::MatrixXd stage_to_dense(const RotationStage& stage) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(stage.dim(), stage.dim());
    for (std::size_t p = 0; p < stage.size(); ++p) {
        const auto& pr = stage.pairs()[p];
        m(pr.first, pr.first) = stage.cos(p);
        m(pr.first, pr.second) = -stage.sin(p);
        m(pr.second, pr.first) = stage.sin(p);
        m(pr.second, pr.second) = stage.cos(p);
    }
    return m;
}

Eigen::MatrixXd to_dense(const FactoredTransform& t, Index cap) {
    if (t.dim() > cap) {
        throw InvalidArgument("to_dense: dim " + std::to_string(t.dim()) + " exceeds cap " +
                              std::to_string(cap));
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(t.dim(), t.dim());
    // Later stages multiply from the left; rotating each column of the running
    // product is the same as a left multiplication by the stage matrix.
    for (const auto& stage : t.stages()) {
        for (Index c = 0; c < a.cols(); ++c) {
            auto col = a.col(c);
            stage.rotate(col);
        }
    }
    return a;
}

TransformCost multiply_count(const FactoredTransform& t) {
    const auto pairs = static_cast<std::uint64_t>(t.total_pairs());
    return {.fill_ins = 4 * pairs, .multiplies = 4 * pairs, .additions = 2 * pairs};
}

int ceil_log2(Index n) {
    if (n < 1) throw InvalidArgument("ceil_log2: n must be positive");
    int k = 0;
    while ((Index{1} << k) < n) ++k;
    return k;
}

}  // namespace prh
