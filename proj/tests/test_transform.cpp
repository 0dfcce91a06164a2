#include <cmath>
#include <numbers>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prh/learn.hpp"
#include "prh/rng.hpp"
#include "prh/transform.hpp"

using namespace prh;

namespace {

constexpr double kPi = std::numbers::pi;

FactoredTransform random_transform(Index dim, int n_stages, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<RotationStage> stages;
    for (int s = 0; s < n_stages; ++s) stages.push_back(build_random_stage(dim, rng));
    Eigen::VectorXd center(dim);
    for (Index i = 0; i < dim; ++i) center(i) = rng.normal();
    return FactoredTransform(center, std::move(stages));
}

Eigen::VectorXd random_vector(Index dim, Rng& rng) {
    Eigen::VectorXd v(dim);
    for (Index i = 0; i < dim; ++i) v(i) = 3.0 * rng.normal();
    return v;
}

}  // namespace

TEST(ApplyStage, QuarterTurnOfUnitAxis) {
    const RotationStage stage(2, {{0, 1, kPi / 4}});
    const Eigen::VectorXd out = apply_stage(stage, Eigen::Vector2d(1, 0));
    EXPECT_NEAR(out(0), std::sqrt(2.0) / 2, 1e-15);
    EXPECT_NEAR(out(1), std::sqrt(2.0) / 2, 1e-15);
}

TEST(ApplyStage, ZeroAngleIsIdentity) {
    const RotationStage stage(2, {{0, 1, 0.0}});
    const Eigen::Vector2d v(3.25, -7.5);
    EXPECT_EQ(apply_stage(stage, v), Eigen::VectorXd(v));
}

TEST(ApplyStage, TwoPairsMatchDenseOracle) {
    const std::vector<PairRotation> pairs{{0, 3, kPi / 4}, {1, 2, kPi / 4}};
    const RotationStage stage(4, pairs);
    const Eigen::Vector4d v(2, 0, 0, 0);
    const Eigen::VectorXd expected = oracle::givens(4, pairs) * v;
    const Eigen::VectorXd out = apply_stage(stage, v);
    EXPECT_NEAR(out(0), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(out(3), std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(out(1), 0.0, 1e-15);
    EXPECT_NEAR(out(2), 0.0, 1e-15);
    EXPECT_LE((out - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(ApplyStage, RejectsDimensionMismatch) {
    const RotationStage stage(2, {{0, 1, 0.3}});
    EXPECT_THROW(apply_stage(stage, Eigen::Vector3d(1, 2, 3)), DimensionMismatch);
}

TEST(RotationStage, RejectsBadMatchings) {
    EXPECT_THROW(RotationStage(4, {{0, 1, 0.1}, {1, 2, 0.1}}), InvalidArgument);   // overlap
    EXPECT_THROW(RotationStage(4, {{0, 1, 0.1}}), InvalidArgument);                // too few pairs
    EXPECT_THROW(RotationStage(4, {{0, 1, 0.1}, {2, 4, 0.1}}), InvalidArgument);   // out of range
    EXPECT_THROW(RotationStage(4, {{0, 0, 0.1}, {2, 3, 0.1}}), InvalidArgument);   // self pair
    EXPECT_THROW(RotationStage(2, {{0, 1, std::nan("")}}), InvalidArgument);
    EXPECT_THROW(RotationStage(2, {{0, 1, INFINITY}}), InvalidArgument);
    EXPECT_NO_THROW(RotationStage(3, {{2, 0, 0.1}}));
}

TEST(Apply, EmptyStagesIsIdentity) {
    const FactoredTransform t(5);
    Eigen::VectorXd v(5);
    v << 1, -2, 3, -4, 5;
    EXPECT_EQ(apply(t, v), v);
}

TEST(Apply, CenterMapsToOrigin) {
    std::vector<RotationStage> stages{RotationStage(2, {{0, 1, kPi / 4}})};
    const FactoredTransform t(Eigen::Vector2d(1, 1), std::move(stages));
    const Eigen::VectorXd out = apply(t, Eigen::Vector2d(1, 1));
    EXPECT_EQ(out(0), 0.0);
    EXPECT_EQ(out(1), 0.0);
}

TEST(Apply, CountsOperations) {
    const FactoredTransform t = random_transform(10, 3, 4);
    OpCounter ops;
    apply(t, Eigen::VectorXd::Ones(10), &ops);
    EXPECT_EQ(ops.multiplies, 4u * 15u);
    EXPECT_EQ(ops.additions, 2u * 15u);
    EXPECT_EQ(ops.subtractions, 10u);
}

TEST(ToDense, SingleStageIsRotationBlock) {
    const double theta = 0.7;
    const FactoredTransform t(Eigen::Vector2d::Zero(), {RotationStage(2, {{0, 1, theta}})});
    const Eigen::MatrixXd a = to_dense(t);
    EXPECT_NEAR(a(0, 0), std::cos(theta), 1e-15);
    EXPECT_NEAR(a(0, 1), -std::sin(theta), 1e-15);
    EXPECT_NEAR(a(1, 0), std::sin(theta), 1e-15);
    EXPECT_NEAR(a(1, 1), std::cos(theta), 1e-15);
}

TEST(ToDense, EmptyIsIdentity) {
    EXPECT_EQ(to_dense(FactoredTransform(6)), Eigen::MatrixXd::Identity(6, 6));
}

TEST(ToDense, TwoStagesComposeAsProduct) {
    Rng rng(9);
    const RotationStage s1 = build_random_stage(7, rng);
    const RotationStage s2 = build_random_stage(7, rng);
    const FactoredTransform both(Eigen::VectorXd::Zero(7), {s1, s2});
    const Eigen::MatrixXd d1 = stage_to_dense(s1);
    const Eigen::MatrixXd d2 = stage_to_dense(s2);
    const Eigen::MatrixXd a = to_dense(both);
    EXPECT_LE((a - d2 * d1).cwiseAbs().maxCoeff(), 1e-14);
    // associativity against an identity third factor
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(7, 7);
    EXPECT_LE((a - (d2 * (d1 * id))).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(ToDense, RejectsDimAboveCap) {
    EXPECT_THROW(to_dense(FactoredTransform(10), 8), InvalidArgument);
    EXPECT_NO_THROW(to_dense(FactoredTransform(8), 8));
}

TEST(MultiplyCount, FullStagesAtDim128) {
    const FactoredTransform t = random_transform(128, 7, 1);
    const TransformCost cost = multiply_count(t);
    EXPECT_EQ(cost.fill_ins, 1792u);
    EXPECT_EQ(cost.multiplies, 1792u);
    EXPECT_EQ(cost.additions, 896u);
}

TEST(MultiplyCount, EmptyTransformIsFree) {
    EXPECT_EQ(multiply_count(FactoredTransform(16)).fill_ins, 0u);
}

TEST(MultiplyCount, MatchesNonzerosOfStageMatrices) {
    const FactoredTransform t = random_transform(8, 3, 2);
    std::uint64_t nonzeros = 0;
    for (const auto& stage : t.stages()) {
        nonzeros += static_cast<std::uint64_t>((stage_to_dense(stage).array() != 0.0).count());
    }
    EXPECT_EQ(nonzeros, 48u);
    EXPECT_EQ(multiply_count(t).fill_ins, nonzeros);
}

TEST(CeilLog2, SmallValues) {
    EXPECT_EQ(ceil_log2(1), 0);
    EXPECT_EQ(ceil_log2(2), 1);
    EXPECT_EQ(ceil_log2(100), 7);
    EXPECT_EQ(ceil_log2(128), 7);
    EXPECT_EQ(ceil_log2(129), 8);
}

class TransformProperties : public ::testing::TestWithParam<Index> {};

TEST_P(TransformProperties, OrthogonalNormPreservingDenseEquivalent) {
    const Index dim = GetParam();
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const FactoredTransform t = random_transform(dim, ceil_log2(dim) + 1, 100 * seed + dim);
        const Eigen::MatrixXd a = to_dense(t);
        const Eigen::MatrixXd ref = oracle::dense(t);
        EXPECT_LE((a - ref).cwiseAbs().maxCoeff(), 1e-12);
        const Eigen::MatrixXd gram = a * a.transpose() - Eigen::MatrixXd::Identity(dim, dim);
        EXPECT_LE(gram.cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_NEAR(a.determinant(), 1.0, 1e-9);
        EXPECT_EQ(t.parity(), 1);

        Rng rng(seed + 17);
        for (int k = 0; k < 5; ++k) {
            const Eigen::VectorXd v = random_vector(dim, rng);
            const Eigen::VectorXd out = apply(t, v);
            const double norm = (v - t.center()).norm();
            EXPECT_LE(std::abs(out.norm() - norm), 1e-9 * norm);
            const Eigen::VectorXd dense = ref * (v - t.center());
            EXPECT_LE((out - dense).norm(), 1e-9 * dense.norm());
        }
    }
}

INSTANTIATE_TEST_SUITE_P(Dims, TransformProperties, ::testing::Values(2, 3, 8, 17, 64, 100, 256, 512));
