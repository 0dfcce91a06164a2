#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prh/rng.hpp"
#include "prh/transform.hpp"
#include "prh/types.hpp"

namespace prh {

/// Population mean and covariance of the training set.
struct CovarianceState {
    Eigen::VectorXd mean;
    Eigen::MatrixXd sigma;

    Index dim() const { return mean.size(); }
};

enum class LearnMode { Iso, Pcat, Rspca, Srr };

std::string to_string(LearnMode mode);
LearnMode parse_learn_mode(const std::string& name);

struct LearnerConfig {
    LearnMode mode = LearnMode::Iso;
    double lambda = 0.0;             // PCA tilt, used by Pcat only
    std::optional<int> iso_stages;   // default ceil(log2 n)
    std::optional<int> pca_stages;   // Rspca extra stages, default ceil(log2 n)
    std::uint64_t seed = 0;
    bool center = true;              // false: zero translation (meaningful for Srr)

    /// Throws InvalidArgument on lambda outside [0, 1] or negative stage counts.
    void validate() const;
    int resolved_iso_stages(Index dim) const;
    int resolved_pca_stages(Index dim) const;
};

/// sigma = (1/m) sum (x - mean)(x - mean)^T. Requires m >= 2 and finite data.
template <typename Derived>
CovarianceState estimate(const Eigen::MatrixBase<Derived>& data);

/// Column means only. Requires m >= 1 and finite data.
template <typename Derived>
Eigen::VectorXd column_mean(const Eigen::MatrixBase<Derived>& data);

/// Angle that equalizes the two variances of a 2x2 covariance.
double pair_angle_iso(double s11, double s22, double s12);
/// Angle that zeroes the covariance of a 2x2 block (principal atan2 branch).
double pair_angle_pca(double s11, double s22, double s12);
/// iso + lambda * (pca - iso), difference wrapped into (-pi/2, pi/2].
double pair_angle_tilted(double s11, double s22, double s12, double lambda);

/// Sort by variance (descending, ties by index), pair rank k with rank n-1-k,
/// tilted angle per pair. lambda = 0 is the pure isotropic stage.
RotationStage build_iso_stage(const CovarianceState& cov, double lambda);
/// Random matching from a shuffle, each pair rotated to its PCA angle.
RotationStage build_pca_stage(const CovarianceState& cov, Rng& rng);
/// Random matching with angles uniform in [0, 2 pi).
RotationStage build_random_stage(Index dim, Rng& rng);

/// sigma <- R sigma R^T, touching only the paired rows and columns.
void update_covariance(CovarianceState& cov, const RotationStage& stage, OpCounter* ops = nullptr);

/// Per-stage snapshot of the learning loop.
struct StageRecord {
    double variance_ratio = 0.0;  // max / min of diag(sigma) after the stage
    double trace = 0.0;
    OpCounter loop_ops;           // scalar ops spent updating sigma for the stage
};

struct LearnTrace {
    double initial_ratio = 0.0;
    double initial_trace = 0.0;
    std::vector<StageRecord> stages;
    Eigen::VectorXd final_variances;
};

/// Learns a transform. The data is read once, for the covariance estimate;
/// the stage loop works on CovarianceState alone. With a trace, Srr mode also
/// estimates the covariance so the trace can be filled in.
template <typename Derived>
FactoredTransform learn(const Eigen::MatrixBase<Derived>& data, const LearnerConfig& config,
                        LearnTrace* trace = nullptr);

/// Stage loop from an existing covariance estimate.
FactoredTransform learn_from_covariance(CovarianceState cov, const LearnerConfig& config,
                                        LearnTrace* trace = nullptr);

/// Srr without a covariance estimate: random stages around the given center.
FactoredTransform learn_random(Eigen::VectorXd center, const LearnerConfig& config);

double variance_ratio(const Eigen::Ref<const Eigen::VectorXd>& variances);

// -- implementation of templates --

namespace detail {
template <typename Derived>
void check_finite(const Eigen::MatrixBase<Derived>& data, const char* where) {
    for (Index r = 0; r < data.rows(); ++r) {
        for (Index c = 0; c < data.cols(); ++c) {
            if (!std::isfinite(static_cast<double>(data(r, c)))) {
                throw InvalidArgument(std::string(where) + ": non-finite entry at row " +
                                      std::to_string(r) + ", column " + std::to_string(c));
            }
        }
    }
}
}  // namespace detail

template <typename Derived>
Eigen::VectorXd column_mean(const Eigen::MatrixBase<Derived>& data) {
    if (data.rows() < 1) throw InvalidArgument("column_mean: need at least one row");
    detail::check_finite(data, "column_mean");
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.cols());
    for (Index r = 0; r < data.rows(); ++r) sum += data.row(r).transpose().template cast<double>();
    return sum / static_cast<double>(data.rows());
}

template <typename Derived>
CovarianceState estimate(const Eigen::MatrixBase<Derived>& data) {
    if (data.rows() < 2) throw InvalidArgument("estimate: need at least two samples");
    CovarianceState cov;
    cov.mean = column_mean(data);
    const Index n = data.cols();
    const double inv_m = 1.0 / static_cast<double>(data.rows());
    cov.sigma = Eigen::MatrixXd::Zero(n, n);
    constexpr Index kChunk = 4096;
    RowMatrixXd centered;
    for (Index start = 0; start < data.rows(); start += kChunk) {
        const Index len = std::min(kChunk, data.rows() - start);
        centered = data.middleRows(start, len).template cast<double>();
        centered.rowwise() -= cov.mean.transpose();
        cov.sigma.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), inv_m);
    }
    cov.sigma = cov.sigma.selfadjointView<Eigen::Lower>();
    return cov;
}

template <typename Derived>
FactoredTransform learn(const Eigen::MatrixBase<Derived>& data, const LearnerConfig& config,
                        LearnTrace* trace) {
    config.validate();
    if (data.cols() < 2) throw InvalidArgument("learn: need at least two dimensions");
    if (data.rows() < 2) throw InvalidArgument("learn: need at least two samples");
    if (config.mode == LearnMode::Srr && trace == nullptr) {
        Eigen::VectorXd center = config.center ? column_mean(data)
                                               : Eigen::VectorXd::Zero(data.cols()).eval();
        return learn_random(std::move(center), config);
    }
    return learn_from_covariance(estimate(data), config, trace);
}

}  // namespace prh
