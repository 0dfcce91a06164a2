#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prh/transform.hpp"
#include "prh/types.hpp"

// Closed-form quantization error and code entropy for gaussian data, plus the
// empirical and Monte-Carlo counterparts used to check them. Entropies are in
// nats. Quantization targets are the corners of {-1, +1}^n.

namespace prh {

/// 2-D covariance by eigenvalues and major-axis angle theta from the x1 axis.
struct EigenAngleParam {
    double lambda1 = 1.0;  // >= lambda2
    double lambda2 = 1.0;  // > 0
    double theta = 0.0;    // [0, pi/2]

    void validate() const;
};

struct Cov2D {
    double s11 = 0.0;
    double s22 = 0.0;
    double s12 = 0.0;

    void validate() const;
};

Cov2D cov_from_eigen(const EigenAngleParam& p);

/// 2 + tr(Sigma) - 2 sqrt(2/pi) (sqrt(s11) + sqrt(s22)).
double qerr_gauss2d(const Cov2D& c);

/// n + sum(var) - 2 sqrt(2/pi) sum(sqrt(var)), from the per-coordinate variances.
double qerr_gauss_nd(std::span<const double> variances);

/// sqrt(l1/l2) - sqrt(l2/l1): the largest correlation a rotation can produce.
double gamma(double lambda1, double lambda2);

struct CellProbabilities {
    double p11 = 0.25;   // P(code = (+1, +1)) = P(code = (-1, -1))
    double p_neg = 0.25; // P(code = (-1, +1)) = P(code = (+1, -1))
};

/// theta in [0, pi/2]. gamma * sin(2 theta) == 0 gives the independent case 1/4.
CellProbabilities cell_probabilities(double gamma, double theta);

/// Entropy of the 2-bit code, 0 ln 0 taken as 0.
double entropy2d(double gamma, double theta);

/// Mean squared distance of transformed rows to their sign codes (sign(0) = +1).
template <typename Derived>
double empirical_qerr(const Eigen::MatrixBase<Derived>& data, const FactoredTransform& t) {
    if (data.cols() != t.dim()) throw DimensionMismatch("empirical_qerr", t.dim(), data.cols());
    if (data.rows() < 1) throw InvalidArgument("empirical_qerr: empty data");
    Eigen::VectorXd v(t.dim());
    double total = 0.0;
    for (Index r = 0; r < data.rows(); ++r) {
        v = data.row(r).transpose().template cast<double>();
        t.apply_in_place(v);
        for (Index k = 0; k < v.size(); ++k) {
            const double d = v(k) - (v(k) >= 0.0 ? 1.0 : -1.0);
            total += d * d;
        }
    }
    return total / static_cast<double>(data.rows());
}

struct McEstimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Monte-Carlo mean squared distance to the nearest {-1,+1}^2 corner under
/// N(0, c). samples >= 10^4.
McEstimate mc_qerr(const Cov2D& c, std::int64_t samples, std::uint64_t seed);

/// One point of the quantization-error / entropy trade-off curve.
struct TradeoffPoint {
    double theta = 0.0;
    double qerr = 0.0;
    double entropy = 0.0;
};

/// Curves over grid_points equally spaced angles in [0, pi/2], endpoints included.
std::vector<TradeoffPoint> tradeoff_curve(double lambda1, double lambda2, int grid_points);

}  // namespace prh
