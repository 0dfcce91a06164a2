#include "prh/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prh/rng.hpp"

namespace prh {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);

void check_theta(double theta, const char* where) {
    if (!(theta >= 0.0 && theta <= kPi / 2)) {
        throw InvalidArgument(std::string(where) + ": theta must lie in [0, pi/2]");
    }
}

double xlogx(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

}  // namespace

void EigenAngleParam::validate() const {
    if (!(lambda2 > 0.0)) throw InvalidArgument("EigenAngleParam: lambda2 must be positive");
    if (!(lambda1 >= lambda2)) throw InvalidArgument("EigenAngleParam: lambda1 must be >= lambda2");
    if (!std::isfinite(lambda1)) throw InvalidArgument("EigenAngleParam: lambda1 must be finite");
    check_theta(theta, "EigenAngleParam");
}

void Cov2D::validate() const {
    if (!std::isfinite(s11) || !std::isfinite(s22) || !std::isfinite(s12)) {
        throw InvalidArgument("Cov2D: non-finite entry");
    }
    if (s11 < 0.0 || s22 < 0.0) throw InvalidArgument("Cov2D: negative variance");
    if (s12 * s12 > s11 * s22 * (1.0 + 1e-12) + 1e-12) throw InvalidArgument("Cov2D: not positive semidefinite");
}

Cov2D cov_from_eigen(const EigenAngleParam& p) {
    p.validate();
    const double mean = 0.5 * (p.lambda1 + p.lambda2);
    const double half_gap = 0.5 * (p.lambda1 - p.lambda2);
    return {mean + half_gap * std::cos(2.0 * p.theta), mean - half_gap * std::cos(2.0 * p.theta),
            half_gap * std::sin(2.0 * p.theta)};
}

double qerr_gauss2d(const Cov2D& c) {
    c.validate();
    return 2.0 + (c.s11 + c.s22) - 2.0 * kSqrt2OverPi * (std::sqrt(c.s11) + std::sqrt(c.s22));
}

double qerr_gauss_nd(std::span<const double> variances) {
    if (variances.empty()) throw InvalidArgument("qerr_gauss_nd: empty variance list");
    double trace = 0.0;
    double root_sum = 0.0;
    for (double v : variances) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("qerr_gauss_nd: negative or non-finite variance");
        trace += v;
        root_sum += std::sqrt(v);
    }
    return static_cast<double>(variances.size()) + trace - 2.0 * kSqrt2OverPi * root_sum;
}

double gamma(double lambda1, double lambda2) {
    if (!(lambda2 > 0.0) || !(lambda1 > 0.0)) throw InvalidArgument("gamma: eigenvalues must be positive");
    if (lambda1 < lambda2) throw InvalidArgument("gamma: lambda1 must be >= lambda2");
    return std::sqrt(lambda1 / lambda2) - std::sqrt(lambda2 / lambda1);
}

CellProbabilities cell_probabilities(double gamma, double theta) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("cell_probabilities: gamma must be >= 0");
    check_theta(theta, "cell_probabilities");
    const double x = gamma * std::sin(2.0 * theta);
    const double p11 = x == 0.0 ? 0.25 : 0.5 - std::atan(2.0 / x) / (2.0 * kPi);
    return {p11, 0.5 - p11};
}

double entropy2d(double gamma, double theta) {
    const auto p = cell_probabilities(gamma, theta);
    return -2.0 * (xlogx(p.p11) + xlogx(p.p_neg));
}

McEstimate mc_qerr(const Cov2D& c, std::int64_t samples, std::uint64_t seed) {
    c.validate();
    if (samples < 10000) throw InvalidArgument("mc_qerr: need at least 10^4 samples");
    // Lower Cholesky factor [[a, 0], [b, d]], tolerant of singular covariances.
    const double a = std::sqrt(c.s11);
    const double b = a > 0.0 ? c.s12 / a : 0.0;
    const double d = std::sqrt(std::max(0.0, c.s22 - b * b));
    Rng rng(seed);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::int64_t k = 0; k < samples; ++k) {
        const double z1 = rng.normal();
        const double z2 = rng.normal();
        const double x1 = a * z1;
        const double x2 = b * z1 + d * z2;
        const double e1 = std::abs(x1) - 1.0;
        const double e2 = std::abs(x2) - 1.0;
        const double q = e1 * e1 + e2 * e2;
        const double delta = q - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (q - mean);
    }
    const double n = static_cast<double>(samples);
    const double var = m2 / (n - 1.0);
    return {mean, std::sqrt(var / n)};
}

std::vector<TradeoffPoint> tradeoff_curve(double lambda1, double lambda2, int grid_points) {
    if (grid_points < 2) throw InvalidArgument("tradeoff_curve: need at least 2 grid points");
    const double g = gamma(lambda1, lambda2);
    std::vector<TradeoffPoint> curve;
    curve.reserve(static_cast<std::size_t>(grid_points));
    for (int k = 0; k < grid_points; ++k) {
        const double theta = (kPi / 2) * (static_cast<double>(k) / (grid_points - 1));
        const Cov2D c = cov_from_eigen({lambda1, lambda2, theta});
        curve.push_back({theta, qerr_gauss2d(c), entropy2d(g, theta)});
    }
    return curve;
}

}  // namespace prh
