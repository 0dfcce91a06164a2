#include "prh/learn.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <numeric>

namespace prh {

namespace {

constexpr double kPi = std::numbers::pi;

void check_cov2(double s11, double s22, double s12, const char* where) {
    if (!std::isfinite(s11) || !std::isfinite(s22) || !std::isfinite(s12)) {
        throw InvalidArgument(std::string(where) + ": non-finite covariance entry");
    }
    if (s11 < 0.0 || s22 < 0.0) throw InvalidArgument(std::string(where) + ": negative variance");
    if (s12 * s12 > s11 * s22 * (1.0 + 1e-9) + 1e-12) {
        throw InvalidArgument(std::string(where) + ": covariance is not positive semidefinite");
    }
}

// atan2(0, 0) is 0 on every conforming libm, which gives the degenerate pair angle 0.
double iso_angle(double s11, double s22, double s12) {
    return 0.5 * std::atan2(s11 - s22, 2.0 * s12);
}

// An already-decorrelated pair keeps angle 0; atan2 would give +-pi/2 when s11 < s22.
double pca_angle(double s11, double s22, double s12) {
    if (s12 == 0.0) return 0.0;
    return 0.5 * std::atan2(-2.0 * s12, s11 - s22);
}

double tilted_angle(double s11, double s22, double s12, double lambda) {
    const double iso = iso_angle(s11, s22, s12);
    if (lambda == 0.0) return iso;
    double diff = pca_angle(s11, s22, s12) - iso;
    while (diff > kPi / 2) diff -= kPi;
    while (diff <= -kPi / 2) diff += kPi;
    return iso + lambda * diff;
}

std::vector<Index> random_matching_order(Index dim, Rng& rng) {
    std::vector<Index> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), Index{0});
    rng.shuffle(std::span<Index>(order));
    return order;
}

void record_stage(LearnTrace* trace, const CovarianceState& cov, const OpCounter& ops) {
    if (!trace) return;
    const Eigen::VectorXd diag = cov.sigma.diagonal();
    trace->stages.push_back({variance_ratio(diag), diag.sum(), ops});
}

}  // namespace

std::string to_string(LearnMode mode) {
    switch (mode) {
        case LearnMode::Iso: return "iso";
        case LearnMode::Pcat: return "pcat";
        case LearnMode::Rspca: return "rspca";
        case LearnMode::Srr: return "srr";
    }
    return "unknown";
}

LearnMode parse_learn_mode(const std::string& name) {
    if (name == "iso") return LearnMode::Iso;
    if (name == "pcat") return LearnMode::Pcat;
    if (name == "rspca") return LearnMode::Rspca;
    if (name == "srr") return LearnMode::Srr;
    throw InvalidArgument("unknown learner mode '" + name + "' (expected iso|pcat|rspca|srr)");
}

void LearnerConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("LearnerConfig: lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
    if (iso_stages && *iso_stages < 0) throw InvalidArgument("LearnerConfig: iso_stages must be >= 0");
    if (pca_stages && *pca_stages < 0) throw InvalidArgument("LearnerConfig: pca_stages must be >= 0");
}

int LearnerConfig::resolved_iso_stages(Index dim) const {
    return iso_stages.value_or(ceil_log2(dim));
}

int LearnerConfig::resolved_pca_stages(Index dim) const {
    return pca_stages.value_or(ceil_log2(dim));
}

double pair_angle_iso(double s11, double s22, double s12) {
    check_cov2(s11, s22, s12, "pair_angle_iso");
    return iso_angle(s11, s22, s12);
}

double pair_angle_pca(double s11, double s22, double s12) {
    check_cov2(s11, s22, s12, "pair_angle_pca");
    return pca_angle(s11, s22, s12);
}

double pair_angle_tilted(double s11, double s22, double s12, double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw InvalidArgument("pair_angle_tilted: lambda must lie in [0, 1]");
    }
    check_cov2(s11, s22, s12, "pair_angle_tilted");
    return tilted_angle(s11, s22, s12, lambda);
}

RotationStage build_iso_stage(const CovarianceState& cov, double lambda) {
    const Index n = cov.dim();
    if (n < 2) throw InvalidArgument("build_iso_stage: need dim >= 2");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("build_iso_stage: lambda must lie in [0, 1]");
    const auto& s = cov.sigma;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return s(a, a) > s(b, b); });
    std::vector<PairRotation> pairs;
    pairs.reserve(static_cast<std::size_t>(n / 2));
    for (Index k = 0; k < n / 2; ++k) {
        const Index i = order[static_cast<std::size_t>(k)];
        const Index j = order[static_cast<std::size_t>(n - 1 - k)];
        pairs.push_back({i, j, tilted_angle(s(i, i), s(j, j), s(i, j), lambda)});
    }
    return RotationStage(n, std::move(pairs));
}

RotationStage build_pca_stage(const CovarianceState& cov, Rng& rng) {
    const Index n = cov.dim();
    if (n < 2) throw InvalidArgument("build_pca_stage: need dim >= 2");
    const auto order = random_matching_order(n, rng);
    const auto& s = cov.sigma;
    std::vector<PairRotation> pairs;
    pairs.reserve(static_cast<std::size_t>(n / 2));
    for (Index k = 0; k + 1 < n; k += 2) {
        const Index i = order[static_cast<std::size_t>(k)];
        const Index j = order[static_cast<std::size_t>(k + 1)];
        pairs.push_back({i, j, pca_angle(s(i, i), s(j, j), s(i, j))});
    }
    return RotationStage(n, std::move(pairs));
}

RotationStage build_random_stage(Index dim, Rng& rng) {
    if (dim < 2) throw InvalidArgument("build_random_stage: need dim >= 2");
    const auto order = random_matching_order(dim, rng);
    std::vector<PairRotation> pairs;
    pairs.reserve(static_cast<std::size_t>(dim / 2));
    for (Index k = 0; k + 1 < dim; k += 2) {
        pairs.push_back({order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k + 1)],
                         2.0 * kPi * rng.uniform()});
    }
    return RotationStage(dim, std::move(pairs));
}

void update_covariance(CovarianceState& cov, const RotationStage& stage, OpCounter* ops) {
    if (stage.dim() != cov.dim()) throw DimensionMismatch("update_covariance", cov.dim(), stage.dim());
    auto& s = cov.sigma;
    const Index n = cov.dim();
    for (std::size_t p = 0; p < stage.size(); ++p) {
        const Index i = stage.pairs()[p].first;
        const Index j = stage.pairs()[p].second;
        const double c = stage.cos(p);
        const double sn = stage.sin(p);
        for (Index k = 0; k < n; ++k) {
            const double a = s(i, k);
            const double b = s(j, k);
            s(i, k) = c * a - sn * b;
            s(j, k) = sn * a + c * b;
        }
    }
    for (std::size_t p = 0; p < stage.size(); ++p) {
        const Index i = stage.pairs()[p].first;
        const Index j = stage.pairs()[p].second;
        const double c = stage.cos(p);
        const double sn = stage.sin(p);
        auto ci = s.col(i);
        auto cj = s.col(j);
        for (Index k = 0; k < n; ++k) {
            const double a = ci(k);
            const double b = cj(k);
            ci(k) = c * a - sn * b;
            cj(k) = sn * a + c * b;
        }
    }
    for (Index c = 0; c < n; ++c) {
        for (Index r = c + 1; r < n; ++r) {
            const double v = 0.5 * (s(r, c) + s(c, r));
            s(r, c) = v;
            s(c, r) = v;
        }
    }
    if (ops) {
        const auto pairs = static_cast<std::uint64_t>(stage.size());
        const auto un = static_cast<std::uint64_t>(n);
        const std::uint64_t sym = un * (un - 1) / 2;
        ops->multiplies += 8 * pairs * un + sym;
        ops->additions += 4 * pairs * un + sym;
    }
}

double variance_ratio(const Eigen::Ref<const Eigen::VectorXd>& variances) {
    const double lo = variances.minCoeff();
    const double hi = variances.maxCoeff();
    if (lo <= 0.0) return hi <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return hi / lo;
}

FactoredTransform learn_from_covariance(CovarianceState cov, const LearnerConfig& config,
                                        LearnTrace* trace) {
    config.validate();
    const Index n = cov.dim();
    if (n < 2) throw InvalidArgument("learn: need at least two dimensions");
    if (cov.sigma.rows() != n || cov.sigma.cols() != n) {
        throw DimensionMismatch("learn covariance", n, cov.sigma.rows());
    }
    if (trace) {
        *trace = LearnTrace{};
        trace->initial_ratio = variance_ratio(cov.sigma.diagonal());
        trace->initial_trace = cov.sigma.trace();
    }

    Rng rng(config.seed);
    std::vector<RotationStage> stages;
    const int iso = config.resolved_iso_stages(n);

    auto push = [&](RotationStage stage) {
        OpCounter ops;
        update_covariance(cov, stage, &ops);
        record_stage(trace, cov, ops);
        stages.push_back(std::move(stage));
    };

    switch (config.mode) {
        case LearnMode::Iso:
        case LearnMode::Pcat: {
            const double lambda = config.mode == LearnMode::Pcat ? config.lambda : 0.0;
            for (int k = 0; k < iso; ++k) push(build_iso_stage(cov, lambda));
            break;
        }
        case LearnMode::Rspca: {
            for (int k = 0; k < iso; ++k) push(build_iso_stage(cov, 0.0));
            const int extra = config.resolved_pca_stages(n);
            for (int k = 0; k < extra; ++k) push(build_pca_stage(cov, rng));
            break;
        }
        case LearnMode::Srr:
            for (int k = 0; k < iso; ++k) push(build_random_stage(n, rng));
            break;
    }
    if (trace) trace->final_variances = cov.sigma.diagonal();

    Eigen::VectorXd center = config.center ? cov.mean : Eigen::VectorXd::Zero(n).eval();
    return FactoredTransform(std::move(center), std::move(stages));
}

FactoredTransform learn_random(Eigen::VectorXd center, const LearnerConfig& config) {
    config.validate();
    const Index n = center.size();
    if (n < 2) throw InvalidArgument("learn: need at least two dimensions");
    Rng rng(config.seed);
    std::vector<RotationStage> stages;
    const int iso = config.resolved_iso_stages(n);
    for (int k = 0; k < iso; ++k) stages.push_back(build_random_stage(n, rng));
    return FactoredTransform(std::move(center), std::move(stages));
}

}  // namespace prh
