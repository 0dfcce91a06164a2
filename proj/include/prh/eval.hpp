#pragma once

#include <filesystem>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "prh/dataio.hpp"
#include "prh/learn.hpp"
#include "prh/transform.hpp"
#include "prh/types.hpp"

namespace prh {

/// Exact Euclidean neighbors: row q lists the k nearest db rows, nearest first,
/// ties broken by ascending db index.
struct GroundTruth {
    Index k = 10;
    IdMatrix ids;
};

GroundTruth ground_truth(const Eigen::Ref<const RowMatrixXd>& db, const Eigen::Ref<const RowMatrixXd>& queries,
                         Index k = 10);

struct RecallCurve {
    std::vector<Index> R_values;
    std::vector<double> recall;
};

/// recall@R = mean over queries of |top-R retrieved ∩ true top-k| / k.
/// retrieved must hold at least max(R_values) columns.
RecallCurve recall_curve(const IdMatrix& retrieved, const GroundTruth& truth, const std::vector<Index>& R_values);

struct Timings {
    double learn = 0.0;
    double encode = 0.0;
    double search = 0.0;
    double ground_truth = 0.0;
};

struct RecallReport {
    RecallCurve curve;
    Timings seconds;
    TransformCost cost_per_vector;
    OpCounter encode_ops;      // summed over db and query vectors
    OpCounter learn_loop_ops;  // covariance updates inside the stage loop
    Index encoded_vectors = 0;
    std::size_t stages = 0;
    int parity = 1;
    nlohmann::json config;
};

struct BenchData {
    RowMatrixXd train;
    RowMatrixXd query;
    RowMatrixXd db;
};

struct FileSource {
    std::filesystem::path train;
    std::filesystem::path query;
    std::filesystem::path db;
};

struct BenchConfig {
    std::variant<ToyParams, FileSource> source = ToyParams{};
    LearnerConfig learner;
    std::vector<Index> R_values{1, 10, 100, 1000};
    Index k = 10;

    void validate() const;
};

nlohmann::json to_json(const LearnerConfig& config);
nlohmann::json to_json(const ToyParams& params);
nlohmann::json to_json(const BenchConfig& config);

BenchData load_bench_data(const BenchConfig& config);

/// Encode db and queries with t, rank db by Hamming distance to depth
/// max(R_values), score against truth.
RecallReport evaluate_transform(const FactoredTransform& t, const BenchData& data,
                                const std::vector<Index>& R_values, const GroundTruth& truth);

/// learn -> evaluate_transform with a precomputed ground truth.
RecallReport run_benchmark(const BenchData& data, const LearnerConfig& learner,
                           const std::vector<Index>& R_values, const GroundTruth& truth);

/// Full pipeline from a config: load or generate data, ground truth, learn,
/// encode, search, score.
RecallReport run_benchmark(const BenchConfig& config);

// Report file: JSON Lines, one object per line, each tagged by "record":
//   config     the effective benchmark configuration
//   transform  dim, stage and pair counts, per-vector fill-ins/multiplies/additions, parity
//   ops        encode and learn-loop operation totals
//   recall     one line per R: {"R": int, "recall": float}
//   timing     one line per phase: {"phase": str, "seconds": float}
// Timing lines come last; everything else is deterministic for a fixed seed.
void write_report(const RecallReport& report, const std::filesystem::path& path);
/// CSV with header "R,recall".
void write_recall_csv(const RecallCurve& curve, const std::filesystem::path& path);

}  // namespace prh
