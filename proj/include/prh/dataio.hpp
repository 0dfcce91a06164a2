#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <Eigen/Core>

#include "prh/codec.hpp"
#include "prh/learn.hpp"
#include "prh/transform.hpp"
#include "prh/types.hpp"

namespace prh {

/// Reader/writer failure with the byte offset where it was detected.
class FormatError : public Error {
public:
    enum class Kind { Io, MalformedHeader, InconsistentDim, Truncated, BadMagic, VersionMismatch, Corrupt };

    FormatError(Kind kind, std::uint64_t offset, const std::string& what);

    Kind kind() const { return kind_; }
    std::uint64_t offset() const { return offset_; }

private:
    Kind kind_;
    std::uint64_t offset_;
};

const char* to_string(FormatError::Kind kind);

// Vector files: each record is a little-endian int32 dim followed by dim
// little-endian 4-byte values (IEEE-754 float for .fvecs, int32 for .ivecs).
// Every record must share the same dim. An empty file holds zero vectors.

RowMatrixXf read_vectors(const std::filesystem::path& path);
void write_vectors(const Eigen::Ref<const RowMatrixXf>& data, const std::filesystem::path& path);
IdMatrix read_ids(const std::filesystem::path& path);
void write_ids(const Eigen::Ref<const IdMatrix>& ids, const std::filesystem::path& path);

struct ToyParams {
    Index dim = 128;
    double log_var = 3.0;      // variance of the log-eigenvalues
    double log_mean = 0.0;     // location of the log-eigenvalues
    Index n_train = 10000;
    Index n_query = 2000;
    Index n_db = 100000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Zero-mean gaussian data with covariance Q diag(eigenvalues) Q^T.
struct ToyDataset {
    RowMatrixXd train;
    RowMatrixXd query;
    RowMatrixXd db;
    Eigen::VectorXd eigenvalues;
    Eigen::MatrixXd rotation;  // Q, orthonormal columns

    Eigen::MatrixXd covariance() const;
};

/// Draw order from one Rng(seed): dim log-normal eigenvalues, then a dim x dim
/// gaussian matrix (row-major) orthonormalized by Householder QR with the
/// diagonal of R made positive, then dim normals per sample for train, query
/// and db in that order. O(dim^3) for the rotation.
ToyDataset gen_toy(const ToyParams& params);

/// A learned transform plus the configuration that produced it.
struct Model {
    FactoredTransform transform{1};
    LearnerConfig config;
    std::string rng_algorithm;
    int parity = 1;

    friend bool operator==(const Model& a, const Model& b);
};

Model make_model(FactoredTransform transform, const LearnerConfig& config);

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr std::uint32_t kCodesFormatVersion = 1;

// Model file, little-endian, no padding:
//   "PRHMODEL" | u32 version | u32 dim | u8 mode | f64 lambda | i32 iso_stages
//   | i32 pca_stages | u64 seed | u8 center | u32 len + rng algorithm bytes
//   | i8 parity | f64[dim] center | u32 n_stages
//   | per stage: u32 n_pairs, per pair: u32 first, u32 second, f64 angle
// Stage counts of -1 mean "default". The whole file must be consumed.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// Code file: "PRHCODES" | u32 version | u32 n_bits | u64 count
//   | count * ceil(n_bits/64) little-endian u64 words.
void save_codes(const BinaryCodeSet& codes, const std::filesystem::path& path);
BinaryCodeSet load_codes(const std::filesystem::path& path);

}  // namespace prh
