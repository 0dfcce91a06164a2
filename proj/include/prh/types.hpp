#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace prh {

using Index = Eigen::Index;

/// Row-major dense matrix; one sample per row.
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using RowMatrixXd = RowMatrix<double>;
using RowMatrixXf = RowMatrix<float>;
using IdMatrix = RowMatrix<std::int32_t>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
public:
    DimensionMismatch(const std::string& where, Index expected, Index actual)
        : InvalidArgument(where + ": dimension mismatch (expected " + std::to_string(expected) +
                          ", got " + std::to_string(actual) + ")") {}
};

/// Scalar operation tally. Encoding and covariance updates add to it when given one.
struct OpCounter {
    std::uint64_t multiplies = 0;
    std::uint64_t additions = 0;
    std::uint64_t subtractions = 0;  // centering only

    OpCounter& operator+=(const OpCounter& o) {
        multiplies += o.multiplies;
        additions += o.additions;
        subtractions += o.subtractions;
        return *this;
    }
    friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

}  // namespace prh
