#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prh/dataio.hpp"
#include "prh/learn.hpp"

using namespace prh;
namespace fs = std::filesystem;

namespace {

class DataIo : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("prh_dataio_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }
    fs::path path(const std::string& name) const { return dir_ / name; }

    fs::path dir_;
};

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::vector<char>& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

template <typename T>
void append(std::vector<char>& bytes, T value) {
    const char* p = reinterpret_cast<const char*>(&value);
    bytes.insert(bytes.end(), p, p + sizeof(T));
}

RowMatrixXf random_floats(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<float> n01;
    RowMatrixXf m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n01(gen);
    return m;
}

Model learned_model(Index dim, LearnMode mode) {
    ToyParams toy;
    toy.dim = dim;
    toy.n_train = 600;
    toy.n_query = 1;
    toy.n_db = 1;
    toy.seed = 5;
    LearnerConfig config;
    config.mode = mode;
    config.lambda = mode == LearnMode::Pcat ? 0.4 : 0.0;
    config.seed = 9;
    return make_model(learn(gen_toy(toy).train, config), config);
}

FormatError::Kind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no FormatError thrown";
    return FormatError::Kind::Io;
}

std::uint64_t offset_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const FormatError& e) {
        return e.offset();
    }
    ADD_FAILURE() << "no FormatError thrown";
    return 0;
}

}  // namespace

TEST_F(DataIo, EmptyFileHoldsNoVectors) {
    spit(path("empty.fvecs"), {});
    EXPECT_EQ(read_vectors(path("empty.fvecs")).rows(), 0);
    spit(path("empty.ivecs"), {});
    EXPECT_EQ(read_ids(path("empty.ivecs")).rows(), 0);
}

TEST_F(DataIo, VectorsRoundTripBitExact) {
    const RowMatrixXf m = random_floats(37, 13, 1);
    write_vectors(m, path("a.fvecs"));
    EXPECT_EQ(fs::file_size(path("a.fvecs")), 37u * (4 + 4 * 13));
    const RowMatrixXf back = read_vectors(path("a.fvecs"));
    ASSERT_EQ(back.rows(), 37);
    ASSERT_EQ(back.cols(), 13);
    EXPECT_EQ(std::memcmp(back.data(), m.data(), sizeof(float) * 37 * 13), 0);
}

TEST_F(DataIo, IdsRoundTrip) {
    IdMatrix ids(4, 3);
    ids << 0, 1, 2, 9, 8, 7, -1, 100000, 5, 6, 6, 6;
    write_ids(ids, path("a.ivecs"));
    EXPECT_EQ(read_ids(path("a.ivecs")), ids);
}

TEST_F(DataIo, VectorFileErrorsCarryOffsets) {
    std::vector<char> bytes;
    append<std::int32_t>(bytes, 0);
    spit(path("zero.fvecs"), bytes);
    EXPECT_EQ(kind_of([&] { read_vectors(path("zero.fvecs")); }), FormatError::Kind::MalformedHeader);
    EXPECT_EQ(offset_of([&] { read_vectors(path("zero.fvecs")); }), 0u);

    bytes.clear();
    append<std::int32_t>(bytes, 2);
    append<float>(bytes, 1.0f);
    append<float>(bytes, 2.0f);
    append<std::int32_t>(bytes, 3);
    append<float>(bytes, 1.0f);
    append<float>(bytes, 2.0f);
    append<float>(bytes, 3.0f);
    spit(path("mixed.fvecs"), bytes);
    EXPECT_EQ(kind_of([&] { read_vectors(path("mixed.fvecs")); }), FormatError::Kind::InconsistentDim);
    EXPECT_EQ(offset_of([&] { read_vectors(path("mixed.fvecs")); }), 12u);

    bytes.resize(10);
    spit(path("short.fvecs"), bytes);
    EXPECT_EQ(kind_of([&] { read_vectors(path("short.fvecs")); }), FormatError::Kind::Truncated);

    EXPECT_EQ(kind_of([&] { read_vectors(path("missing.fvecs")); }), FormatError::Kind::Io);
}

TEST_F(DataIo, SiftBaseIfPresent) {
    const char* dir = std::getenv("PRH_SIFT1M_DIR");
    if (!dir || !fs::exists(fs::path(dir) / "sift_base.fvecs")) GTEST_SKIP() << "set PRH_SIFT1M_DIR to run";
    const RowMatrixXf base = read_vectors(fs::path(dir) / "sift_base.fvecs");
    EXPECT_EQ(base.cols(), 128);
    EXPECT_EQ(base.rows(), 1000000);
}

TEST_F(DataIo, ModelRoundTripIsBitIdentical) {
    for (LearnMode mode : {LearnMode::Iso, LearnMode::Pcat, LearnMode::Rspca, LearnMode::Srr}) {
        const Model model = learned_model(mode == LearnMode::Iso ? 128 : 33, mode);
        save_model(model, path("m.prh"));
        const Model back = load_model(path("m.prh"));
        EXPECT_TRUE(back == model);
        EXPECT_EQ(back.rng_algorithm, std::string(Rng::kAlgorithm));
        EXPECT_EQ(to_dense(back.transform), to_dense(model.transform));
        const RowMatrixXd x = oracle::gaussian(Eigen::MatrixXd::Identity(model.transform.dim(), model.transform.dim()), 10, 3);
        EXPECT_EQ(apply_rows(back.transform, x), apply_rows(model.transform, x));
    }
}

TEST_F(DataIo, ModelErrors) {
    save_model(learned_model(16, LearnMode::Rspca), path("m.prh"));
    auto bytes = slurp(path("m.prh"));

    auto truncated = bytes;
    truncated.resize(bytes.size() - 3);
    spit(path("t.prh"), truncated);
    EXPECT_EQ(kind_of([&] { load_model(path("t.prh")); }), FormatError::Kind::Truncated);

    auto magic = bytes;
    magic[0] = 'X';
    spit(path("b.prh"), magic);
    EXPECT_EQ(kind_of([&] { load_model(path("b.prh")); }), FormatError::Kind::BadMagic);

    auto version = bytes;
    version[8] = 2;
    spit(path("v.prh"), version);
    EXPECT_EQ(kind_of([&] { load_model(path("v.prh")); }), FormatError::Kind::VersionMismatch);
    EXPECT_EQ(offset_of([&] { load_model(path("v.prh")); }), 8u);

    auto trailing = bytes;
    trailing.push_back(0);
    spit(path("x.prh"), trailing);
    EXPECT_EQ(kind_of([&] { load_model(path("x.prh")); }), FormatError::Kind::Corrupt);
}

TEST_F(DataIo, CodesRoundTripAndErrors) {
    BinaryCodeSet codes(70, 5);
    Eigen::VectorXd v(70);
    for (Index i = 0; i < 5; ++i) {
        for (Index b = 0; b < 70; ++b) v(b) = ((b * 7 + i * 3) % 5) < 2 ? 1.0 : -1.0;
        codes.set_row_from_signs(i, v);
    }
    save_codes(codes, path("c.codes"));
    EXPECT_EQ(load_codes(path("c.codes")), codes);

    auto bytes = slurp(path("c.codes"));
    auto truncated = bytes;
    truncated.resize(bytes.size() - 1);
    spit(path("t.codes"), truncated);
    EXPECT_EQ(kind_of([&] { load_codes(path("t.codes")); }), FormatError::Kind::Truncated);

    auto padded = bytes;
    padded[24 + 15] = static_cast<char>(0x80);  // top bit of the first row's second word
    spit(path("p.codes"), padded);
    EXPECT_EQ(kind_of([&] { load_codes(path("p.codes")); }), FormatError::Kind::Corrupt);
}

TEST_F(DataIo, SingleByteMutationsNeverPassSilently) {
    const RowMatrixXf m = random_floats(6, 5, 2);
    write_vectors(m, path("v.fvecs"));
    IdMatrix ids(3, 4);
    ids << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12;
    write_ids(ids, path("i.ivecs"));
    const Model model = learned_model(12, LearnMode::Rspca);
    save_model(model, path("m.prh"));
    BinaryCodeSet codes(12, 4);
    codes.set_row_from_signs(1, Eigen::VectorXd::LinSpaced(12, -1, 1));
    save_codes(codes, path("c.codes"));

    struct Case {
        fs::path file;
        std::function<bool()> same;
    };
    const fs::path probe = path("probe.bin");
    const std::vector<Case> cases{
        {path("v.fvecs"),
         [&] {
             const RowMatrixXf back = read_vectors(probe);
             return back.rows() == m.rows() && back.cols() == m.cols() &&
                    std::memcmp(back.data(), m.data(), sizeof(float) * m.size()) == 0;
         }},
        {path("i.ivecs"), [&] { return read_ids(probe) == ids; }},
        {path("m.prh"), [&] { return load_model(probe) == model; }},
        {path("c.codes"), [&] { return load_codes(probe) == codes; }},
    };
    std::mt19937_64 gen(99);
    for (const auto& c : cases) {
        const auto original = slurp(c.file);
        for (int trial = 0; trial < 300; ++trial) {
            auto bytes = original;
            const std::size_t at = gen() % bytes.size();
            const char flip = static_cast<char>(1 + gen() % 255);
            bytes[at] = static_cast<char>(bytes[at] ^ flip);
            spit(probe, bytes);
            bool same = false;
            try {
                same = c.same();
            } catch (const FormatError&) {
                continue;
            }
            EXPECT_FALSE(same) << c.file << " byte " << at;
        }
    }
}

TEST(GenToy, SampleCovarianceMatchesConstruction) {
    ToyParams p;
    p.dim = 12;
    p.log_var = 1.0;
    p.n_train = 50000;
    p.n_query = 1;
    p.n_db = 1;
    p.seed = 4;
    const ToyDataset d = gen_toy(p);
    const Eigen::MatrixXd truth = d.covariance();
    const Eigen::MatrixXd sample = estimate(d.train).sigma;
    const double m = static_cast<double>(p.n_train);
    for (Index i = 0; i < p.dim; ++i) {
        for (Index j = 0; j < p.dim; ++j) {
            const double se = std::sqrt((truth(i, i) * truth(j, j) + truth(i, j) * truth(i, j)) / m);
            EXPECT_LE(std::abs(sample(i, j) - truth(i, j)), 5 * se) << i << "," << j;
        }
    }
    const Eigen::MatrixXd q = d.rotation;
    EXPECT_LE((q.transpose() * q - Eigen::MatrixXd::Identity(p.dim, p.dim)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenToy, TraceEqualsEigenvalueSum) {
    ToyParams p;
    p.n_train = 2;
    p.n_query = 1;
    p.n_db = 1;
    const ToyDataset d = gen_toy(p);
    EXPECT_LE(std::abs(d.covariance().trace() - d.eigenvalues.sum()), 1e-12 * d.eigenvalues.sum());
}

TEST(GenToy, ZeroLogVarianceIsIsotropic) {
    ToyParams p;
    p.dim = 32;
    p.log_var = 0.0;
    p.n_train = 20000;
    p.n_query = 1;
    p.n_db = 1;
    const ToyDataset d = gen_toy(p);
    EXPECT_EQ(d.eigenvalues, Eigen::VectorXd::Ones(32));
    EXPECT_LE(variance_ratio(estimate(d.train).sigma.diagonal()), 1.1);
}

TEST(GenToy, FixedSeedIsReproducible) {
    ToyParams p;
    p.dim = 10;
    p.n_train = 50;
    p.n_query = 5;
    p.n_db = 60;
    p.seed = 3;
    const ToyDataset a = gen_toy(p);
    const ToyDataset b = gen_toy(p);
    EXPECT_EQ(a.train, b.train);
    EXPECT_EQ(a.query, b.query);
    EXPECT_EQ(a.db, b.db);
    p.seed = 4;
    EXPECT_NE(gen_toy(p).train, a.train);
}

TEST(GenToy, InvalidParams) {
    ToyParams p;
    p.n_query = 0;
    EXPECT_THROW(gen_toy(p), InvalidArgument);
    p = ToyParams{};
    p.dim = 1;
    EXPECT_THROW(gen_toy(p), InvalidArgument);
    p = ToyParams{};
    p.log_var = -1;
    EXPECT_THROW(gen_toy(p), InvalidArgument);
}
