#include "prh/dataio.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include <Eigen/QR>

#include "prh/rng.hpp"

namespace prh {

namespace fs = std::filesystem;

FormatError::FormatError(Kind kind, std::uint64_t offset, const std::string& what)
    : Error(std::string(to_string(kind)) + " at byte " + std::to_string(offset) + ": " + what),
      kind_(kind),
      offset_(offset) {}

const char* to_string(FormatError::Kind kind) {
    switch (kind) {
        case FormatError::Kind::Io: return "i/o error";
        case FormatError::Kind::MalformedHeader: return "malformed header";
        case FormatError::Kind::InconsistentDim: return "inconsistent dimension";
        case FormatError::Kind::Truncated: return "truncated file";
        case FormatError::Kind::BadMagic: return "bad magic";
        case FormatError::Kind::VersionMismatch: return "version mismatch";
        case FormatError::Kind::Corrupt: return "corrupt file";
    }
    return "format error";
}

namespace {

using Kind = FormatError::Kind;

std::vector<unsigned char> slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(Kind::Io, 0, "cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw FormatError(Kind::Io, 0, "read failed for " + path.string());
    return bytes;
}

void spill(const std::vector<unsigned char>& bytes, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(Kind::Io, 0, "cannot create " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError(Kind::Io, 0, "write failed for " + path.string());
}

class ByteWriter {
public:
    template <typename T>
    void put(T value) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        auto bits = std::bit_cast<U>(value);
        for (std::size_t k = 0; k < sizeof(T); ++k) {
            bytes_.push_back(static_cast<unsigned char>(bits & 0xffu));
            if constexpr (sizeof(T) > 1) bits = static_cast<U>(bits >> 8);
        }
    }
    void put_bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        bytes_.insert(bytes_.end(), p, p + n);
    }
    const std::vector<unsigned char>& bytes() const { return bytes_; }
    void reserve(std::size_t n) { bytes_.reserve(n); }

private:
    std::vector<unsigned char> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

    template <typename T>
    T get(const char* what) {
        using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                  std::conditional_t<sizeof(T) == 4, std::uint32_t,
                  std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
        need(sizeof(T), what);
        U bits = 0;
        for (std::size_t k = 0; k < sizeof(T); ++k) {
            bits = static_cast<U>(bits | (static_cast<U>(bytes_[pos_ + k]) << (8 * k)));
        }
        pos_ += sizeof(T);
        return std::bit_cast<T>(bits);
    }
    void need(std::size_t n, const char* what) const {
        if (bytes_.size() - pos_ < n) {
            throw FormatError(Kind::Truncated, pos_, std::string("expected ") + std::to_string(n) +
                                                         " bytes for " + what + ", " +
                                                         std::to_string(bytes_.size() - pos_) + " left");
        }
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    const unsigned char* here() const { return bytes_.data() + pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const std::vector<unsigned char>& bytes_;
    std::size_t pos_ = 0;
};

template <typename Scalar>
RowMatrix<Scalar> read_records(const fs::path& path) {
    static_assert(sizeof(Scalar) == 4);
    const auto bytes = slurp(path);
    ByteReader in(bytes);
    if (bytes.empty()) return RowMatrix<Scalar>(0, 0);
    std::vector<Scalar> values;
    std::int32_t dim = 0;
    Index count = 0;
    while (in.remaining() > 0) {
        const std::size_t header_at = in.pos();
        const auto d = in.get<std::int32_t>("record dimension");
        if (count == 0) {
            if (d <= 0) {
                throw FormatError(Kind::MalformedHeader, header_at,
                                  "record dimension must be positive, got " + std::to_string(d));
            }
            dim = d;
            const std::size_t record = 4 + 4 * static_cast<std::size_t>(dim);
            values.reserve(bytes.size() / record * static_cast<std::size_t>(dim));
        } else if (d != dim) {
            throw FormatError(Kind::InconsistentDim, header_at,
                              "record " + std::to_string(count) + " has dimension " + std::to_string(d) +
                                  ", expected " + std::to_string(dim));
        }
        in.need(4 * static_cast<std::size_t>(dim), "record payload");
        for (std::int32_t k = 0; k < dim; ++k) values.push_back(in.get<Scalar>("value"));
        ++count;
    }
    RowMatrix<Scalar> out(count, dim);
    std::copy(values.begin(), values.end(), out.data());
    return out;
}

template <typename Scalar>
void write_records(const Eigen::Ref<const RowMatrix<Scalar>>& data, const fs::path& path) {
    ByteWriter out;
    out.reserve(static_cast<std::size_t>(data.rows() * (4 + 4 * data.cols())));
    if (data.rows() > 0 && data.cols() < 1) throw InvalidArgument("write_vectors: zero-width records");
    for (Index r = 0; r < data.rows(); ++r) {
        out.put(static_cast<std::int32_t>(data.cols()));
        for (Index c = 0; c < data.cols(); ++c) out.put(data(r, c));
    }
    spill(out.bytes(), path);
}

void expect_magic(ByteReader& in, const char (&magic)[9]) {
    in.need(8, "magic");
    if (std::memcmp(in.here(), magic, 8) != 0) {
        throw FormatError(Kind::BadMagic, 0, std::string("expected '") + magic + "'");
    }
    in.skip(8);
}

}  // namespace

RowMatrixXf read_vectors(const fs::path& path) { return read_records<float>(path); }

void write_vectors(const Eigen::Ref<const RowMatrixXf>& data, const fs::path& path) {
    write_records<float>(data, path);
}

IdMatrix read_ids(const fs::path& path) { return read_records<std::int32_t>(path); }

void write_ids(const Eigen::Ref<const IdMatrix>& ids, const fs::path& path) {
    write_records<std::int32_t>(ids, path);
}

void ToyParams::validate() const {
    if (dim < 2) throw InvalidArgument("gen_toy: dim must be >= 2");
    if (n_train < 1 || n_query < 1 || n_db < 1) throw InvalidArgument("gen_toy: counts must be >= 1");
    if (!(log_var >= 0.0) || !std::isfinite(log_var)) throw InvalidArgument("gen_toy: log_var must be >= 0");
    if (!std::isfinite(log_mean)) throw InvalidArgument("gen_toy: log_mean must be finite");
}

Eigen::MatrixXd ToyDataset::covariance() const {
    return rotation * eigenvalues.asDiagonal() * rotation.transpose();
}

ToyDataset gen_toy(const ToyParams& params) {
    params.validate();
    Rng rng(params.seed);
    const Index n = params.dim;
    ToyDataset out;
    out.eigenvalues.resize(n);
    const double log_sd = std::sqrt(params.log_var);
    for (Index k = 0; k < n; ++k) out.eigenvalues(k) = std::exp(params.log_mean + log_sd * rng.normal());

    RowMatrixXd gauss(n, n);
    for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) gauss(r, c) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    out.rotation = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index k = 0; k < n; ++k) {
        if (r(k, k) < 0.0) out.rotation.col(k) *= -1.0;
    }

    const Eigen::VectorXd scale = out.eigenvalues.cwiseSqrt();
    auto draw = [&](Index count) {
        RowMatrixXd z(count, n);
        for (Index i = 0; i < count; ++i)
            for (Index k = 0; k < n; ++k) z(i, k) = rng.normal() * scale(k);
        return RowMatrixXd(z * out.rotation.transpose());
    };
    out.train = draw(params.n_train);
    out.query = draw(params.n_query);
    out.db = draw(params.n_db);
    return out;
}

bool operator==(const Model& a, const Model& b) {
    return a.transform == b.transform && a.config.mode == b.config.mode &&
           a.config.lambda == b.config.lambda && a.config.iso_stages == b.config.iso_stages &&
           a.config.pca_stages == b.config.pca_stages && a.config.seed == b.config.seed &&
           a.config.center == b.config.center && a.rng_algorithm == b.rng_algorithm &&
           a.parity == b.parity;
}

Model make_model(FactoredTransform transform, const LearnerConfig& config) {
    const int parity = transform.parity();
    return Model{std::move(transform), config, std::string(Rng::kAlgorithm), parity};
}

void save_model(const Model& model, const fs::path& path) {
    const auto& t = model.transform;
    ByteWriter out;
    out.put_bytes("PRHMODEL", 8);
    out.put(kModelFormatVersion);
    out.put(static_cast<std::uint32_t>(t.dim()));
    out.put(static_cast<std::uint8_t>(model.config.mode));
    out.put(model.config.lambda);
    out.put(static_cast<std::int32_t>(model.config.iso_stages.value_or(-1)));
    out.put(static_cast<std::int32_t>(model.config.pca_stages.value_or(-1)));
    out.put(model.config.seed);
    out.put(static_cast<std::uint8_t>(model.config.center ? 1 : 0));
    out.put(static_cast<std::uint32_t>(model.rng_algorithm.size()));
    out.put_bytes(model.rng_algorithm.data(), model.rng_algorithm.size());
    out.put(static_cast<std::int8_t>(model.parity));
    for (Index k = 0; k < t.dim(); ++k) out.put(t.center()(k));
    out.put(static_cast<std::uint32_t>(t.stages().size()));
    for (const auto& stage : t.stages()) {
        out.put(static_cast<std::uint32_t>(stage.size()));
        for (const auto& p : stage.pairs()) {
            out.put(static_cast<std::uint32_t>(p.first));
            out.put(static_cast<std::uint32_t>(p.second));
            out.put(p.angle);
        }
    }
    spill(out.bytes(), path);
}

Model load_model(const fs::path& path) {
    const auto bytes = slurp(path);
    ByteReader in(bytes);
    expect_magic(in, "PRHMODEL");
    const auto version = in.get<std::uint32_t>("version");
    if (version != kModelFormatVersion) {
        throw FormatError(Kind::VersionMismatch, 8, "model format version " + std::to_string(version) +
                                                        ", this build reads " +
                                                        std::to_string(kModelFormatVersion));
    }
    auto corrupt = [&](std::size_t at, const std::string& what) { return FormatError(Kind::Corrupt, at, what); };

    const auto dim = in.get<std::uint32_t>("dim");
    if (dim == 0 || dim > (1u << 30)) throw corrupt(in.pos() - 4, "invalid dim " + std::to_string(dim));

    Model model;
    std::size_t at = in.pos();
    const auto mode = in.get<std::uint8_t>("mode");
    if (mode > static_cast<std::uint8_t>(LearnMode::Srr)) throw corrupt(at, "unknown learner mode");
    model.config.mode = static_cast<LearnMode>(mode);
    model.config.lambda = in.get<double>("lambda");
    const auto iso = in.get<std::int32_t>("iso_stages");
    const auto pca = in.get<std::int32_t>("pca_stages");
    if (iso < -1 || pca < -1) throw corrupt(in.pos() - 8, "invalid stage count");
    if (iso >= 0) model.config.iso_stages = iso;
    if (pca >= 0) model.config.pca_stages = pca;
    model.config.seed = in.get<std::uint64_t>("seed");
    at = in.pos();
    const auto center_flag = in.get<std::uint8_t>("center flag");
    if (center_flag > 1) throw corrupt(at, "center flag must be 0 or 1");
    model.config.center = center_flag == 1;
    try {
        model.config.validate();
    } catch (const InvalidArgument& e) {
        throw corrupt(at, e.what());
    }

    const auto rng_len = in.get<std::uint32_t>("rng algorithm length");
    in.need(rng_len, "rng algorithm");
    model.rng_algorithm.assign(reinterpret_cast<const char*>(in.here()), rng_len);
    in.skip(rng_len);
    at = in.pos();
    model.parity = in.get<std::int8_t>("parity");
    if (model.parity != 1 && model.parity != -1) throw corrupt(at, "parity must be +1 or -1");

    in.need(8 * static_cast<std::size_t>(dim), "center");
    Eigen::VectorXd center(dim);
    for (std::uint32_t k = 0; k < dim; ++k) center(k) = in.get<double>("center");

    const auto n_stages = in.get<std::uint32_t>("stage count");
    std::vector<RotationStage> stages;
    for (std::uint32_t s = 0; s < n_stages; ++s) {
        at = in.pos();
        const auto n_pairs = in.get<std::uint32_t>("pair count");
        in.need(16 * static_cast<std::size_t>(n_pairs), "pairs");
        std::vector<PairRotation> pairs;
        pairs.reserve(n_pairs);
        for (std::uint32_t p = 0; p < n_pairs; ++p) {
            const auto first = in.get<std::uint32_t>("pair index");
            const auto second = in.get<std::uint32_t>("pair index");
            const auto angle = in.get<double>("pair angle");
            pairs.push_back({static_cast<Index>(first), static_cast<Index>(second), angle});
        }
        try {
            stages.emplace_back(static_cast<Index>(dim), std::move(pairs));
        } catch (const InvalidArgument& e) {
            throw corrupt(at, std::string("stage ") + std::to_string(s) + ": " + e.what());
        }
    }
    if (in.remaining() != 0) throw corrupt(in.pos(), std::to_string(in.remaining()) + " trailing bytes");
    try {
        model.transform = FactoredTransform(std::move(center), std::move(stages));
    } catch (const InvalidArgument& e) {
        throw corrupt(0, e.what());
    }
    return model;
}

void save_codes(const BinaryCodeSet& codes, const fs::path& path) {
    ByteWriter out;
    out.reserve(24 + 8 * codes.words().size());
    out.put_bytes("PRHCODES", 8);
    out.put(kCodesFormatVersion);
    out.put(static_cast<std::uint32_t>(codes.n_bits()));
    out.put(static_cast<std::uint64_t>(codes.count()));
    for (auto w : codes.words()) out.put(w);
    spill(out.bytes(), path);
}

BinaryCodeSet load_codes(const fs::path& path) {
    const auto bytes = slurp(path);
    ByteReader in(bytes);
    expect_magic(in, "PRHCODES");
    const auto version = in.get<std::uint32_t>("version");
    if (version != kCodesFormatVersion) {
        throw FormatError(Kind::VersionMismatch, 8, "code format version " + std::to_string(version) +
                                                        ", this build reads " +
                                                        std::to_string(kCodesFormatVersion));
    }
    const auto n_bits = in.get<std::uint32_t>("n_bits");
    if (n_bits == 0) throw FormatError(Kind::Corrupt, 12, "n_bits must be positive");
    const auto count = in.get<std::uint64_t>("count");
    const std::uint64_t per = static_cast<std::uint64_t>(words_for_bits(n_bits));
    if (count > in.remaining() / 8 / per) {
        throw FormatError(Kind::Truncated, in.pos(),
                          "header declares " + std::to_string(count) + " codes, file holds " +
                              std::to_string(in.remaining() / 8 / per));
    }
    std::vector<std::uint64_t> words(static_cast<std::size_t>(count * per));
    for (auto& w : words) w = in.get<std::uint64_t>("code word");
    if (in.remaining() != 0) {
        throw FormatError(Kind::Corrupt, in.pos(), std::to_string(in.remaining()) + " trailing bytes");
    }
    try {
        return BinaryCodeSet(static_cast<Index>(n_bits), static_cast<Index>(count), std::move(words));
    } catch (const InvalidArgument& e) {
        throw FormatError(Kind::Corrupt, 24, e.what());
    }
}

}  // namespace prh
