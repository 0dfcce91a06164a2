#include "prh/eval.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <queue>

#include "prh/codec.hpp"

namespace prh {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Candidate {
    double distance;
    Index index;
    bool operator<(const Candidate& o) const {
        return distance != o.distance ? distance < o.distance : index < o.index;
    }
};

Index max_R(const std::vector<Index>& R_values) {
    if (R_values.empty()) throw InvalidArgument("R_values must not be empty");
    for (Index r : R_values) {
        if (r < 1) throw InvalidArgument("R values must be >= 1");
    }
    return *std::max_element(R_values.begin(), R_values.end());
}

}  // namespace

GroundTruth ground_truth(const Eigen::Ref<const RowMatrixXd>& db, const Eigen::Ref<const RowMatrixXd>& queries,
                         Index k) {
    if (db.cols() != queries.cols()) throw DimensionMismatch("ground_truth", db.cols(), queries.cols());
    if (k < 1) throw InvalidArgument("ground_truth: k must be >= 1");
    if (k > db.rows()) {
        throw InvalidArgument("ground_truth: k = " + std::to_string(k) + " exceeds database size " +
                              std::to_string(db.rows()));
    }
    GroundTruth gt{k, IdMatrix(queries.rows(), k)};
    Eigen::VectorXd dist(db.rows());
    for (Index q = 0; q < queries.rows(); ++q) {
        dist = (db.rowwise() - queries.row(q)).rowwise().squaredNorm();
        std::priority_queue<Candidate> heap;
        for (Index i = 0; i < db.rows(); ++i) {
            const Candidate c{dist(i), i};
            if (static_cast<Index>(heap.size()) < k) {
                heap.push(c);
            } else if (c < heap.top()) {
                heap.pop();
                heap.push(c);
            }
        }
        for (Index r = k - 1; r >= 0; --r) {
            gt.ids(q, r) = static_cast<std::int32_t>(heap.top().index);
            heap.pop();
        }
    }
    return gt;
}

RecallCurve recall_curve(const IdMatrix& retrieved, const GroundTruth& truth, const std::vector<Index>& R_values) {
    const Index depth = max_R(R_values);
    if (retrieved.cols() < depth) {
        throw InvalidArgument("recall_curve: retrieval depth " + std::to_string(retrieved.cols()) +
                              " is below max R " + std::to_string(depth));
    }
    if (retrieved.rows() != truth.ids.rows()) {
        throw DimensionMismatch("recall_curve queries", truth.ids.rows(), retrieved.rows());
    }
    const Index nq = retrieved.rows();
    std::vector<double> hits_at(R_values.size(), 0.0);
    std::vector<Index> cumulative(static_cast<std::size_t>(depth));
    for (Index q = 0; q < nq; ++q) {
        Index hits = 0;
        for (Index r = 0; r < depth; ++r) {
            const auto id = retrieved(q, r);
            for (Index t = 0; t < truth.k; ++t) {
                if (truth.ids(q, t) == id) {
                    ++hits;
                    break;
                }
            }
            cumulative[static_cast<std::size_t>(r)] = hits;
        }
        for (std::size_t i = 0; i < R_values.size(); ++i) {
            hits_at[i] += static_cast<double>(cumulative[static_cast<std::size_t>(R_values[i] - 1)]);
        }
    }
    RecallCurve curve{R_values, {}};
    const double denom = static_cast<double>(nq) * static_cast<double>(truth.k);
    for (double h : hits_at) curve.recall.push_back(nq == 0 ? 0.0 : h / denom);
    return curve;
}

void BenchConfig::validate() const {
    learner.validate();
    max_R(R_values);
    if (k < 1) throw InvalidArgument("BenchConfig: k must be >= 1");
    if (const auto* toy = std::get_if<ToyParams>(&source)) toy->validate();
}

nlohmann::json to_json(const LearnerConfig& config) {
    nlohmann::json j;
    j["mode"] = to_string(config.mode);
    j["lambda"] = config.lambda;
    j["iso_stages"] = config.iso_stages ? nlohmann::json(*config.iso_stages) : nlohmann::json("default");
    j["pca_stages"] = config.pca_stages ? nlohmann::json(*config.pca_stages) : nlohmann::json("default");
    j["seed"] = config.seed;
    j["center"] = config.center;
    return j;
}

nlohmann::json to_json(const ToyParams& params) {
    return {{"dim", params.dim},         {"log_var", params.log_var}, {"log_mean", params.log_mean},
            {"n_train", params.n_train}, {"n_query", params.n_query}, {"n_db", params.n_db},
            {"seed", params.seed}};
}

nlohmann::json to_json(const BenchConfig& config) {
    nlohmann::json j;
    if (const auto* toy = std::get_if<ToyParams>(&config.source)) {
        j["source"] = {{"kind", "toy"}, {"params", to_json(*toy)}};
    } else {
        const auto& files = std::get<FileSource>(config.source);
        j["source"] = {{"kind", "files"},
                       {"train", files.train.string()},
                       {"query", files.query.string()},
                       {"db", files.db.string()}};
    }
    j["learner"] = to_json(config.learner);
    j["R"] = config.R_values;
    j["k"] = config.k;
    j["rng"] = std::string(Rng::kAlgorithm);
    return j;
}

BenchData load_bench_data(const BenchConfig& config) {
    if (const auto* toy = std::get_if<ToyParams>(&config.source)) {
        auto d = gen_toy(*toy);
        return {std::move(d.train), std::move(d.query), std::move(d.db)};
    }
    const auto& files = std::get<FileSource>(config.source);
    BenchData data{read_vectors(files.train).cast<double>(), read_vectors(files.query).cast<double>(),
                   read_vectors(files.db).cast<double>()};
    if (data.train.cols() != data.db.cols() || data.query.cols() != data.db.cols()) {
        throw InvalidArgument("benchmark files disagree on dimension");
    }
    return data;
}

RecallReport evaluate_transform(const FactoredTransform& t, const BenchData& data,
                                const std::vector<Index>& R_values, const GroundTruth& truth) {
    const Index depth = max_R(R_values);
    if (depth > data.db.rows()) {
        throw InvalidArgument("max R " + std::to_string(depth) + " exceeds database size " +
                              std::to_string(data.db.rows()));
    }
    RecallReport report;
    report.cost_per_vector = multiply_count(t);
    report.stages = t.stages().size();
    report.parity = t.parity();

    auto start = Clock::now();
    const BinaryCodeSet db_codes = encode(t, data.db, &report.encode_ops);
    const BinaryCodeSet query_codes = encode(t, data.query, &report.encode_ops);
    report.seconds.encode = seconds_since(start);
    report.encoded_vectors = data.db.rows() + data.query.rows();

    start = Clock::now();
    const IdMatrix ranked = search(query_codes, db_codes, depth);
    report.seconds.search = seconds_since(start);

    report.curve = recall_curve(ranked, truth, R_values);
    return report;
}

RecallReport run_benchmark(const BenchData& data, const LearnerConfig& learner,
                           const std::vector<Index>& R_values, const GroundTruth& truth) {
    auto start = Clock::now();
    LearnTrace trace;
    // Srr does not need the covariance; skip the trace so it stays data-light.
    LearnTrace* want = learner.mode == LearnMode::Srr ? nullptr : &trace;
    const FactoredTransform t = learn(data.train, learner, want);
    const double learn_seconds = seconds_since(start);

    RecallReport report = evaluate_transform(t, data, R_values, truth);
    report.seconds.learn = learn_seconds;
    for (const auto& s : trace.stages) report.learn_loop_ops += s.loop_ops;
    report.config = {{"learner", to_json(learner)}, {"R", R_values}, {"k", truth.k}};
    return report;
}

RecallReport run_benchmark(const BenchConfig& config) {
    config.validate();
    const BenchData data = load_bench_data(config);
    auto start = Clock::now();
    const GroundTruth truth = ground_truth(data.db, data.query, config.k);
    const double gt_seconds = seconds_since(start);
    RecallReport report = run_benchmark(data, config.learner, config.R_values, truth);
    report.seconds.ground_truth = gt_seconds;
    report.config = to_json(config);
    return report;
}

void write_report(const RecallReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, 0, "cannot create " + path.string());
    auto line = [&](nlohmann::json j) { out << j.dump() << '\n'; };
    nlohmann::json cfg = report.config;
    cfg["record"] = "config";
    line(cfg);
    const bool pipeline = report.encoded_vectors > 0;
    if (pipeline) {
        line({{"record", "transform"},
              {"stages", report.stages},
              {"fill_ins_per_vector", report.cost_per_vector.fill_ins},
              {"multiplies_per_vector", report.cost_per_vector.multiplies},
              {"additions_per_vector", report.cost_per_vector.additions},
              {"parity", report.parity}});
        line({{"record", "ops"},
              {"encoded_vectors", report.encoded_vectors},
              {"encode_multiplies", report.encode_ops.multiplies},
              {"encode_additions", report.encode_ops.additions},
              {"encode_subtractions", report.encode_ops.subtractions},
              {"learn_loop_multiplies", report.learn_loop_ops.multiplies},
              {"learn_loop_additions", report.learn_loop_ops.additions}});
    }
    for (std::size_t i = 0; i < report.curve.R_values.size(); ++i) {
        line({{"record", "recall"}, {"R", report.curve.R_values[i]}, {"recall", report.curve.recall[i]}});
    }
    const std::pair<const char*, double> phases[] = {{"ground_truth", report.seconds.ground_truth},
                                                     {"learn", report.seconds.learn},
                                                     {"encode", report.seconds.encode},
                                                     {"search", report.seconds.search}};
    for (const auto& [phase, secs] : phases) {
        if (pipeline || secs > 0.0) line({{"record", "timing"}, {"phase", phase}, {"seconds", secs}});
    }
    if (!out) throw FormatError(FormatError::Kind::Io, 0, "write failed for " + path.string());
}

void write_recall_csv(const RecallCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError(FormatError::Kind::Io, 0, "cannot create " + path.string());
    out.precision(17);
    out << "R,recall\n";
    for (std::size_t i = 0; i < curve.R_values.size(); ++i) out << curve.R_values[i] << ',' << curve.recall[i] << '\n';
    if (!out) throw FormatError(FormatError::Kind::Io, 0, "write failed for " + path.string());
}

}  // namespace prh
