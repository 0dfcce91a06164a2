#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "prh/analytic.hpp"
#include "prh/codec.hpp"
#include "prh/dataio.hpp"
#include "prh/eval.hpp"
#include "prh/learn.hpp"
#include "prh/rng.hpp"

namespace prh::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Bad flags or flag combinations; reported as a usage error.
class UsageError : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

struct Options {
    // learner
    std::string mode = "iso";
    std::optional<double> lambda;
    std::optional<int> iso_stages;
    std::optional<int> pca_stages;
    std::uint64_t seed = 0;
    bool no_center = false;
    // data
    std::string train, db, query;
    std::optional<Index> dim;
    std::optional<double> log_var;
    std::vector<Index> counts;
    // artifacts
    std::string model, codes, out, rankings, gt;
    std::vector<Index> R{1, 10, 100, 1000};
    // analyze
    double lambda1 = 2.0;
    double lambda2 = 1.0;
    int grid = 64;
};

fs::path manifest_path(const fs::path& primary) {
    fs::path p = primary;
    p += ".manifest.json";
    return p;
}

void write_manifest(const fs::path& primary, const std::string& subcommand, const std::vector<std::string>& args,
                    json config, const std::vector<fs::path>& outputs) {
    json m;
    m["tool"] = "prh";
    m["version"] = kToolVersion;
    m["subcommand"] = subcommand;
    m["args"] = args;
    m["config"] = std::move(config);
    m["rng"] = std::string(Rng::kAlgorithm);
    m["outputs"] = json::array();
    for (const auto& o : outputs) m["outputs"].push_back(o.string());
    std::ofstream f(manifest_path(primary), std::ios::trunc);
    if (!f) throw FormatError(FormatError::Kind::Io, 0, "cannot create " + manifest_path(primary).string());
    f << m.dump(2) << '\n';
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

LearnerConfig learner_from(const Options& o) {
    LearnerConfig c;
    try {
        c.mode = parse_learn_mode(o.mode);
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    if (c.mode == LearnMode::Pcat) {
        if (!o.lambda) throw UsageError("--lambda is required for --mode pcat");
        c.lambda = *o.lambda;
    } else if (o.lambda) {
        throw UsageError("--lambda applies to --mode pcat only");
    }
    if (o.pca_stages && c.mode != LearnMode::Rspca) throw UsageError("--pca-stages applies to --mode rspca only");
    c.iso_stages = o.iso_stages;
    c.pca_stages = o.pca_stages;
    c.seed = o.seed;
    c.center = !o.no_center;
    try {
        c.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return c;
}

ToyParams toy_from(const Options& o) {
    ToyParams p;
    if (o.dim) p.dim = *o.dim;
    if (o.log_var) p.log_var = *o.log_var;
    if (!o.counts.empty()) {
        if (o.counts.size() != 3) throw UsageError("--counts takes three values: train,query,db");
        p.n_train = o.counts[0];
        p.n_query = o.counts[1];
        p.n_db = o.counts[2];
    }
    p.seed = o.seed;
    try {
        p.validate();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
    return p;
}

void check_R(const std::vector<Index>& R) {
    if (R.empty()) throw UsageError("--R needs at least one value");
    for (Index r : R) {
        if (r < 1) throw UsageError("--R values must be >= 1");
    }
}

int cmd_gen_toy(const Options& o, const std::vector<std::string>& args) {
    require(o.out, "--out");
    const ToyParams p = toy_from(o);
    const ToyDataset d = gen_toy(p);
    const fs::path prefix = o.out;
    const fs::path train = prefix.string() + ".train.fvecs";
    const fs::path query = prefix.string() + ".query.fvecs";
    const fs::path db = prefix.string() + ".db.fvecs";
    write_vectors(d.train.cast<float>(), train);
    write_vectors(d.query.cast<float>(), query);
    write_vectors(d.db.cast<float>(), db);
    write_manifest(prefix, "gen-toy", args, to_json(p), {train, query, db});
    return 0;
}

int cmd_learn(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    require(o.train, "--train");
    require(o.model, "--model");
    const LearnerConfig config = learner_from(o);
    const RowMatrixXf train = read_vectors(o.train);
    LearnTrace trace;
    const FactoredTransform t = learn(train, config, &trace);
    const Model model = make_model(t, config);
    save_model(model, o.model);
    const auto cost = multiply_count(t);
    json cfg = to_json(config);
    cfg["train"] = o.train;
    cfg["dim"] = t.dim();
    write_manifest(o.model, "learn", args, cfg, {o.model});
    out << "learned " << t.stages().size() << " stages, dim " << t.dim() << ", " << cost.fill_ins
        << " fill-ins; variance ratio " << trace.initial_ratio << " -> "
        << (trace.stages.empty() ? trace.initial_ratio : trace.stages.back().variance_ratio) << '\n';
    return 0;
}

int cmd_encode(const Options& o, const std::vector<std::string>& args) {
    require(o.model, "--model");
    require(o.codes, "--codes");
    if (o.db.empty() == o.query.empty()) throw UsageError("encode takes exactly one of --db or --query as input");
    const std::string input = o.db.empty() ? o.query : o.db;
    const Model model = load_model(o.model);
    const RowMatrixXf data = read_vectors(input);
    if (data.rows() > 0 && data.cols() != model.transform.dim()) {
        throw DimensionMismatch("encode: model vs " + input, model.transform.dim(), data.cols());
    }
    const BinaryCodeSet codes =
        data.rows() == 0 ? BinaryCodeSet(model.transform.dim(), 0) : encode(model.transform, data);
    save_codes(codes, o.codes);
    write_manifest(o.codes, "encode", args, {{"model", o.model}, {"input", input}, {"n_bits", codes.n_bits()}},
                   {o.codes});
    return 0;
}

int cmd_search(const Options& o, const std::vector<std::string>& args) {
    require(o.model, "--model");
    require(o.codes, "--codes");
    require(o.query, "--query");
    require(o.out, "--out");
    check_R(o.R);
    const Model model = load_model(o.model);
    const BinaryCodeSet db = load_codes(o.codes);
    if (db.n_bits() != model.transform.dim()) {
        throw DimensionMismatch("search: model vs codes", model.transform.dim(), db.n_bits());
    }
    const RowMatrixXf query = read_vectors(o.query);
    const Index depth = *std::max_element(o.R.begin(), o.R.end());
    if (depth > db.count()) throw UsageError("max --R exceeds the number of database codes");
    const IdMatrix ranked = search(encode(model.transform, query), db, depth);
    write_ids(ranked, o.out);
    write_manifest(o.out, "search", args, {{"model", o.model}, {"codes", o.codes}, {"query", o.query}, {"depth", depth}},
                   {o.out});
    return 0;
}

int cmd_eval(const Options& o, const std::vector<std::string>& args) {
    require(o.rankings, "--rankings");
    require(o.out, "--out");
    check_R(o.R);
    if (o.gt.empty()) {
        require(o.db, "--db");
        require(o.query, "--query");
    }
    const IdMatrix ranked = read_ids(o.rankings);
    GroundTruth truth;
    RecallReport report;
    if (!o.gt.empty()) {
        truth.ids = read_ids(o.gt);
        truth.k = truth.ids.cols();
    } else {
        const RowMatrixXd db = read_vectors(o.db).cast<double>();
        const RowMatrixXd query = read_vectors(o.query).cast<double>();
        truth = ground_truth(db, query, 10);
    }
    report.curve = recall_curve(ranked, truth, o.R);
    report.config = {{"rankings", o.rankings}, {"R", o.R}, {"k", truth.k}};
    if (!o.gt.empty()) {
        report.config["ground_truth"] = o.gt;
    } else {
        report.config["db"] = o.db;
        report.config["query"] = o.query;
    }
    const fs::path csv = fs::path(o.out).replace_extension(".csv");
    write_report(report, o.out);
    write_recall_csv(report.curve, csv);
    write_manifest(o.out, "eval", args, report.config, {o.out, csv});
    return 0;
}

int cmd_bench(const Options& o, const std::vector<std::string>& args, std::ostream& out) {
    require(o.out, "--out");
    check_R(o.R);
    const bool files = !o.train.empty() || !o.db.empty() || !o.query.empty();
    const bool generator = o.dim || o.log_var || !o.counts.empty();
    if (files && generator) throw UsageError("--train/--db/--query and --dim/--log-var/--counts are mutually exclusive");
    BenchConfig config;
    config.learner = learner_from(o);
    config.R_values = o.R;
    if (files) {
        require(o.train, "--train");
        require(o.db, "--db");
        require(o.query, "--query");
        config.source = FileSource{o.train, o.query, o.db};
    } else {
        config.source = toy_from(o);
    }
    const RecallReport report = run_benchmark(config);
    const fs::path csv = fs::path(o.out).replace_extension(".csv");
    write_report(report, o.out);
    write_recall_csv(report.curve, csv);
    write_manifest(o.out, "bench", args, to_json(config), {o.out, csv});
    for (std::size_t i = 0; i < report.curve.R_values.size(); ++i) {
        out << "recall@" << report.curve.R_values[i] << " = " << report.curve.recall[i] << '\n';
    }
    return 0;
}

int cmd_analyze(const Options& o, const std::vector<std::string>& args) {
    require(o.out, "--out");
    if (!(o.lambda2 > 0.0) || !(o.lambda1 >= o.lambda2)) throw UsageError("need --lambda1 >= --lambda2 > 0");
    if (o.grid < 2) throw UsageError("--grid must be >= 2");
    const auto curve = tradeoff_curve(o.lambda1, o.lambda2, o.grid);
    std::ofstream f(o.out, std::ios::trunc);
    if (!f) throw FormatError(FormatError::Kind::Io, 0, "cannot create " + o.out);
    f << std::setprecision(17) << "theta,qerr,entropy_nats,entropy_bits\n";
    for (const auto& p : curve) f << p.theta << ',' << p.qerr << ',' << p.entropy << ',' << p.entropy / std::numbers::ln2 << '\n';
    f.close();
    if (!f) throw FormatError(FormatError::Kind::Io, 0, "write failed for " + o.out);
    write_manifest(o.out, "analyze", args, {{"lambda1", o.lambda1}, {"lambda2", o.lambda2}, {"grid", o.grid}}, {o.out});
    return 0;
}

void add_learner_flags(CLI::App* sub, Options& o) {
    sub->add_option("--mode", o.mode, "Learner: iso | pcat | rspca | srr")
        ->check(CLI::IsMember({"iso", "pcat", "rspca", "srr"}));
    sub->add_option("--lambda", o.lambda, "PCA tilt in [0, 1] (pcat only)");
    sub->add_option("--iso-stages", o.iso_stages, "Basic rotations (default ceil(log2 n))");
    sub->add_option("--pca-stages", o.pca_stages, "Extra random PCA rotations for rspca (default ceil(log2 n))");
    sub->add_option("--seed", o.seed, "Random seed");
    sub->add_flag("--no-center", o.no_center, "Do not subtract the training mean");
}

void add_generator_flags(CLI::App* sub, Options& o) {
    sub->add_option("--dim", o.dim, "Toy data dimension (default 128)");
    sub->add_option("--log-var", o.log_var, "Variance of the log-eigenvalues (default 3)");
    sub->add_option("--counts", o.counts, "train,query,db sizes (default 10000,2000,100000)")->delimiter(',');
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pairwise rotation hashing: sparse learned rotations for binary codes"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("gen-toy", "Generate a rotated log-normal gaussian dataset");
    add_generator_flags(gen, o);
    gen->add_option("--seed", o.seed, "Random seed");
    gen->add_option("--out", o.out, "Output prefix")->required();

    auto* learn_cmd = app.add_subcommand("learn", "Learn a factored rotation from training vectors");
    add_learner_flags(learn_cmd, o);
    learn_cmd->add_option("--train", o.train, "Training vectors (.fvecs)")->required();
    learn_cmd->add_option("--model", o.model, "Output model file")->required();

    auto* enc = app.add_subcommand("encode", "Encode vectors into packed binary codes");
    enc->add_option("--model", o.model, "Model file")->required();
    enc->add_option("--db", o.db, "Vectors to encode (.fvecs)");
    enc->add_option("--query", o.query, "Vectors to encode (.fvecs)");
    enc->add_option("--codes", o.codes, "Output code file")->required();

    auto* srch = app.add_subcommand("search", "Rank database codes by Hamming distance to each query");
    srch->add_option("--model", o.model, "Model file")->required();
    srch->add_option("--codes", o.codes, "Database code file")->required();
    srch->add_option("--query", o.query, "Query vectors (.fvecs)")->required();
    srch->add_option("--R", o.R, "Recall depths; search depth is the largest")->delimiter(',');
    srch->add_option("--out", o.out, "Output rankings (.ivecs)")->required();

    auto* ev = app.add_subcommand("eval", "Score rankings against exact Euclidean neighbors");
    ev->add_option("--rankings", o.rankings, "Rankings (.ivecs)")->required();
    ev->add_option("--db", o.db, "Database vectors (.fvecs)");
    ev->add_option("--query", o.query, "Query vectors (.fvecs)");
    ev->add_option("--gt", o.gt, "Precomputed ground truth (.ivecs), replaces --db/--query");
    ev->add_option("--R", o.R, "Recall depths")->delimiter(',');
    ev->add_option("--out", o.out, "Report file (.jsonl); a .csv curve is written next to it")->required();

    auto* bench = app.add_subcommand("bench", "Generate or load data, learn, encode, search and score");
    add_learner_flags(bench, o);
    add_generator_flags(bench, o);
    bench->add_option("--train", o.train, "Training vectors (.fvecs)");
    bench->add_option("--db", o.db, "Database vectors (.fvecs)");
    bench->add_option("--query", o.query, "Query vectors (.fvecs)");
    bench->add_option("--R", o.R, "Recall depths")->delimiter(',');
    bench->add_option("--out", o.out, "Report file (.jsonl); a .csv curve is written next to it")->required();

    auto* an = app.add_subcommand("analyze", "Quantization error and entropy of a 2-D gaussian versus angle");
    an->add_option("--lambda1", o.lambda1, "Larger eigenvalue");
    an->add_option("--lambda2", o.lambda2, "Smaller eigenvalue");
    an->add_option("--grid", o.grid, "Number of angles in [0, pi/2]");
    an->add_option("--out", o.out, "Output CSV")->required();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "prh: usage error: " << e.what() << '\n';
        return 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        if (name == "gen-toy") return cmd_gen_toy(o, args);
        if (name == "learn") return cmd_learn(o, args, out);
        if (name == "encode") return cmd_encode(o, args);
        if (name == "search") return cmd_search(o, args);
        if (name == "eval") return cmd_eval(o, args);
        if (name == "bench") return cmd_bench(o, args, out);
        if (name == "analyze") return cmd_analyze(o, args);
    } catch (const UsageError& e) {
        err << "prh " << name << ": usage error: " << e.what() << '\n';
        return 2;
    } catch (const FormatError& e) {
        err << "prh " << name << ": dataio: " << e.what() << '\n';
        return 1;
    } catch (const InvalidArgument& e) {
        err << "prh " << name << ": contract violation: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "prh " << name << ": " << e.what() << '\n';
        return 1;
    }
    return 1;
}

}  // namespace prh::cli
