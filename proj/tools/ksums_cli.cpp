// Command-line front end: cluster one dataset, benchmark an algorithm
// matrix, generate synthetic blobs, or re-evaluate a labels file.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ksums/ksums.hpp"

namespace {

struct InputArgs {
    std::string path;
    std::string format = "auto";
    bool labels_last = false;
    bool normalize = false;
};

struct RunArgs {
    std::size_t k = 2;
    std::string metric = "l2";
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::size_t max_iters = 100;
    std::size_t min_moves = 0;
    std::string bisect_split = "size";
};

void add_input_options(CLI::App* cmd, InputArgs& args) {
    cmd->add_option("--in", args.path, "input dataset path")->required();
    cmd->add_option("--format", args.format,
                    "input format: fvecs|bvecs|csv|sparse-triplet (default: by extension)");
    cmd->add_flag("--labels-last", args.labels_last,
                  "CSV only: final integer column is the ground-truth class");
    cmd->add_flag("--normalize", args.normalize, "l2-normalize rows before clustering");
}

void add_run_options(CLI::App* cmd, RunArgs& args) {
    cmd->add_option("--k", args.k, "number of clusters")->required();
    cmd->add_option("--metric", args.metric, "l2|cosine");
    cmd->add_option("--seed", args.seed, "base RNG seed; run r uses seed + r");
    cmd->add_option("--runs", args.runs, "number of seeded repetitions");
    cmd->add_option("--max-iters", args.max_iters, "iteration cap per run");
    cmd->add_option("--min-moves", args.min_moves,
                    "converge when a pass makes at most this many moves");
    cmd->add_option("--bisect-split", args.bisect_split,
                    "bisecting split selection: size|loose");
}

ksums::Metric parse_metric(const std::string& name) {
    if (name == "l2") return ksums::Metric::SquaredL2;
    if (name == "cosine") return ksums::Metric::Cosine;
    throw ksums::ConfigError("unknown metric '" + name + "'");
}

ksums::BisectSplitRule parse_split(const std::string& name) {
    if (name == "size") return ksums::BisectSplitRule::LargestSize;
    if (name == "loose") return ksums::BisectSplitRule::MostLoose;
    throw ksums::ConfigError("unknown bisect split rule '" + name + "'");
}

ksums::FileFormat resolve_format(const InputArgs& args) {
    return args.format == "auto" ? ksums::format_from_path(args.path)
                                 : ksums::format_from_name(args.format);
}

ksums::Dataset load_input(const InputArgs& args, ksums::Metric metric) {
    ksums::LoadOptions options;
    options.labels_last = args.labels_last;
    options.normalize = args.normalize;
    ksums::Dataset data = ksums::load(args.path, resolve_format(args), options);
    if (metric == ksums::Metric::Cosine) {
        data.validate_for_metric(metric);
        if (!args.normalize && data.max_unit_norm_deviation() > 1e-6)
            throw ksums::ConfigError(
                "cosine runs need --normalize or already unit-norm rows");
    }
    return data;
}

int run_cluster(const InputArgs& input, const RunArgs& run_args,
                const std::string& algo_name, const std::string& out_labels,
                const std::string& out_history, const std::string& out_report) {
    ksums::ExperimentSpec spec;
    spec.algo = ksums::algorithm_from_name(algo_name);
    spec.k = run_args.k;
    spec.metric = parse_metric(run_args.metric);
    spec.seed = run_args.seed;
    spec.runs = run_args.runs;
    spec.max_iters = run_args.max_iters;
    spec.min_moves = run_args.min_moves;
    spec.bisect_split = parse_split(run_args.bisect_split);
    spec.out_labels = out_labels;
    spec.out_history = out_history;
    spec.out_report = out_report;

    const ksums::Dataset data = load_input(input, spec.metric);
    const ksums::ExperimentResult result = ksums::run_experiment(data, spec);
    const auto& best = result.summaries[result.best_run];
    std::printf("best run %zu (seed %llu): E_m=%.6g E_s=%.6g", best.run,
                static_cast<unsigned long long>(best.seed), best.e_m, best.e_s);
    if (best.entropy) std::printf(" entropy=%.6g", *best.entropy);
    std::printf(" k_effective=%zu\n", result.best_report.k_effective);
    return 0;
}

int run_bench_cmd(const InputArgs& input, const RunArgs& run_args,
                  const std::vector<std::string>& algo_names,
                  const std::string& out_history, const std::string& out_report) {
    ksums::BenchSpec spec;
    for (const auto& name : algo_names)
        spec.algos.push_back(ksums::algorithm_from_name(name));
    spec.k = run_args.k;
    spec.metric = parse_metric(run_args.metric);
    spec.seed = run_args.seed;
    spec.runs = run_args.runs;
    spec.max_iters = run_args.max_iters;
    spec.min_moves = run_args.min_moves;
    spec.bisect_split = parse_split(run_args.bisect_split);
    spec.out_history = out_history;
    spec.out_report = out_report;

    const ksums::Dataset data = load_input(input, spec.metric);
    ksums::run_bench(data, spec);
    return 0;
}

int run_gen(std::size_t n, std::size_t d, std::size_t k_true, double separation,
            std::uint64_t seed, const std::string& out, const std::string& format,
            bool labels_last) {
    const ksums::Dataset data =
        ksums::generate_synthetic(n, d, k_true, separation, seed);
    const ksums::FileFormat fmt = format == "auto" ? ksums::format_from_path(out)
                                                   : ksums::format_from_name(format);
    if (fmt == ksums::FileFormat::Fvecs) {
        if (labels_last)
            throw ksums::ConfigError("--labels-last needs --format csv");
        ksums::write_fvecs(data, out);
    } else if (fmt == ksums::FileFormat::Csv) {
        ksums::write_csv(data, out, labels_last);
    } else {
        throw ksums::ConfigError("gen writes fvecs or csv");
    }
    return 0;
}

int run_eval(const InputArgs& input, const std::string& labels_path,
             const std::string& out_report) {
    const ksums::Dataset data = load_input(input, ksums::Metric::SquaredL2);
    const ksums::ClusterState state = ksums::state_from_labels_csv(data, labels_path);
    const ksums::QualityReport report = ksums::evaluate(data, state);

    std::string out = "k_effective,E_m,E_s,entropy\n";
    out += std::to_string(report.k_effective);
    out.push_back(',');
    ksums::detail::append_number(out, report.e_m);
    out.push_back(',');
    ksums::detail::append_number(out, report.e_s);
    out.push_back(',');
    if (report.entropy) ksums::detail::append_number(out, *report.entropy);
    out.push_back('\n');
    if (out_report.empty()) {
        std::cout << out;
    } else {
        ksums::detail::write_text_file(out_report, out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"k-sums clustering library and benchmark CLI"};
    app.require_subcommand(1);

    InputArgs input;
    RunArgs run_args;
    std::string algo = "ksums-im";
    std::vector<std::string> bench_algos;
    std::string out_labels, out_history, out_report;

    CLI::App* cluster = app.add_subcommand("cluster", "run one algorithm on one dataset");
    add_input_options(cluster, input);
    add_run_options(cluster, run_args);
    cluster->add_option("--algo", algo,
                        "ksums-im|ksums-is|lloyd|kmeans++|hartigan|seq-ksums|"
                        "seq-kmeans|bisect-ksums-im|bisect-ksums-is");
    cluster->add_option("--out-labels", out_labels, "labels CSV for the best run");
    cluster->add_option("--out-history", out_history, "per-iteration history CSV");
    cluster->add_option("--out-report", out_report, "per-run report CSV");

    CLI::App* bench = app.add_subcommand("bench", "run an algorithm matrix on one dataset");
    add_input_options(bench, input);
    add_run_options(bench, run_args);
    bench->add_option("--algo", bench_algos, "algorithms (repeat or comma-separate)")
        ->required()
        ->delimiter(',');
    bench->add_option("--out-history", out_history, "combined history CSV")->required();
    bench->add_option("--out-report", out_report, "combined report CSV");

    std::size_t gen_n = 1000, gen_d = 2, gen_k = 1;
    double gen_sep = 10.0;
    std::uint64_t gen_seed = 0;
    std::string gen_out, gen_format = "auto";
    bool gen_labels_last = false;
    CLI::App* gen = app.add_subcommand("gen", "generate synthetic Gaussian blobs");
    gen->add_option("--n", gen_n, "sample count")->required();
    gen->add_option("--d", gen_d, "dimensionality")->required();
    gen->add_option("--k-true", gen_k, "number of blobs")->required();
    gen->add_option("--separation", gen_sep, "center hypercube side length");
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "output path")->required();
    gen->add_option("--format", gen_format, "fvecs|csv (default: by extension)");
    gen->add_flag("--labels-last", gen_labels_last,
                  "CSV only: append the blob id as a class column");

    std::string eval_labels;
    CLI::App* eval = app.add_subcommand("eval", "recompute metrics for a labels file");
    add_input_options(eval, input);
    eval->add_option("--labels", eval_labels, "labels CSV (index,cluster)")->required();
    eval->add_option("--out-report", out_report, "report CSV (default: stdout)");

    try {
        app.parse(argc, argv);
        if (cluster->parsed())
            return run_cluster(input, run_args, algo, out_labels, out_history, out_report);
        if (bench->parsed())
            return run_bench_cmd(input, run_args, bench_algos, out_history, out_report);
        if (gen->parsed())
            return run_gen(gen_n, gen_d, gen_k, gen_sep, gen_seed, gen_out, gen_format,
                           gen_labels_last);
        return run_eval(input, eval_labels, out_report);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const ksums::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const ksums::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const ksums::DegenerateClusterError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
