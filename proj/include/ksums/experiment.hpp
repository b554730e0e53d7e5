#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/io.hpp"
#include "ksums/metrics.hpp"
#include "ksums/optimizer.hpp"
#include "ksums/variants.hpp"

namespace ksums {

enum class Algorithm {
    KSumsIm,
    KSumsIs,
    Lloyd,
    KMeansPP,
    Hartigan,
    SeqKSums,
    SeqKMeans,
    BisectKSumsIm,
    BisectKSumsIs,
};

inline const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::KSumsIm: return "ksums-im";
        case Algorithm::KSumsIs: return "ksums-is";
        case Algorithm::Lloyd: return "lloyd";
        case Algorithm::KMeansPP: return "kmeans++";
        case Algorithm::Hartigan: return "hartigan";
        case Algorithm::SeqKSums: return "seq-ksums";
        case Algorithm::SeqKMeans: return "seq-kmeans";
        case Algorithm::BisectKSumsIm: return "bisect-ksums-im";
        default: return "bisect-ksums-is";
    }
}

inline Algorithm algorithm_from_name(std::string_view name) {
    for (Algorithm a :
         {Algorithm::KSumsIm, Algorithm::KSumsIs, Algorithm::Lloyd,
          Algorithm::KMeansPP, Algorithm::Hartigan, Algorithm::SeqKSums,
          Algorithm::SeqKMeans, Algorithm::BisectKSumsIm, Algorithm::BisectKSumsIs})
        if (name == to_string(a)) return a;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

inline bool supports_cosine(Algorithm a) {
    switch (a) {
        case Algorithm::KSumsIm:
        case Algorithm::KSumsIs:
        case Algorithm::SeqKSums:
        case Algorithm::BisectKSumsIm:
        case Algorithm::BisectKSumsIs: return true;
        default: return false;
    }
}

// Runs selected by the pairwise objective are ranked by E_s; everything else
// by E_m.
inline bool selects_by_es(Algorithm a) {
    return a == Algorithm::KSumsIs || a == Algorithm::BisectKSumsIs;
}

struct ExperimentSpec {
    Algorithm algo = Algorithm::KSumsIm;
    std::size_t k = 1;
    Metric metric = Metric::SquaredL2;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::size_t max_iters = 100;
    std::size_t min_moves = 0;
    BisectSplitRule bisect_split = BisectSplitRule::LargestSize;
    std::string out_labels;   // empty: skip the file
    std::string out_history;
    std::string out_report;
};

struct RunSummary {
    std::size_t run = 0;
    std::uint64_t seed = 0;
    std::size_t iters = 0;
    double e_m = 0.0;
    double e_s = 0.0;
    std::optional<double> entropy;
};

struct ExperimentResult {
    std::vector<RunSummary> summaries;
    std::vector<ObjectiveHistory> histories;
    std::size_t best_run = 0;
    ClusterState best_state;
    QualityReport best_report;
};

inline RunResult run_algorithm(const Dataset& data, Algorithm algo, std::size_t k,
                               Metric metric, std::uint64_t seed,
                               std::size_t max_iters, std::size_t min_moves = 0,
                               BisectSplitRule split = BisectSplitRule::LargestSize) {
    if (metric == Metric::Cosine && !supports_cosine(algo))
        throw ConfigError(std::string("algorithm '") + to_string(algo) +
                          "' supports only the l2 metric");
    RunConfig cfg;
    cfg.k = k;
    cfg.metric = metric;
    cfg.seed = seed;
    cfg.max_iters = max_iters;
    cfg.min_moves = min_moves;
    switch (algo) {
        case Algorithm::KSumsIm:
            cfg.objective = Objective::Im;
            return run(data, cfg);
        case Algorithm::KSumsIs:
            cfg.objective = Objective::Is;
            return run(data, cfg);
        case Algorithm::Lloyd:
            return lloyd_kmeans(data, k, Seeding::RandomSamples, seed, max_iters);
        case Algorithm::KMeansPP:
            return lloyd_kmeans(data, k, Seeding::KMeansPP, seed, max_iters);
        case Algorithm::Hartigan:
            return hartigan_run(data, k, seed, max_iters);
        case Algorithm::SeqKSums:
            return sequential_ksums(data, k, metric, seed);
        case Algorithm::SeqKMeans:
            return sequential_kmeans(data, k, seed);
        case Algorithm::BisectKSumsIm:
            cfg.objective = Objective::Im;
            return bisecting_run(data, k, cfg, split);
        default:
            cfg.objective = Objective::Is;
            return bisecting_run(data, k, cfg, split);
    }
}

namespace detail {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw DataError("write failed for '" + path + "'");
}

inline void append_history_rows(std::string& out, const ObjectiveHistory& history,
                                std::size_t run, const char* algo_prefix) {
    for (const auto& rec : history.per_iteration) {
        if (algo_prefix) {
            out += algo_prefix;
            out.push_back(',');
        }
        out += std::to_string(run);
        out.push_back(',');
        out += std::to_string(rec.iter);
        out.push_back(',');
        append_number(out, rec.e_m);
        out.push_back(',');
        append_number(out, rec.e_s);
        out.push_back(',');
        out += std::to_string(rec.moves);
        out.push_back(',');
        append_number(out, rec.elapsed_ms);
        out.push_back('\n');
    }
}

inline void append_report_row(std::string& out, const RunSummary& s, bool selected,
                              const char* algo_prefix) {
    if (algo_prefix) {
        out += algo_prefix;
        out.push_back(',');
    }
    out += std::to_string(s.run);
    out.push_back(',');
    out += std::to_string(s.seed);
    out.push_back(',');
    out += std::to_string(s.iters);
    out.push_back(',');
    append_number(out, s.e_m);
    out.push_back(',');
    append_number(out, s.e_s);
    out.push_back(',');
    if (s.entropy) append_number(out, *s.entropy);
    out.push_back(',');
    out += selected ? "1" : "0";
    out.push_back('\n');
}

}  // namespace detail

inline void write_labels_csv(const std::string& path, const ClusterState& state) {
    std::string out = "index,cluster\n";
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        out += std::to_string(i);
        out.push_back(',');
        out += std::to_string(state.labels[i]);
        out.push_back('\n');
    }
    detail::write_text_file(path, out);
}

// Executes `runs` seeded runs (seeds spec.seed + 0 .. runs-1), writes the
// labels of the best run, the per-iteration history of every run, and a
// per-run report with the selected run flagged.
inline ExperimentResult run_experiment(const Dataset& data, const ExperimentSpec& spec) {
    if (spec.runs < 1) throw ConfigError("runs must be >= 1");
    ExperimentResult result;
    double best_value = 0.0;
    const bool by_es = selects_by_es(spec.algo);

    for (std::size_t r = 0; r < spec.runs; ++r) {
        const std::uint64_t run_seed = spec.seed + r;
        RunResult run_result =
            run_algorithm(data, spec.algo, spec.k, spec.metric, run_seed,
                          spec.max_iters, spec.min_moves, spec.bisect_split);
        const IterationRecord& last = run_result.history.per_iteration.back();
        RunSummary summary{r, run_seed, run_result.history.per_iteration.size(),
                           last.e_m, last.e_s, std::nullopt};
        if (data.has_labels_true() && data.class_count() >= 2)
            summary.entropy = eval_entropy(run_result.state, data.labels_true(),
                                           data.class_count());
        const double value = by_es ? last.e_s : last.e_m;
        if (r == 0 || value < best_value) {
            best_value = value;
            result.best_run = r;
            result.best_state = std::move(run_result.state);
        }
        result.summaries.push_back(summary);
        result.histories.push_back(std::move(run_result.history));
    }
    result.best_report = evaluate(data, result.best_state);

    if (!spec.out_labels.empty()) write_labels_csv(spec.out_labels, result.best_state);
    if (!spec.out_history.empty()) {
        std::string out = "run,iter,E_m,E_s,moves,elapsed_ms\n";
        for (std::size_t r = 0; r < result.histories.size(); ++r)
            detail::append_history_rows(out, result.histories[r], r, nullptr);
        detail::write_text_file(spec.out_history, out);
    }
    if (!spec.out_report.empty()) {
        std::string out = "run,seed,iters,E_m,E_s,entropy,selected\n";
        for (const auto& s : result.summaries)
            detail::append_report_row(out, s, s.run == result.best_run, nullptr);
        detail::write_text_file(spec.out_report, out);
    }
    return result;
}

struct BenchSpec {
    std::vector<Algorithm> algos;
    std::size_t k = 1;
    Metric metric = Metric::SquaredL2;
    std::uint64_t seed = 0;
    std::size_t runs = 1;
    std::size_t max_iters = 100;
    std::size_t min_moves = 0;
    BisectSplitRule bisect_split = BisectSplitRule::LargestSize;
    std::string out_history;
    std::string out_report;
};

// Runs the algorithm matrix on one dataset and writes combined per-iteration
// history (and optionally a combined report) with a leading algo column.
inline void run_bench(const Dataset& data, const BenchSpec& spec) {
    if (spec.algos.empty()) throw ConfigError("bench needs at least one algorithm");
    std::string history = "algo,run,iter,E_m,E_s,moves,elapsed_ms\n";
    std::string report = "algo,run,seed,iters,E_m,E_s,entropy,selected\n";
    for (const Algorithm algo : spec.algos) {
        ExperimentSpec one;
        one.algo = algo;
        one.k = spec.k;
        one.metric = spec.metric;
        one.seed = spec.seed;
        one.runs = spec.runs;
        one.max_iters = spec.max_iters;
        one.min_moves = spec.min_moves;
        one.bisect_split = spec.bisect_split;
        const ExperimentResult result = run_experiment(data, one);
        for (std::size_t r = 0; r < result.histories.size(); ++r)
            detail::append_history_rows(history, result.histories[r], r, to_string(algo));
        for (const auto& s : result.summaries)
            detail::append_report_row(report, s, s.run == result.best_run,
                                      to_string(algo));
    }
    if (!spec.out_history.empty()) detail::write_text_file(spec.out_history, history);
    if (!spec.out_report.empty()) detail::write_text_file(spec.out_report, report);
}

// Reads a labels CSV ("index,cluster" with a header row) back into a
// ClusterState consistent with the dataset.
inline ClusterState state_from_labels_csv(const Dataset& data, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::uint32_t> labels(data.size(), 0);
    std::vector<bool> seen(data.size(), false);
    std::uint32_t max_label = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view(line);
        detail::trim(view);
        if (view.empty()) continue;
        if (line_no == 1) continue;  // header
        const std::string where = path + ":" + std::to_string(line_no);
        const auto comma = view.find(',');
        if (comma == std::string_view::npos)
            throw DataError(where + ": expected 'index,cluster'");
        const auto idx = detail::parse_number<std::size_t>(view.substr(0, comma), where);
        const auto cluster =
            detail::parse_number<std::uint32_t>(view.substr(comma + 1), where);
        if (idx >= data.size()) throw DataError(where + ": index out of range");
        if (cluster >= data.size())
            throw DataError(where + ": cluster id exceeds the sample count");
        if (seen[idx]) throw DataError(where + ": duplicate index");
        seen[idx] = true;
        labels[idx] = cluster;
        max_label = std::max(max_label, cluster);
    }
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!seen[i])
            throw DataError(path + ": missing label for sample " + std::to_string(i));

    ClusterState state;
    state.k = static_cast<std::size_t>(max_label) + 1;
    state.dim = data.dim();
    state.labels = std::move(labels);
    state.comp.assign(state.k * data.dim(), 0.0);
    state.sizes.assign(state.k, 0);
    state.comp_sq_norms.assign(state.k, 0.0);
    state.member_sq_sums.assign(state.k, 0.0);
    refresh_composites(state, data);
    return state;
}

}  // namespace ksums
