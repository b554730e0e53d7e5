#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ksums/cluster_state.hpp"
#include "ksums/common.hpp"
#include "ksums/dataset.hpp"

namespace ksums {

struct QualityReport {
    double e_m = 0.0;
    double e_s = 0.0;
    std::optional<double> entropy;
    std::size_t k_effective = 0;
};

namespace detail {

struct RefreshedCaches {
    std::vector<double> comp;          // k * d
    std::vector<std::size_t> sizes;
    std::vector<double> comp_sq;
    std::vector<double> member_sq;
};

inline RefreshedCaches recompute_caches(const Dataset& data, const ClusterState& state) {
    RefreshedCaches c;
    c.comp.assign(state.k * data.dim(), 0.0);
    c.sizes.assign(state.k, 0);
    c.comp_sq.assign(state.k, 0.0);
    c.member_sq.assign(state.k, 0.0);
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        const std::uint32_t r = state.labels[i];
        data.axpy(i, 1.0, c.comp.data() + r * data.dim());
        c.sizes[r] += 1;
        c.member_sq[r] += data.sq_norm(i);
    }
    for (std::size_t r = 0; r < state.k; ++r) {
        const double* row = c.comp.data() + r * data.dim();
        double s = 0.0;
        for (std::size_t j = 0; j < data.dim(); ++j) s += row[j] * row[j];
        c.comp_sq[r] = s;
    }
    return c;
}

}  // namespace detail

// Mean squared distance from each sample to its assigned centroid, summed
// directly over samples with centroids D_r / n_r rebuilt from labels.
inline double eval_em(const Dataset& data, const ClusterState& state) {
    const auto caches = detail::recompute_caches(data, state);
    const std::size_t d = data.dim();
    std::vector<double> centroid(state.k * d, 0.0);
    std::vector<double> centroid_sq(state.k, 0.0);
    for (std::size_t r = 0; r < state.k; ++r) {
        if (caches.sizes[r] == 0) continue;
        const double inv = 1.0 / static_cast<double>(caches.sizes[r]);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            const double cj = caches.comp[r * d + j] * inv;
            centroid[r * d + j] = cj;
            s += cj * cj;
        }
        centroid_sq[r] = s;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        const std::uint32_t r = state.labels[i];
        total += data.sq_norm(i) - 2.0 * data.dot(i, centroid.data() + r * d) +
                 centroid_sq[r];
    }
    return total / static_cast<double>(data.size());
}

// Within-cluster pairwise squared distances divided by n, via the closed
// form  sum_{i<j in S_r} ||x_i - x_j||^2 = n_r * sum_i x_i'x_i - D_r'D_r.
inline double eval_es(const Dataset& data, const ClusterState& state) {
    const auto caches = detail::recompute_caches(data, state);
    double total = 0.0;
    for (std::size_t r = 0; r < state.k; ++r)
        total += static_cast<double>(caches.sizes[r]) * caches.member_sq[r] -
                 caches.comp_sq[r];
    return total / static_cast<double>(data.size());
}

// Class-impurity of clusters against ground truth, normalized by log(c) to
// lie in [0, 1]; lower is better, 0 iff every cluster is class-pure.
inline double eval_entropy(const ClusterState& state,
                           std::span<const int> labels_true, int class_count) {
    if (class_count < 2)
        throw ConfigError("entropy needs at least 2 ground-truth classes");
    KSUMS_REQUIRE(labels_true.size() == state.labels.size(),
                  "eval_entropy: label count mismatch");
    const std::size_t k = state.k;
    const std::size_t c = static_cast<std::size_t>(class_count);
    std::vector<double> confusion(k * c, 0.0);
    std::vector<double> cluster_sizes(k, 0.0);
    for (std::size_t i = 0; i < labels_true.size(); ++i) {
        confusion[state.labels[i] * c + static_cast<std::size_t>(labels_true[i])] += 1.0;
        cluster_sizes[state.labels[i]] += 1.0;
    }
    const double n = static_cast<double>(labels_true.size());
    const double inv_log_c = 1.0 / std::log(static_cast<double>(class_count));
    double entropy = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        if (cluster_sizes[r] == 0.0) continue;
        double h = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            const double p = confusion[r * c + j] / cluster_sizes[r];
            if (p > 0.0) h -= p * std::log(p);  // 0 log 0 = 0
        }
        entropy += (cluster_sizes[r] / n) * inv_log_c * h;
    }
    return entropy;
}

inline QualityReport evaluate(const Dataset& data, const ClusterState& state) {
    QualityReport report;
    report.e_m = eval_em(data, state);
    report.e_s = eval_es(data, state);
    for (std::size_t r = 0; r < state.k; ++r)
        if (state.sizes[r] > 0) report.k_effective += 1;
    if (data.has_labels_true() && data.class_count() >= 2)
        report.entropy = eval_entropy(state, data.labels_true(), data.class_count());
    return report;
}

}  // namespace ksums
