#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/rng.hpp"

namespace ksums {

// Mutable clustering state: per-sample labels plus, per cluster, the
// composite vector D_r (sum of member rows), the member count n_r, the
// cached ||D_r||^2 and the cached sum of member squared norms. Centroids
// are never stored; they are D_r / n_r when needed.
struct ClusterState {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<std::uint32_t> labels;
    std::vector<double> comp;           // k * dim, row-major
    std::vector<std::size_t> sizes;
    std::vector<double> comp_sq_norms;  // ||D_r||^2
    std::vector<double> member_sq_sums; // sum of x'x over members of r

    double* comp_row(std::size_t r) { return comp.data() + r * dim; }
    const double* comp_row(std::size_t r) const { return comp.data() + r * dim; }
};

namespace detail {

// Rebuild composites and caches from labels; `members[p]` is the dataset row
// behind labels[p].
inline void refresh_composites_members(ClusterState& state, const Dataset& data,
                                       std::span<const std::size_t> members) {
    std::fill(state.comp.begin(), state.comp.end(), 0.0);
    std::fill(state.sizes.begin(), state.sizes.end(), std::size_t{0});
    std::fill(state.member_sq_sums.begin(), state.member_sq_sums.end(), 0.0);
    for (std::size_t p = 0; p < members.size(); ++p) {
        const std::uint32_t r = state.labels[p];
        data.axpy(members[p], 1.0, state.comp_row(r));
        state.sizes[r] += 1;
        state.member_sq_sums[r] += data.sq_norm(members[p]);
    }
    for (std::size_t r = 0; r < state.k; ++r) {
        const double* row = state.comp_row(r);
        double s = 0.0;
        for (std::size_t j = 0; j < state.dim; ++j) s += row[j] * row[j];
        state.comp_sq_norms[r] = s;
    }
}

inline ClusterState init_random_labels_members(const Dataset& data,
                                               std::span<const std::size_t> members,
                                               std::size_t k, Rng& rng) {
    const std::size_t n = members.size();
    if (k < 1 || k > n)
        throw ConfigError("k=" + std::to_string(k) + " must be in [1, n=" +
                          std::to_string(n) + "]");
    ClusterState state;
    state.k = k;
    state.dim = data.dim();
    state.labels.resize(n);
    state.comp.assign(k * data.dim(), 0.0);
    state.sizes.assign(k, 0);
    state.comp_sq_norms.assign(k, 0.0);
    state.member_sq_sums.assign(k, 0.0);

    for (std::size_t p = 0; p < n; ++p)
        state.labels[p] = static_cast<std::uint32_t>(rng.below(k));

    std::vector<std::size_t> counts(k, 0);
    for (auto r : state.labels) counts[r] += 1;

    // Random assignment can leave clusters empty; repair by reassigning the
    // first member of the currently largest cluster until all k are nonempty.
    for (std::size_t r = 0; r < k; ++r) {
        while (counts[r] == 0) {
            std::size_t largest = 0;
            for (std::size_t s = 1; s < k; ++s)
                if (counts[s] > counts[largest]) largest = s;
            for (std::size_t p = 0; p < n; ++p) {
                if (state.labels[p] == largest) {
                    state.labels[p] = static_cast<std::uint32_t>(r);
                    counts[largest] -= 1;
                    counts[r] += 1;
                    break;
                }
            }
        }
    }

    refresh_composites_members(state, data, members);
    return state;
}

// Move the sample at position `pos` (dataset row `global`) from cluster w to
// v, updating composites and caches incrementally:
//   ||D +- x||^2 = ||D||^2 +- 2 x'D + ||x||^2.
// Returns false (state untouched) if the move would empty the source.
inline bool apply_move_at(ClusterState& state, const Dataset& data,
                          std::size_t pos, std::size_t global,
                          std::size_t w, std::size_t v) {
    KSUMS_REQUIRE(state.labels[pos] == w, "apply_move: sample is not in the source cluster");
    KSUMS_REQUIRE(w != v, "apply_move: source and destination are the same cluster");
    if (state.sizes[w] < 2) return false;

    const double sq_x = data.sq_norm(global);
    const double dot_w = data.dot(global, state.comp_row(w));
    const double dot_v = data.dot(global, state.comp_row(v));

    data.axpy(global, -1.0, state.comp_row(w));
    data.axpy(global, +1.0, state.comp_row(v));
    state.comp_sq_norms[w] += -2.0 * dot_w + sq_x;
    state.comp_sq_norms[v] += +2.0 * dot_v + sq_x;
    state.member_sq_sums[w] -= sq_x;
    state.member_sq_sums[v] += sq_x;
    state.sizes[w] -= 1;
    state.sizes[v] += 1;
    state.labels[pos] = static_cast<std::uint32_t>(v);
    return true;
}

inline std::vector<std::size_t> identity_members(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return m;
}

}  // namespace detail

// Assign every sample a uniformly random label in [0, k), repair empty
// clusters, and build composites from scratch. Deterministic per seed.
inline ClusterState init_random_labels(const Dataset& data, std::size_t k,
                                       std::uint64_t seed) {
    Rng rng(seed);
    const auto members = detail::identity_members(data.size());
    return detail::init_random_labels_members(data, members, k, rng);
}

inline bool apply_move(ClusterState& state, const Dataset& data, std::size_t i,
                       std::size_t w, std::size_t v) {
    return detail::apply_move_at(state, data, i, i, w, v);
}

// Recompute composites exactly from labels; idempotent, used as drift control
// after runs of incremental updates.
inline void refresh_composites(ClusterState& state, const Dataset& data) {
    const auto members = detail::identity_members(state.labels.size());
    detail::refresh_composites_members(state, data, members);
}

}  // namespace ksums
