#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ksums/cluster_state.hpp"
#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/kernels.hpp"

namespace ksums {

struct RunConfig {
    Objective objective = Objective::Im;
    std::size_t k = 1;
    Metric metric = Metric::SquaredL2;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;    // safety net
    std::size_t min_moves = 0;      // converge when a full pass makes <= this many moves
    bool record_per_move = false;
};

struct IterationRecord {
    std::size_t iter = 0;  // 1-based
    double e_m = 0.0;
    double e_s = 0.0;
    std::size_t moves = 0;
    double elapsed_ms = 0.0;
};

// Per-iteration objective trace, plus (optionally) the value of the driven
// objective after every applied move.
struct ObjectiveHistory {
    std::vector<IterationRecord> per_iteration;
    std::vector<double> per_move;
};

struct RunResult {
    ClusterState state;
    ObjectiveHistory history;
};

struct MoveEvent {
    std::size_t sample = 0;  // dataset row
    std::size_t from = 0;
    std::size_t to = 0;
    double gain = 0.0;
};

// Called after each applied move with the updated state.
using MoveObserver = std::function<void(const MoveEvent&, const ClusterState&)>;

namespace detail {

// Closed-form objectives from refreshed caches; O(k).
inline double em_from_state(const ClusterState& state, double total_member_sq,
                            std::size_t n) {
    double centroid_term = 0.0;
    for (std::size_t r = 0; r < state.k; ++r)
        if (state.sizes[r] > 0)
            centroid_term += state.comp_sq_norms[r] / static_cast<double>(state.sizes[r]);
    return (total_member_sq - centroid_term) / static_cast<double>(n);
}

inline double es_from_state(const ClusterState& state, std::size_t n) {
    double total = 0.0;
    for (std::size_t r = 0; r < state.k; ++r)
        total += static_cast<double>(state.sizes[r]) * state.member_sq_sums[r] -
                 state.comp_sq_norms[r];
    return total / static_cast<double>(n);
}

inline RunResult run_members(const Dataset& data,
                             std::span<const std::size_t> members,
                             const RunConfig& cfg,
                             const MoveObserver& on_move = {}) {
    if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
    Rng rng(cfg.seed);
    RunResult result;
    result.state = init_random_labels_members(data, members, cfg.k, rng);
    ClusterState& state = result.state;
    const std::size_t n = members.size();

    double total_member_sq = 0.0;
    for (std::size_t r = 0; r < state.k; ++r) total_member_sq += state.member_sq_sums[r];

    // Per-move objective trackers, kept in O(1) per move. For the pairwise
    // objective the recorded value walks down by exactly gain/n per move; for
    // the centroid objective the composite-norm identity is re-evaluated on
    // the two touched clusters.
    double es_value = 0.0;
    double centroid_term = 0.0;
    auto resync_trackers = [&] {
        if (!cfg.record_per_move) return;
        es_value = es_from_state(state, n);
        centroid_term = 0.0;
        for (std::size_t r = 0; r < state.k; ++r)
            if (state.sizes[r] > 0)
                centroid_term += state.comp_sq_norms[r] / static_cast<double>(state.sizes[r]);
    };
    resync_trackers();

    std::vector<std::size_t> order(n);
    for (std::size_t p = 0; p < n; ++p) order[p] = p;

    for (std::size_t iter = 1; iter <= cfg.max_iters; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);  // fresh permutation every pass
        std::size_t moves = 0;

        for (const std::size_t pos : order) {
            const std::size_t w = state.labels[pos];
            if (state.sizes[w] < 2) continue;  // moving would empty the source
            const std::size_t global = members[pos];
            const DrivenGain best =
                best_move(data, state, global, w, cfg.objective, cfg.metric);
            if (!(best.gain > 0.0)) continue;

            const std::size_t v = best.candidate;
            double old_terms = 0.0;
            if (cfg.record_per_move && cfg.objective == Objective::Im)
                old_terms = state.comp_sq_norms[w] / static_cast<double>(state.sizes[w]) +
                            state.comp_sq_norms[v] / static_cast<double>(state.sizes[v]);

            apply_move_at(state, data, pos, global, w, v);
            ++moves;

            if (cfg.record_per_move) {
                if (cfg.objective == Objective::Is) {
                    es_value -= best.gain / static_cast<double>(n);
                    result.history.per_move.push_back(es_value);
                } else {
                    centroid_term +=
                        state.comp_sq_norms[w] / static_cast<double>(state.sizes[w]) +
                        state.comp_sq_norms[v] / static_cast<double>(state.sizes[v]) -
                        old_terms;
                    result.history.per_move.push_back(
                        (total_member_sq - centroid_term) / static_cast<double>(n));
                }
            }
            if (on_move) on_move({global, w, v, best.gain}, state);
        }

        refresh_composites_members(state, data, members);  // drift control
        resync_trackers();

        const auto t1 = std::chrono::steady_clock::now();
        result.history.per_iteration.push_back(
            {iter, em_from_state(state, total_member_sq, n), es_from_state(state, n),
             moves, std::chrono::duration<double, std::milli>(t1 - t0).count()});

        if (moves <= cfg.min_moves) break;
    }
    return result;
}

}  // namespace detail

// The full stochastic run: random labels, then repeated passes over the data
// in fresh random order, moving each sample to the cluster where the driven
// function is positive and maximal. Terminates when a pass makes at most
// min_moves moves, or after max_iters passes.
inline RunResult run(const Dataset& data, const RunConfig& cfg,
                     const MoveObserver& on_move = {}) {
    data.validate_for_metric(cfg.metric);
    const auto members = detail::identity_members(data.size());
    return detail::run_members(data, members, cfg, on_move);
}

// Fixed-point certificate: true iff no sample has a strictly positive gain
// to any other cluster under the configured driven function (moves that
// would empty their source cluster are not legal and do not count).
inline bool is_fixed_point(const ClusterState& state, const Dataset& data,
                           const RunConfig& cfg) {
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        const std::size_t w = state.labels[i];
        if (state.sizes[w] < 2) continue;
        if (best_move(data, state, i, w, cfg.objective, cfg.metric).gain > 0.0)
            return false;
    }
    return true;
}

}  // namespace ksums
