#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "ksums/cluster_state.hpp"
#include "ksums/common.hpp"
#include "ksums/dataset.hpp"
#include "ksums/kernels.hpp"
#include "ksums/optimizer.hpp"

namespace ksums {

// ---- bisecting ------------------------------------------------------------

enum class BisectSplitRule {
    LargestSize,  // split the cluster with the most members
    MostLoose     // split the cluster with the largest total distortion
};

// One executed bisection: which cluster was popped and how it divided. The
// left half keeps the popped cluster id, the right half gets the next free id.
struct BisectStep {
    std::size_t step = 0;  // 1-based
    std::size_t popped_cluster = 0;
    std::size_t popped_size = 0;
    std::size_t left_size = 0;
    std::size_t right_cluster = 0;
    std::size_t right_size = 0;
};

namespace detail {

struct BisectEntry {
    double looseness = 0.0;  // total distortion, used by MostLoose only
    std::size_t size = 0;
    std::size_t id = 0;
};

struct BisectOrder {
    BisectSplitRule rule;
    // priority_queue keeps the "largest"; returns true when a is lower
    // priority than b.
    bool operator()(const BisectEntry& a, const BisectEntry& b) const {
        if (rule == BisectSplitRule::MostLoose && a.looseness != b.looseness)
            return a.looseness < b.looseness;
        if (a.size != b.size) return a.size < b.size;
        return a.id > b.id;  // ties: lowest id first
    }
};

// Total distortion of one member set: sum ||x - C||^2 = sum x'x - ||D||^2/n.
inline double cluster_looseness(const Dataset& data,
                                std::span<const std::size_t> members) {
    std::vector<double> comp(data.dim(), 0.0);
    double member_sq = 0.0;
    for (std::size_t g : members) {
        data.axpy(g, 1.0, comp.data());
        member_sq += data.sq_norm(g);
    }
    double comp_sq = 0.0;
    for (double c : comp) comp_sq += c * c;
    return member_sq - comp_sq / static_cast<double>(members.size());
}

}  // namespace detail

// Top-down clustering: start with everything in one cluster and repeatedly
// split the selected cluster in two with the inner stochastic run, until k
// clusters exist. Inner runs are seeded as inner.seed + step, so k=2
// reproduces a direct run with the same seed.
inline RunResult bisecting_run(const Dataset& data, std::size_t k,
                               const RunConfig& inner,
                               BisectSplitRule rule = BisectSplitRule::LargestSize,
                               std::vector<BisectStep>* trace = nullptr) {
    if (k < 2) throw ConfigError("bisecting needs k >= 2");
    if (k > data.size())
        throw ConfigError("k=" + std::to_string(k) + " exceeds n=" +
                          std::to_string(data.size()));
    data.validate_for_metric(inner.metric);

    const std::size_t n = data.size();
    RunResult result;
    ClusterState& state = result.state;
    state.k = k;
    state.dim = data.dim();
    state.labels.assign(n, 0);
    state.comp.assign(k * data.dim(), 0.0);
    state.sizes.assign(k, 0);
    state.comp_sq_norms.assign(k, 0.0);
    state.member_sq_sums.assign(k, 0.0);

    std::vector<std::vector<std::size_t>> members(k);
    members[0] = detail::identity_members(n);

    std::priority_queue<detail::BisectEntry, std::vector<detail::BisectEntry>,
                        detail::BisectOrder>
        queue{detail::BisectOrder{rule}};
    auto push_cluster = [&](std::size_t id) {
        detail::BisectEntry e{0.0, members[id].size(), id};
        if (rule == BisectSplitRule::MostLoose)
            e.looseness = detail::cluster_looseness(data, members[id]);
        queue.push(e);
    };
    push_cluster(0);

    for (std::size_t next_id = 1; next_id < k; ++next_id) {
        const auto t0 = std::chrono::steady_clock::now();

        std::vector<detail::BisectEntry> unsplittable;
        detail::BisectEntry target;
        bool found = false;
        while (!queue.empty()) {
            target = queue.top();
            queue.pop();
            if (target.size >= 2) {
                found = true;
                break;
            }
            unsplittable.push_back(target);
        }
        for (const auto& e : unsplittable) queue.push(e);
        if (!found)
            throw ConfigError("cannot reach k=" + std::to_string(k) +
                              " clusters: no splittable cluster left");

        RunConfig split_cfg = inner;
        split_cfg.k = 2;
        split_cfg.seed = inner.seed + (next_id - 1);
        split_cfg.record_per_move = false;
        const RunResult half =
            detail::run_members(data, members[target.id], split_cfg);

        std::vector<std::size_t> left, right;
        for (std::size_t p = 0; p < members[target.id].size(); ++p) {
            const std::size_t g = members[target.id][p];
            if (half.state.labels[p] == 0) {
                left.push_back(g);
            } else {
                right.push_back(g);
                state.labels[g] = static_cast<std::uint32_t>(next_id);
            }
        }
        if (trace)
            trace->push_back({next_id, target.id, target.size, left.size(),
                              next_id, right.size()});
        members[target.id] = std::move(left);
        members[next_id] = std::move(right);
        push_cluster(target.id);
        push_cluster(next_id);

        refresh_composites(state, data);
        std::size_t inner_moves = 0;
        for (const auto& rec : half.history.per_iteration) inner_moves += rec.moves;
        double total_sq = data.total_sq_norm();
        const auto t1 = std::chrono::steady_clock::now();
        result.history.per_iteration.push_back(
            {next_id, detail::em_from_state(state, total_sq, n),
             detail::es_from_state(state, n), inner_moves,
             std::chrono::duration<double, std::milli>(t1 - t0).count()});
    }
    return result;
}

// ---- sequential (online) variants ------------------------------------------

struct SeqStep {
    std::size_t sample = 0;
    std::size_t cluster = 0;
    bool seeded = false;  // true for the first k samples
};

// Called once per consumed sample; `centroids` is the explicit running-mean
// array for sequential k-means and empty for sequential k-sums.
using SeqObserver = std::function<void(const SeqStep&, std::span<const double>,
                                       const ClusterState&)>;

namespace detail {

inline ClusterState seq_seed_state(const Dataset& data, std::size_t k) {
    if (k < 1 || k > data.size())
        throw ConfigError("sequential run needs 1 <= k <= n");
    ClusterState state;
    state.k = k;
    state.dim = data.dim();
    state.labels.assign(data.size(), 0);
    state.comp.assign(k * data.dim(), 0.0);
    state.sizes.assign(k, 0);
    state.comp_sq_norms.assign(k, 0.0);
    state.member_sq_sums.assign(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        state.labels[i] = static_cast<std::uint32_t>(i);
        data.axpy(i, 1.0, state.comp_row(i));
        state.comp_sq_norms[i] = data.sq_norm(i);
        state.member_sq_sums[i] = data.sq_norm(i);
        state.sizes[i] = 1;
    }
    return state;
}

inline void seq_add(ClusterState& state, const Dataset& data, std::size_t i,
                    std::size_t r) {
    const double dot_r = data.dot(i, state.comp_row(r));
    data.axpy(i, 1.0, state.comp_row(r));
    state.comp_sq_norms[r] += 2.0 * dot_r + data.sq_norm(i);
    state.member_sq_sums[r] += data.sq_norm(i);
    state.sizes[r] += 1;
    state.labels[i] = static_cast<std::uint32_t>(r);
}

inline IterationRecord seq_final_record(const ClusterState& state,
                                        const Dataset& data, double elapsed_ms) {
    return {1, em_from_state(state, data.total_sq_norm(), data.size()),
            es_from_state(state, data.size()), data.size() - state.k, elapsed_ms};
}

}  // namespace detail

// Single-pass clustering in stream (dataset) order. The first k samples seed
// k singleton clusters; every later sample joins the cluster whose centroid
// is closest under the join-adjusted distance, and only the composite vector
// is updated. Deterministic: no randomness after seeding.
inline RunResult sequential_ksums(const Dataset& data, std::size_t k,
                                  Metric metric, std::uint64_t /*seed*/ = 0,
                                  bool record_per_move = false,
                                  const SeqObserver& on_step = {}) {
    data.validate_for_metric(metric);
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    ClusterState& state = result.state;
    state = detail::seq_seed_state(data, k);

    double assigned_sq = 0.0;
    double centroid_term = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        assigned_sq += state.member_sq_sums[r];
        centroid_term += state.comp_sq_norms[r];
    }
    if (on_step)
        for (std::size_t i = 0; i < k; ++i) on_step({i, i, true}, {}, state);

    const std::size_t n = data.size();
    for (std::size_t i = k; i < n; ++i) {
        const double sq_x = data.sq_norm(i);
        std::size_t best_r = 0;
        double best_val = 0.0;
        for (std::size_t r = 0; r < k; ++r) {
            const double dot_r = data.dot(i, state.comp_row(r));
            if (metric == Metric::SquaredL2) {
                const double d = dist_to_candidate_centroid(
                    sq_x, dot_r, state.comp_sq_norms[r], state.sizes[r]);
                if (r == 0 || d < best_val) {
                    best_val = d;
                    best_r = r;
                }
            } else {
                const double c = cosine_to_candidate_centroid(
                    sq_x, dot_r, state.comp_sq_norms[r]);
                if (r == 0 || c > best_val) {
                    best_val = c;
                    best_r = r;
                }
            }
        }
        if (record_per_move)
            centroid_term -= state.comp_sq_norms[best_r] /
                             static_cast<double>(state.sizes[best_r]);
        detail::seq_add(state, data, i, best_r);
        if (record_per_move) {
            assigned_sq += sq_x;
            centroid_term += state.comp_sq_norms[best_r] /
                             static_cast<double>(state.sizes[best_r]);
            result.history.per_move.push_back(
                (assigned_sq - centroid_term) / static_cast<double>(n));
        }
        if (on_step) on_step({i, best_r, false}, {}, state);
    }

    refresh_composites(state, data);
    const auto t1 = std::chrono::steady_clock::now();
    result.history.per_iteration.push_back(detail::seq_final_record(
        state, data, std::chrono::duration<double, std::milli>(t1 - t0).count()));
    return result;
}

// Classic online k-means: explicit running-mean centroids updated by
// C_r += (x - C_r) / (n_r + 1); assignment compares plain distances to the
// current centroids. Composites are carried alongside, so C_r = D_r / n_r
// holds throughout.
inline RunResult sequential_kmeans(const Dataset& data, std::size_t k,
                                   std::uint64_t /*seed*/ = 0,
                                   bool record_per_move = false,
                                   const SeqObserver& on_step = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    RunResult result;
    ClusterState& state = result.state;
    state = detail::seq_seed_state(data, k);

    const std::size_t d = data.dim();
    std::vector<double> centroids(k * d, 0.0);
    std::vector<double> centroid_sq(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        data.copy_row(r, centroids.data() + r * d);
        centroid_sq[r] = data.sq_norm(r);
    }

    double assigned_sq = 0.0;
    double centroid_term = 0.0;
    for (std::size_t r = 0; r < k; ++r) {
        assigned_sq += state.member_sq_sums[r];
        centroid_term += state.comp_sq_norms[r];
    }
    if (on_step)
        for (std::size_t i = 0; i < k; ++i)
            on_step({i, i, true}, {centroids.data(), centroids.size()}, state);

    const std::size_t n = data.size();
    for (std::size_t i = k; i < n; ++i) {
        const double sq_x = data.sq_norm(i);
        std::size_t best_r = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < k; ++r) {
            const double dist =
                sq_x - 2.0 * data.dot(i, centroids.data() + r * d) + centroid_sq[r];
            if (dist < best_d) {
                best_d = dist;
                best_r = r;
            }
        }
        if (record_per_move)
            centroid_term -= state.comp_sq_norms[best_r] /
                             static_cast<double>(state.sizes[best_r]);
        detail::seq_add(state, data, i, best_r);

        // C_r = (n C_r + x) / (n + 1), applied as scale-then-add so sparse
        // rows touch only their nonzeros.
        const double inv = 1.0 / static_cast<double>(state.sizes[best_r]);
        double* c = centroids.data() + best_r * d;
        const double keep = 1.0 - inv;
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) c[j] *= keep;
        data.axpy(i, inv, c);
        for (std::size_t j = 0; j < d; ++j) s += c[j] * c[j];
        centroid_sq[best_r] = s;

        if (record_per_move) {
            assigned_sq += sq_x;
            centroid_term += state.comp_sq_norms[best_r] /
                             static_cast<double>(state.sizes[best_r]);
            result.history.per_move.push_back(
                (assigned_sq - centroid_term) / static_cast<double>(n));
        }
        if (on_step)
            on_step({i, best_r, false}, {centroids.data(), centroids.size()}, state);
    }

    refresh_composites(state, data);
    const auto t1 = std::chrono::steady_clock::now();
    result.history.per_iteration.push_back(detail::seq_final_record(
        state, data, std::chrono::duration<double, std::milli>(t1 - t0).count()));
    return result;
}

// ---- batch baselines --------------------------------------------------------

enum class Seeding { RandomSamples, KMeansPP };

// D^2 seeding: first seed uniform, each next drawn with probability
// proportional to the squared distance to the nearest seed chosen so far.
// If every remaining weight is zero (duplicate-only data) the draw falls
// back to uniform over unchosen samples.
inline std::vector<std::size_t> kmeanspp_seed(const Dataset& data, std::size_t k,
                                              std::uint64_t seed) {
    const std::size_t n = data.size();
    if (k < 1 || k > n) throw ConfigError("kmeans++ needs 1 <= k <= n");
    Rng rng(seed);
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<bool> is_chosen(n, false);
    std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
    std::vector<double> seed_row(data.dim());

    chosen.push_back(rng.below(n));
    is_chosen[chosen[0]] = true;

    for (std::size_t c = 1; c < k; ++c) {
        const std::size_t last = chosen.back();
        data.copy_row(last, seed_row.data());
        const double sq_last = data.sq_norm(last);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d2 = std::max(
                0.0, data.sq_norm(i) - 2.0 * data.dot(i, seed_row.data()) + sq_last);
            if (d2 < min_d2[i]) min_d2[i] = d2;
            total += min_d2[i];
        }
        std::size_t pick = n;
        if (total > 0.0) {
            const double u = rng.unit() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += min_d2[i];
                if (u < cum) {
                    pick = i;
                    break;
                }
            }
            if (pick == n) {  // u landed on the accumulated rounding tail
                for (std::size_t i = n; i-- > 0;) {
                    if (min_d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        }
        if (pick == n) {  // all weights zero: uniform over unchosen
            std::size_t skip = rng.below(n - chosen.size());
            for (std::size_t i = 0; i < n; ++i) {
                if (is_chosen[i]) continue;
                if (skip == 0) {
                    pick = i;
                    break;
                }
                --skip;
            }
        }
        chosen.push_back(pick);
        is_chosen[pick] = true;
    }
    return chosen;
}

// Classic batch loop: assign every sample to its nearest centroid, then
// recompute all centroids; repeat until no label changes or max_iters.
// Clusters emptied by an assignment pass are re-seeded from the farthest
// member of the largest cluster.
inline RunResult lloyd_kmeans(const Dataset& data, std::size_t k,
                              Seeding seeding, std::uint64_t seed,
                              std::size_t max_iters = 100) {
    const std::size_t n = data.size();
    const std::size_t d = data.dim();
    if (k < 1 || k > n) throw ConfigError("lloyd needs 1 <= k <= n");
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");

    std::vector<std::size_t> seeds;
    if (seeding == Seeding::KMeansPP) {
        seeds = kmeanspp_seed(data, k, seed);
    } else {
        Rng rng(seed);
        auto idx = detail::identity_members(n);
        for (std::size_t j = 0; j < k; ++j)
            std::swap(idx[j], idx[j + rng.below(n - j)]);
        seeds.assign(idx.begin(), idx.begin() + k);
    }

    std::vector<double> centroids(k * d, 0.0);
    std::vector<double> centroid_sq(k, 0.0);
    for (std::size_t r = 0; r < k; ++r) {
        data.copy_row(seeds[r], centroids.data() + r * d);
        centroid_sq[r] = data.sq_norm(seeds[r]);
    }

    RunResult result;
    ClusterState& state = result.state;
    state.k = k;
    state.dim = d;
    state.labels.assign(n, 0);
    state.comp.assign(k * d, 0.0);
    state.sizes.assign(k, 0);
    state.comp_sq_norms.assign(k, 0.0);
    state.member_sq_sums.assign(k, 0.0);

    std::vector<std::uint32_t> prev_labels(n, std::numeric_limits<std::uint32_t>::max());
    for (std::size_t iter = 1; iter <= max_iters; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();

        std::size_t changes = 0;
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const double sq_x = data.sq_norm(i);
            std::size_t best_r = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t r = 0; r < k; ++r) {
                const double dist =
                    sq_x - 2.0 * data.dot(i, centroids.data() + r * d) + centroid_sq[r];
                if (dist < best_d) {
                    best_d = dist;
                    best_r = r;
                }
            }
            state.labels[i] = static_cast<std::uint32_t>(best_r);
            counts[best_r] += 1;
            if (state.labels[i] != prev_labels[i]) ++changes;
        }

        for (std::size_t r = 0; r < k; ++r) {
            while (counts[r] == 0) {
                std::size_t largest = 0;
                for (std::size_t s = 1; s < k; ++s)
                    if (counts[s] > counts[largest]) largest = s;
                std::size_t farthest = n;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (state.labels[i] != largest) continue;
                    const double dist = data.sq_norm(i) -
                                        2.0 * data.dot(i, centroids.data() + largest * d) +
                                        centroid_sq[largest];
                    if (dist > far_d) {
                        far_d = dist;
                        farthest = i;
                    }
                }
                state.labels[farthest] = static_cast<std::uint32_t>(r);
                counts[largest] -= 1;
                counts[r] += 1;
                ++changes;
            }
        }

        refresh_composites(state, data);
        for (std::size_t r = 0; r < k; ++r) {
            const double inv = 1.0 / static_cast<double>(state.sizes[r]);
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double cj = state.comp[r * d + j] * inv;
                centroids[r * d + j] = cj;
                s += cj * cj;
            }
            centroid_sq[r] = s;
        }

        prev_labels = state.labels;
        const auto t1 = std::chrono::steady_clock::now();
        result.history.per_iteration.push_back(
            {iter, detail::em_from_state(state, data.total_sq_norm(), n),
             detail::es_from_state(state, n), changes,
             std::chrono::duration<double, std::milli>(t1 - t0).count()});
        if (changes == 0) break;
    }
    return result;
}

// Per-sample reassignment accepted only when the total distortion strictly
// decreases, accounting for the sample's removal from its source:
//   delta = n_w/(n_w-1) ||x - C_w||^2 - n_v/(n_v+1) ||x - C_v||^2.
// The total distortion drops by exactly delta at every applied move.
inline RunResult hartigan_run(const Dataset& data, std::size_t k,
                              std::uint64_t seed, std::size_t max_iters = 100,
                              bool record_per_move = false,
                              const MoveObserver& on_move = {}) {
    const std::size_t n = data.size();
    if (max_iters < 1) throw ConfigError("max_iters must be >= 1");
    Rng rng(seed);
    RunResult result;
    ClusterState& state = result.state;
    const auto members = detail::identity_members(n);
    state = detail::init_random_labels_members(data, members, k, rng);

    double total_member_sq = 0.0;
    for (std::size_t r = 0; r < k; ++r) total_member_sq += state.member_sq_sums[r];
    double centroid_term = 0.0;
    auto resync = [&] {
        if (!record_per_move) return;
        centroid_term = 0.0;
        for (std::size_t r = 0; r < k; ++r)
            centroid_term += state.comp_sq_norms[r] / static_cast<double>(state.sizes[r]);
    };
    resync();

    std::vector<std::size_t> order(n);
    for (std::size_t p = 0; p < n; ++p) order[p] = p;

    for (std::size_t iter = 1; iter <= max_iters; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);
        std::size_t moves = 0;

        for (const std::size_t i : order) {
            const std::size_t w = state.labels[i];
            if (state.sizes[w] < 2) continue;  // no moves out of singletons
            const double sq_x = data.sq_norm(i);
            const double n_w = static_cast<double>(state.sizes[w]);
            const double own = dist_to_own_centroid(
                sq_x, data.dot(i, state.comp_row(w)), state.comp_sq_norms[w],
                state.sizes[w]);
            const double removal = n_w / (n_w - 1.0) * own;

            double best_delta = 0.0;
            std::size_t best_v = w;
            for (std::size_t v = 0; v < k; ++v) {
                if (v == w) continue;
                const double n_v = static_cast<double>(state.sizes[v]);
                const double to_v = dist_to_own_centroid(
                    sq_x, data.dot(i, state.comp_row(v)), state.comp_sq_norms[v],
                    state.sizes[v]);
                const double delta = removal - n_v / (n_v + 1.0) * to_v;
                if (delta > best_delta) {
                    best_delta = delta;
                    best_v = v;
                }
            }
            if (!(best_delta > 0.0)) continue;

            double old_terms = 0.0;
            if (record_per_move)
                old_terms = state.comp_sq_norms[w] / static_cast<double>(state.sizes[w]) +
                            state.comp_sq_norms[best_v] /
                                static_cast<double>(state.sizes[best_v]);
            detail::apply_move_at(state, data, i, i, w, best_v);
            ++moves;
            if (record_per_move) {
                centroid_term +=
                    state.comp_sq_norms[w] / static_cast<double>(state.sizes[w]) +
                    state.comp_sq_norms[best_v] /
                        static_cast<double>(state.sizes[best_v]) -
                    old_terms;
                result.history.per_move.push_back(
                    (total_member_sq - centroid_term) / static_cast<double>(n));
            }
            if (on_move) on_move({i, w, best_v, best_delta}, state);
        }

        refresh_composites(state, data);
        resync();
        const auto t1 = std::chrono::steady_clock::now();
        result.history.per_iteration.push_back(
            {iter, detail::em_from_state(state, total_member_sq, n),
             detail::es_from_state(state, n), moves,
             std::chrono::duration<double, std::milli>(t1 - t0).count()});
        if (moves == 0) break;
    }
    return result;
}

// True iff no single-sample move strictly decreases the total distortion.
inline bool hartigan_fixed_point(const ClusterState& state, const Dataset& data) {
    for (std::size_t i = 0; i < state.labels.size(); ++i) {
        const std::size_t w = state.labels[i];
        if (state.sizes[w] < 2) continue;
        const double sq_x = data.sq_norm(i);
        const double n_w = static_cast<double>(state.sizes[w]);
        const double removal =
            n_w / (n_w - 1.0) *
            dist_to_own_centroid(sq_x, data.dot(i, state.comp_row(w)),
                                 state.comp_sq_norms[w], state.sizes[w]);
        for (std::size_t v = 0; v < state.k; ++v) {
            if (v == w) continue;
            const double n_v = static_cast<double>(state.sizes[v]);
            const double to_v = dist_to_own_centroid(
                sq_x, data.dot(i, state.comp_row(v)), state.comp_sq_norms[v],
                state.sizes[v]);
            if (removal - n_v / (n_v + 1.0) * to_v > 0.0) return false;
        }
    }
    return true;
}

}  // namespace ksums
