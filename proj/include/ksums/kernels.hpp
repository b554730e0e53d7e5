#pragma once

#include <cmath>
#include <span>

#include "ksums/cluster_state.hpp"
#include "ksums/common.hpp"
#include "ksums/dataset.hpp"

namespace ksums {

// The two driven objectives. Im moves a sample when it gets closer to the
// (join-adjusted) centroid of another cluster; Is moves it when the total of
// intra-cluster pairwise squared distances drops.
enum class Objective { Im, Is };

// Outcome of evaluating a tentative move: the gain and the destination
// cluster. gain > 0 always means the move is profitable; a no-op
// (destination == source) has gain 0 by definition.
struct DrivenGain {
    double gain = 0.0;
    std::size_t candidate = 0;
};

// ---- scalar kernels -------------------------------------------------------
// All take the precomputed inner product x'D plus cached scalars, so the only
// vector work per candidate is one inner product.

// ||x - D_w/n_w||^2 for x a member of the cluster, computed as
// ||n_w x - D_w||^2 / n_w^2.
inline double dist_to_own_centroid(double sq_x, double dot_xd, double comp_sq,
                                   std::size_t n_w) {
    KSUMS_REQUIRE(n_w >= 1, "dist_to_own_centroid: empty cluster");
    const double n = static_cast<double>(n_w);
    return (n * n * sq_x - 2.0 * n * dot_xd + comp_sq) / (n * n);
}

// Distance from x to the centroid of S_v as if x had already joined:
// ||x - (D_v + x)/(n_v + 1)||^2 = ||n_v x - D_v||^2 / (n_v + 1)^2.
inline double dist_to_candidate_centroid(double sq_x, double dot_xd,
                                         double comp_sq, std::size_t n_v) {
    KSUMS_REQUIRE(n_v >= 1, "dist_to_candidate_centroid: empty cluster");
    const double n = static_cast<double>(n_v);
    return (n * n * sq_x - 2.0 * n * dot_xd + comp_sq) / ((n + 1.0) * (n + 1.0));
}

// Cosine similarity between x and its own cluster's composite (higher is
// closer).
inline double cosine_to_own_centroid(double sq_x, double dot_xd, double comp_sq) {
    if (!(sq_x > 0.0)) throw DegenerateClusterError("cosine: zero-norm sample");
    if (!(comp_sq > 0.0)) throw DegenerateClusterError("cosine: zero-norm composite");
    return dot_xd / (std::sqrt(sq_x) * std::sqrt(comp_sq));
}

// Cosine similarity between x and the composite after x joins:
// (x'D_v + x'x) / (||x|| sqrt(D_v'D_v + 2 x'D_v + x'x)).
inline double cosine_to_candidate_centroid(double sq_x, double dot_xd,
                                           double comp_sq) {
    if (!(sq_x > 0.0)) throw DegenerateClusterError("cosine: zero-norm sample");
    const double joined_sq = comp_sq + 2.0 * dot_xd + sq_x;
    if (!(joined_sq > 0.0))
        throw DegenerateClusterError("cosine: zero-norm joined composite");
    return (dot_xd + sq_x) / (std::sqrt(sq_x) * std::sqrt(joined_sq));
}

// Sum of squared distances from x to every member of a cluster:
//   n * x'x - 2 x'D + sum_{members} x_j'x_j.
// The same form serves both the member case (the self term contributes 0)
// and the joining case, so no flag is needed.
inline double dist_to_cluster_sum(double sq_x, double dot_xd,
                                  double member_sq_sum, std::size_t n) {
    KSUMS_REQUIRE(n >= 1, "dist_to_cluster_sum: empty cluster");
    return static_cast<double>(n) * sq_x - 2.0 * dot_xd + member_sq_sum;
}

inline double gain_im(double sq_x, double dot_w, double comp_sq_w, std::size_t n_w,
                      double dot_v, double comp_sq_v, std::size_t n_v,
                      Metric metric) {
    if (metric == Metric::SquaredL2) {
        return dist_to_own_centroid(sq_x, dot_w, comp_sq_w, n_w) -
               dist_to_candidate_centroid(sq_x, dot_v, comp_sq_v, n_v);
    }
    // Cosine maximizes similarity; flip the sign so positive still means
    // profitable.
    return cosine_to_candidate_centroid(sq_x, dot_v, comp_sq_v) -
           cosine_to_own_centroid(sq_x, dot_w, comp_sq_w);
}

inline double gain_is(double sq_x, double dot_w, double member_sq_sum_w, std::size_t n_w,
                      double dot_v, double member_sq_sum_v, std::size_t n_v) {
    return dist_to_cluster_sum(sq_x, dot_w, member_sq_sum_w, n_w) -
           dist_to_cluster_sum(sq_x, dot_v, member_sq_sum_v, n_v);
}

// ---- span-level wrappers --------------------------------------------------
// Convenience forms that do the inner products themselves; unit tests check
// these against explicit oracles.

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
    return s;
}

inline double sq_norm(std::span<const double> a) { return dot(a, a); }

inline double dist_to_own_centroid(std::span<const double> x, double sq_x,
                                   std::span<const double> d_w, std::size_t n_w) {
    return dist_to_own_centroid(sq_x, dot(x, d_w), sq_norm(d_w), n_w);
}

inline double dist_to_candidate_centroid(std::span<const double> x, double sq_x,
                                         std::span<const double> d_v, std::size_t n_v) {
    return dist_to_candidate_centroid(sq_x, dot(x, d_v), sq_norm(d_v), n_v);
}

inline double cosine_to_own_centroid(std::span<const double> x, double sq_x,
                                     std::span<const double> d_w, double sq_dw) {
    return cosine_to_own_centroid(sq_x, dot(x, d_w), sq_dw);
}

inline double cosine_to_candidate_centroid(std::span<const double> x, double sq_x,
                                           std::span<const double> d_v, double sq_dv) {
    return cosine_to_candidate_centroid(sq_x, dot(x, d_v), sq_dv);
}

inline double dist_to_cluster_sum(std::span<const double> x, double sq_x,
                                  std::span<const double> d_w, std::size_t n_w,
                                  double member_sq_sum) {
    return dist_to_cluster_sum(sq_x, dot(x, d_w), member_sq_sum, n_w);
}

inline DrivenGain gain_im(std::span<const double> x, double sq_x,
                          std::span<const double> d_w, std::size_t n_w,
                          std::span<const double> d_v, std::size_t n_v,
                          std::size_t v, Metric metric,
                          bool same_cluster = false) {
    if (same_cluster) return {0.0, v};
    return {gain_im(sq_x, dot(x, d_w), sq_norm(d_w), n_w,
                    dot(x, d_v), sq_norm(d_v), n_v, metric),
            v};
}

inline DrivenGain gain_is(std::span<const double> x, double sq_x,
                          std::span<const double> d_w, std::size_t n_w, double sumsq_w,
                          std::span<const double> d_v, std::size_t n_v, double sumsq_v,
                          std::size_t v, bool same_cluster = false) {
    if (same_cluster) return {0.0, v};
    return {gain_is(sq_x, dot(x, d_w), sumsq_w, n_w, dot(x, d_v), sumsq_v, n_v), v};
}

// ---- candidate scan -------------------------------------------------------

// Evaluate the driven function for dataset row `global` (currently in cluster
// w) against all other clusters. Returns the best strictly positive gain and
// its destination, or {0, w} when staying is best. Ties keep the lowest
// cluster index.
inline DrivenGain best_move(const Dataset& data, const ClusterState& state,
                            std::size_t global, std::size_t w,
                            Objective objective, Metric metric) {
    const double sq_x = data.sq_norm(global);
    DrivenGain best{0.0, w};

    if (objective == Objective::Im && metric == Metric::SquaredL2) {
        const double own = dist_to_own_centroid(
            sq_x, data.dot(global, state.comp_row(w)), state.comp_sq_norms[w],
            state.sizes[w]);
        for (std::size_t v = 0; v < state.k; ++v) {
            if (v == w) continue;
            const double cand = dist_to_candidate_centroid(
                sq_x, data.dot(global, state.comp_row(v)), state.comp_sq_norms[v],
                state.sizes[v]);
            const double gain = own - cand;
            if (gain > best.gain) best = {gain, v};
        }
    } else if (objective == Objective::Im) {
        const double own = cosine_to_own_centroid(
            sq_x, data.dot(global, state.comp_row(w)), state.comp_sq_norms[w]);
        for (std::size_t v = 0; v < state.k; ++v) {
            if (v == w) continue;
            const double cand = cosine_to_candidate_centroid(
                sq_x, data.dot(global, state.comp_row(v)), state.comp_sq_norms[v]);
            const double gain = cand - own;
            if (gain > best.gain) best = {gain, v};
        }
    } else {
        const double member = dist_to_cluster_sum(
            sq_x, data.dot(global, state.comp_row(w)), state.member_sq_sums[w],
            state.sizes[w]);
        for (std::size_t v = 0; v < state.k; ++v) {
            if (v == w) continue;
            const double joined = dist_to_cluster_sum(
                sq_x, data.dot(global, state.comp_row(v)), state.member_sq_sums[v],
                state.sizes[v]);
            const double gain = member - joined;
            if (gain > best.gain) best = {gain, v};
        }
    }
    return best;
}

}  // namespace ksums
