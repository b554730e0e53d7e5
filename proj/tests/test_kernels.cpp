#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ksums/kernels.hpp"
#include "oracles.hpp"

using namespace ksums;

namespace {

std::vector<double> vec(std::initializer_list<double> xs) { return xs; }

double sq(const std::vector<double>& x) { return oracle::dot(x, x); }

}  // namespace

TEST_CASE("distance to own centroid matches the explicit-centroid oracle") {
    SECTION("sample at its centroid") {
        const auto x = vec({1.0, 1.0});
        REQUIRE(dist_to_own_centroid(x, sq(x), vec({3.0, 3.0}), 3) == 0.0);
    }
    SECTION("hand instance") {
        const auto x = vec({2.0, 0.0});
        REQUIRE_THAT(dist_to_own_centroid(x, sq(x), vec({2.0, 2.0}), 2),
                     Catch::Matchers::WithinRel(2.0, 1e-12));
    }
    SECTION("randomized against the oracle") {
        Rng rng(101);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t d = 1 + rng.below(64);
            const std::size_t n = 1 + rng.below(100);
            const auto x = oracle::random_vector(d, rng);
            const auto comp = oracle::random_vector(d, rng, -50.0, 50.0);
            const double expected = oracle::dist_to_explicit_centroid(x, comp, n);
            const double got = dist_to_own_centroid(x, sq(x), comp, n);
            REQUIRE_THAT(got, Catch::Matchers::WithinRel(expected, 1e-9) ||
                                  Catch::Matchers::WithinAbs(expected, 1e-9));
        }
    }
    SECTION("empty cluster is a contract violation") {
        const auto x = vec({1.0});
        REQUIRE_THROWS_AS(dist_to_own_centroid(x, 1.0, vec({1.0}), 0),
                          std::logic_error);
    }
}

TEST_CASE("distance to candidate centroid supposes the sample already joined") {
    SECTION("hand instance") {
        const auto x = vec({0.0, 0.0});
        REQUIRE_THAT(dist_to_candidate_centroid(x, 0.0, vec({2.0, 2.0}), 1),
                     Catch::Matchers::WithinRel(2.0, 1e-12));
    }
    SECTION("sample equal to the joined centroid") {
        const auto x = vec({1.5, 2.5});
        const auto comp = vec({3.0, 5.0});  // x == D/n for n=2
        REQUIRE(dist_to_candidate_centroid(x, sq(x), comp, 2) == 0.0);
    }
    SECTION("randomized against the joined-centroid oracle") {
        Rng rng(102);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t d = 1 + rng.below(64);
            const std::size_t n = 1 + rng.below(100);
            const auto x = oracle::random_vector(d, rng);
            const auto comp = oracle::random_vector(d, rng, -50.0, 50.0);
            const double expected = oracle::dist_to_joined_centroid(x, comp, n);
            const double got = dist_to_candidate_centroid(x, sq(x), comp, n);
            REQUIRE_THAT(got, Catch::Matchers::WithinRel(expected, 1e-9) ||
                                  Catch::Matchers::WithinAbs(expected, 1e-9));
        }
    }
}

TEST_CASE("cosine similarity kernels") {
    SECTION("parallel and orthogonal") {
        const auto x = vec({1.0, 0.0});
        REQUIRE(cosine_to_own_centroid(x, 1.0, vec({2.0, 0.0}), 4.0) == 1.0);
        REQUIRE(cosine_to_own_centroid(x, 1.0, vec({0.0, 3.0}), 9.0) == 0.0);
    }
    SECTION("joined composite parallel to the sample") {
        const auto x = vec({1.0, 0.0});
        REQUIRE_THAT(cosine_to_candidate_centroid(x, 1.0, vec({1.0, 0.0}), 1.0),
                     Catch::Matchers::WithinAbs(1.0, 1e-15));
    }
    SECTION("composite cancelling the sample is degenerate") {
        const auto x = vec({1.0, 0.0});
        REQUIRE_THROWS_AS(cosine_to_candidate_centroid(x, 1.0, vec({-1.0, 0.0}), 1.0),
                          DegenerateClusterError);
        REQUIRE_THROWS_AS(cosine_to_own_centroid(x, 1.0, vec({0.0, 0.0}), 0.0),
                          DegenerateClusterError);
    }
    SECTION("randomized against the direct formulas") {
        Rng rng(103);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t d = 1 + rng.below(64);
            auto x = oracle::random_vector(d, rng);
            const double nrm = std::sqrt(oracle::dot(x, x));
            if (nrm == 0.0) continue;
            for (auto& v : x) v /= nrm;
            const auto comp = oracle::random_vector(d, rng, 0.1, 30.0);
            REQUIRE_THAT(cosine_to_own_centroid(x, sq(x), comp, sq(comp)),
                         Catch::Matchers::WithinAbs(oracle::cosine(x, comp), 1e-9));
            std::vector<double> joined(comp);
            for (std::size_t j = 0; j < d; ++j) joined[j] += x[j];
            REQUIRE_THAT(cosine_to_candidate_centroid(x, sq(x), comp, sq(comp)),
                         Catch::Matchers::WithinAbs(oracle::cosine(x, joined), 1e-9));
        }
    }
    SECTION("own-centroid cosine is exactly invariant to positive rescaling of x") {
        Rng rng(104);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t d = 2 + rng.below(16);
            const auto x = oracle::random_vector(d, rng, 0.1, 5.0);
            const auto comp = oracle::random_vector(d, rng, 0.1, 20.0);
            const double base = cosine_to_own_centroid(x, sq(x), comp, sq(comp));
            for (const double alpha : {0.01, 3.0, 1000.0}) {
                std::vector<double> ax(x);
                for (auto& v : ax) v *= alpha;
                REQUIRE_THAT(cosine_to_own_centroid(ax, sq(ax), comp, sq(comp)),
                             Catch::Matchers::WithinAbs(base, 1e-12));
            }
        }
    }
    SECTION("candidate argmax is invariant to rescaling the whole dataset") {
        // Rescaling only x is not order-preserving here: the joined composite
        // D + x tilts toward x as x grows, so the preferred cluster can
        // legitimately change. Scaling x and the composites together must
        // leave the argmax alone.
        Rng rng(114);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t d = 2 + rng.below(16);
            const std::size_t k = 2 + rng.below(6);
            const auto x = oracle::random_vector(d, rng, 0.1, 5.0);
            std::vector<std::vector<double>> comps;
            for (std::size_t r = 0; r < k; ++r)
                comps.push_back(oracle::random_vector(d, rng, 0.1, 20.0));
            auto argmax_for = [&](double alpha) {
                std::vector<double> ax(x);
                for (auto& v : ax) v *= alpha;
                std::size_t best = 0;
                double best_val = -2.0;
                for (std::size_t r = 0; r < k; ++r) {
                    std::vector<double> ac(comps[r]);
                    for (auto& v : ac) v *= alpha;
                    const double c =
                        cosine_to_candidate_centroid(ax, sq(ax), ac, sq(ac));
                    if (c > best_val) {
                        best_val = c;
                        best = r;
                    }
                }
                return best;
            };
            const std::size_t base = argmax_for(1.0);
            REQUIRE(argmax_for(0.01) == base);
            REQUIRE(argmax_for(3.0) == base);
        }
    }
}

TEST_CASE("sum of squared distances to a cluster via the composite form") {
    SECTION("member case hand instance") {
        const oracle::Rows members = {vec({0.0, 0.0}), vec({2.0, 0.0}), vec({1.0, 0.0})};
        const auto x = vec({1.0, 0.0});
        auto comp = vec({3.0, 0.0});
        const double member_sq_sum = 0.0 + 4.0 + 1.0;
        const double got = dist_to_cluster_sum(x, sq(x), comp, 3, member_sq_sum);
        REQUIRE_THAT(got, Catch::Matchers::WithinRel(2.0, 1e-12));
        REQUIRE_THAT(got, Catch::Matchers::WithinAbs(
                              oracle::pairwise_to_cluster(x, members), 1e-9));
    }
    SECTION("singleton cluster containing only x") {
        const auto x = vec({3.0, -4.0});
        REQUIRE_THAT(dist_to_cluster_sum(x, sq(x), x, 1, sq(x)),
                     Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    SECTION("randomized member case against brute force") {
        Rng rng(105);
        for (int trial = 0; trial < 1000; ++trial) {
            const std::size_t d = 1 + rng.below(16);
            const std::size_t n = 1 + rng.below(64);
            oracle::Rows members;
            for (std::size_t i = 0; i < n; ++i)
                members.push_back(oracle::random_vector(d, rng, -3.0, 3.0));
            const auto& x = members[rng.below(n)];
            std::vector<double> comp(d, 0.0);
            double member_sq_sum = 0.0;
            for (const auto& m : members) {
                for (std::size_t j = 0; j < d; ++j) comp[j] += m[j];
                member_sq_sum += oracle::dot(m, m);
            }
            REQUIRE_THAT(dist_to_cluster_sum(x, sq(x), comp, n, member_sq_sum),
                         Catch::Matchers::WithinAbs(
                             oracle::pairwise_to_cluster(x, members), 1e-6));
        }
    }
    SECTION("unit-normalized rows collapse to 2n - 2 x'D") {
        Rng rng(106);
        for (int trial = 0; trial < 200; ++trial) {
            const std::size_t d = 2 + rng.below(16);
            const std::size_t n = 1 + rng.below(32);
            oracle::Rows members;
            std::vector<double> comp(d, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                auto m = oracle::random_vector(d, rng, -1.0, 1.0);
                const double nrm = std::sqrt(oracle::dot(m, m));
                if (nrm == 0.0) {
                    m[0] = 1.0;
                } else {
                    for (auto& v : m) v /= nrm;
                }
                for (std::size_t j = 0; j < d; ++j) comp[j] += m[j];
                members.push_back(m);
            }
            auto x = members[rng.below(n)];
            const double simplified = 2.0 * static_cast<double>(n) - 2.0 * oracle::dot(x, comp);
            REQUIRE_THAT(simplified,
                         Catch::Matchers::WithinAbs(
                             oracle::pairwise_to_cluster(x, members), 1e-6));
            REQUIRE_THAT(dist_to_cluster_sum(x, oracle::dot(x, x), comp, n,
                                             static_cast<double>(n)),
                         Catch::Matchers::WithinAbs(simplified, 1e-6));
        }
    }
}

TEST_CASE("move gain under the centroid objective") {
    SECTION("hand instance: own 4.0, candidate 2.0") {
        const auto x = vec({0.0, 0.0});
        const auto gain = gain_im(x, 0.0, vec({4.0, 0.0}), 2, vec({2.0, 2.0}), 1, 1,
                                  Metric::SquaredL2);
        REQUIRE_THAT(gain.gain, Catch::Matchers::WithinRel(2.0, 1e-12));
        REQUIRE(gain.candidate == 1);
    }
    SECTION("no-op move has zero gain") {
        const auto x = vec({1.0, 2.0});
        const auto gain = gain_im(x, sq(x), vec({4.0, 0.0}), 2, vec({4.0, 0.0}), 2, 0,
                                  Metric::SquaredL2, true);
        REQUIRE(gain.gain == 0.0);
    }
    SECTION("zero distance on both sides") {
        const auto x = vec({1.0, 1.0});
        const auto comp_own = vec({2.0, 2.0});   // x is the centroid of 2 members
        const auto comp_cand = vec({3.0, 3.0});  // joined centroid is x for n=3
        const auto gain =
            gain_im(x, sq(x), comp_own, 2, comp_cand, 3, 1, Metric::SquaredL2);
        REQUIRE_THAT(gain.gain, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }
    SECTION("cosine mode flips the sign so positive still means profitable") {
        // Own composite orthogonal to x (similarity 0); candidate parallel
        // after joining (similarity 1): the move gains exactly 1.
        const auto x = vec({1.0, 0.0});
        const auto gain = gain_im(x, 1.0, vec({0.0, 3.0}), 1, vec({1.0, 0.0}), 1, 1,
                                  Metric::Cosine);
        REQUIRE_THAT(gain.gain, Catch::Matchers::WithinAbs(1.0, 1e-12));
    }
}

TEST_CASE("move gain under the pairwise objective") {
    SECTION("hand instance") {
        // S_w = {(0,0),(10,0),(5,0)} with x=(5,0); S_v = {(4,0),(6,0)}.
        const auto x = vec({5.0, 0.0});
        const auto comp_w = vec({15.0, 0.0});
        const double sumsq_w = 0.0 + 100.0 + 25.0;
        const auto comp_v = vec({10.0, 0.0});
        const double sumsq_v = 16.0 + 36.0;
        const auto gain = gain_is(x, 25.0, comp_w, 3, sumsq_w, comp_v, 2, sumsq_v, 1);
        REQUIRE_THAT(gain.gain, Catch::Matchers::WithinRel(48.0, 1e-12));
    }
    SECTION("no-op move has zero gain") {
        const auto x = vec({5.0, 0.0});
        REQUIRE(gain_is(x, 25.0, vec({15.0, 0.0}), 3, 125.0, vec({15.0, 0.0}), 3,
                        125.0, 0, true)
                    .gain == 0.0);
    }
    SECTION("applying a positive-gain move lowers the brute-force objective by the gain") {
        Rng rng(107);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t d = 1 + rng.below(4);
            const std::size_t n = 6 + rng.below(20);
            const std::size_t k = 2 + rng.below(2);
            const Dataset data = oracle::random_dataset(n, d, rng);
            const oracle::Rows rows = oracle::rows_of(data);
            ClusterState state = init_random_labels(data, k, trial);

            bool applied = false;
            for (std::size_t i = 0; i < n && !applied; ++i) {
                const std::size_t w = state.labels[i];
                if (state.sizes[w] < 2) continue;
                const DrivenGain best =
                    best_move(data, state, i, w, Objective::Is, Metric::SquaredL2);
                if (!(best.gain > 0.0)) continue;
                const double before = oracle::total_pairwise(rows, state.labels);
                REQUIRE(apply_move(state, data, i, w, best.candidate));
                const double after = oracle::total_pairwise(rows, state.labels);
                REQUIRE_THAT(before - after,
                             Catch::Matchers::WithinAbs(best.gain, 1e-6));
                applied = true;
            }
        }
    }
}
