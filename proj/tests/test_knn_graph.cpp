#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spinlets/error.hpp"
#include "spinlets/knn_graph.hpp"
#include "spinlets/parallel.hpp"
#include "spinlets/random.hpp"

using namespace spinlets;

namespace {

std::vector<Point4> random_points(std::size_t count, std::uint64_t seed, bool lattice) {
    Rng rng = make_rng(seed, "test-points");
    std::uniform_real_distribution<double> unit(0.0, 50.0);
    std::uniform_int_distribution<int> coarse(0, 4);
    std::vector<Point4> pts(count);
    for (auto& p : pts)
        for (auto& c : p) c = lattice ? coarse(rng) : unit(rng);
    return pts;
}

}  // namespace

TEST(Knn, MatchesBruteForceIncludingTies) {
    for (bool lattice : {false, true})
        for (std::size_t k : {1u, 7u, 30u}) {
            const auto pts = random_points(300, k + lattice, lattice);
            const auto found = knn_search(pts, k);
            const auto truth = oracle::brute_force_knn(pts, k);
            for (std::size_t q = 0; q < pts.size(); ++q)
                for (std::size_t r = 0; r < k; ++r) {
                    ASSERT_EQ(found.neighbors(q)[r], truth[q][r].second) << "q=" << q << " r=" << r;
                    ASSERT_EQ(found.distances(q)[r], static_cast<float>(truth[q][r].first));
                }
        }
}

TEST(Knn, NeverReturnsTheQueryItself) {
    std::vector<Point4> pts(10, Point4{1, 1, 1, 1});  // all duplicates
    const auto found = knn_search(pts, 9);
    for (std::size_t q = 0; q < pts.size(); ++q) {
        for (std::size_t r = 0; r < 9; ++r) EXPECT_NE(static_cast<std::size_t>(found.neighbors(q)[r]), q);
        // Ties resolve to lower indices.
        EXPECT_EQ(found.neighbors(q)[0], q == 0 ? 1 : 0);
    }
}

TEST(Knn, RejectsBadK) {
    const auto pts = random_points(5, 1, false);
    EXPECT_THROW(knn_search(pts, 0), ArgumentError);
    EXPECT_THROW(knn_search(pts, 5), ArgumentError);
}

TEST(Knn, ThreadCountDoesNotChangeResults) {
    const auto pts = random_points(2000, 3, false);
    set_thread_limit(1);
    const auto one = knn_search(pts, 12);
    set_thread_limit(4);
    const auto four = knn_search(pts, 12);
    set_thread_limit(0);
    EXPECT_EQ(one.index, four.index);
    EXPECT_EQ(one.distance, four.distance);
}

TEST(Kernel, ReferenceValues) {
    EXPECT_EQ(kernel_weight(0.0, 2.0), 1000);
    EXPECT_EQ(kernel_weight(2.0, 2.0), 607);  // 1000 exp(-1/2) = 606.53
    EXPECT_EQ(kernel_weight(1e6, 1.0), 1);    // floor at one
}

TEST(Kernel, DefaultK) {
    EXPECT_EQ(default_k(50000), 1500u);
    EXPECT_EQ(default_k(100), 99u);
}

TEST(Bandwidth, Parsing) {
    EXPECT_FALSE(parse_bandwidth("median").fixed.has_value());
    EXPECT_DOUBLE_EQ(*parse_bandwidth("2.5").fixed, 2.5);
    EXPECT_THROW(parse_bandwidth("-1"), ArgumentError);
    EXPECT_THROW(parse_bandwidth("wide"), ArgumentError);
}

TEST(SimilarityGraph, SymmetricWithPositiveWeights) {
    const auto pts = random_points(400, 9, false);
    const auto g = build_similarity_graph(knn_search(pts, 8));
    std::size_t directed = 0;
    for (std::size_t u = 0; u < g.num_vertices; ++u) {
        const auto nb = g.adjacent(u);
        const auto w = g.adjacent_weights(u);
        directed += nb.size();
        EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
        for (std::size_t e = 0; e < nb.size(); ++e) {
            EXPECT_NE(static_cast<std::size_t>(nb[e]), u);
            EXPECT_GE(w[e], 1);
            const auto back = g.adjacent(static_cast<std::size_t>(nb[e]));
            const auto it = std::lower_bound(back.begin(), back.end(), static_cast<std::int32_t>(u));
            ASSERT_TRUE(it != back.end() && *it == static_cast<std::int32_t>(u));
            EXPECT_EQ(g.adjacent_weights(static_cast<std::size_t>(nb[e]))[it - back.begin()], w[e]);
        }
        EXPECT_GE(nb.size(), 8u);  // union symmetrization keeps every own neighbour
    }
    EXPECT_EQ(directed, 2 * g.total_edges);
}

TEST(SimilarityGraph, MedianBandwidthAndKernel) {
    // Four points on a line: neighbour distances are 1, 1, 1, 1, 1, 1 (K = 1 gives 1 each).
    std::vector<Point4> pts = {{0, 0, 0, 0}, {1, 0, 0, 0}, {2, 0, 0, 0}, {3, 0, 0, 0}};
    const auto g = build_similarity_graph(knn_search(pts, 1));
    EXPECT_DOUBLE_EQ(g.sigma, 1.0);
    EXPECT_EQ(g.total_edges, 3u);
    for (std::size_t u = 0; u < 4; ++u)
        for (auto w : g.adjacent_weights(u)) EXPECT_EQ(w, 607);
}

TEST(SimilarityGraph, FixedBandwidthAndZeroDistances) {
    std::vector<Point4> same(3, Point4{0, 0, 0, 0});
    const auto g = build_similarity_graph(knn_search(same, 2));
    EXPECT_EQ(g.sigma, 1.0);
    EXPECT_EQ(g.warnings.size(), 1u);
    const auto fixed = build_similarity_graph(knn_search(same, 2), Bandwidth::constant(3.0));
    EXPECT_EQ(fixed.sigma, 3.0);
}

TEST(SimilarityGraph, EdgeListAndFromEdges) {
    const auto g = KnnGraph::from_edges(4, {{0, 1, 5}, {1, 0, 7}, {2, 3, 1}});
    EXPECT_EQ(g.total_edges, 2u);
    std::ostringstream out;
    write_edge_list(g, out);
    EXPECT_EQ(out.str(), "0 1 7\n2 3 1\n");
    EXPECT_THROW(KnnGraph::from_edges(2, {{0, 0, 1}}), ArgumentError);
    EXPECT_THROW(KnnGraph::from_edges(2, {{0, 1, 0}}), ArgumentError);
    EXPECT_THROW(KnnGraph::from_edges(2, {{0, 2, 1}}), ArgumentError);
}
