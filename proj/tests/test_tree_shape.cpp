#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "spinlets/error.hpp"
#include "spinlets/partition_tree.hpp"
#include "spinlets/random.hpp"
#include "spinlets/tree_shape.hpp"

using namespace spinlets;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(TreeShape, GoldenDesignMatrixHeightThree) {
    const std::string golden = read_file(std::string(SPINLETS_TEST_DATA) + "/design_h3.txt");
    ASSERT_FALSE(golden.empty());
    EXPECT_EQ(TreeShape(3).design_matrix().to_text(), golden);
}

TEST(TreeShape, Counts) {
    const TreeShape t(5);
    EXPECT_EQ(t.num_leaves(), 32u);
    EXPECT_EQ(t.num_nodes(), 63u);
    EXPECT_EQ(t.num_internal(), 31u);
    EXPECT_THROW(TreeShape(0), ArgumentError);
    EXPECT_THROW(TreeShape(25), ArgumentError);
}

TEST(TreeShape, PathSetExample) {
    const auto path = TreeShape(4).path_set(8);
    const std::vector<NodeId> expected = {{0, 1}, {1, 1}, {2, 2}, {3, 4}, {4, 8}};
    EXPECT_EQ(path, expected);
    EXPECT_THROW(TreeShape(4).path_set(17), ArgumentError);
    EXPECT_THROW(TreeShape(4).path_set(0), ArgumentError);
}

TEST(TreeShape, DescendantSetExample) {
    const auto leaves = TreeShape(4).descendant_set({2, 4});
    EXPECT_EQ(leaves, (std::vector<int>{13, 14, 15, 16}));
    EXPECT_EQ(TreeShape(4).descendant_set({0, 1}).size(), 16u);
    EXPECT_THROW(TreeShape(4).descendant_set({2, 5}), ArgumentError);
}

TEST(TreeShape, ColumnsAreBreadthFirst) {
    const TreeShape t(6);
    for (std::size_t c = 0; c < t.num_nodes(); ++c) {
        const NodeId node = t.node_at(c);
        EXPECT_EQ(t.column(node), c);
        if (!t.is_leaf(node)) {
            const auto kids = t.children(node);
            EXPECT_EQ(t.column(kids[0]), 2 * c + 1);
            EXPECT_EQ(t.column(kids[1]), 2 * c + 2);
        }
    }
    EXPECT_EQ(t.column(t.leaf(1)), 63u);
    EXPECT_EQ(to_string(NodeId{2, 3}), "(2,3)");
}

TEST(TreeShape, DesignRowsArePathSetsAndColumnsAreDescendantSets) {
    for (int h = 1; h <= 6; ++h) {
        const TreeShape t(h);
        const Eigen::MatrixXi d = t.design_matrix().to_dense();
        ASSERT_EQ(d.rows(), static_cast<Eigen::Index>(t.num_leaves()));
        ASSERT_EQ(d.cols(), static_cast<Eigen::Index>(t.num_nodes()));
        for (int j = 1; j <= static_cast<int>(t.num_leaves()); ++j) {
            EXPECT_EQ(d.row(j - 1).sum(), h + 1);
            for (const auto& node : t.path_set(j)) EXPECT_EQ(d(j - 1, static_cast<Eigen::Index>(t.column(node))), 1);
        }
        for (std::size_t c = 0; c < t.num_nodes(); ++c) {
            const auto leaves = t.descendant_set(t.node_at(c));
            EXPECT_EQ(d.col(static_cast<Eigen::Index>(c)).sum(), static_cast<int>(leaves.size()));
            for (int leaf : leaves) EXPECT_EQ(d(leaf - 1, static_cast<Eigen::Index>(c)), 1);
        }
    }
}

TEST(TreeShape, ExpandAndAggregateAreTheDesignProducts) {
    Rng rng = make_rng(5, "test-tree");
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int h = 1; h <= 6; ++h) {
        const TreeShape t(h);
        const Eigen::MatrixXd d = t.design_matrix().to_dense().cast<double>();
        Eigen::VectorXd gamma(d.cols()), v(d.rows());
        for (auto& g : gamma) g = normal(rng);
        for (auto& x : v) x = normal(rng);
        EXPECT_LE((t.expand(gamma) - d * gamma).lpNorm<Eigen::Infinity>(), 1e-12);
        EXPECT_LE((t.aggregate(v) - d.transpose() * v).lpNorm<Eigen::Infinity>(), 1e-12);
        // beta^T x = gamma^T (D^T x)
        EXPECT_NEAR(t.expand(gamma).dot(v), gamma.dot(t.aggregate(v)), 1e-10);
    }
}
