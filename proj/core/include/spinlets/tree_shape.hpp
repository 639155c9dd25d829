#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace spinlets {

/// Tree node (s, l): depth s in [0, h], 1-based position l in [1, 2^s].
struct NodeId {
    int depth = 0;
    int index = 1;
    friend bool operator==(const NodeId&, const NodeId&) = default;
    friend auto operator<=>(const NodeId&, const NodeId&) = default;
};

std::string to_string(NodeId node);

/// Binary design matrix D (m x L) with beta = D gamma, stored as the h+1 column
/// indices of the ones in each row.
struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::vector<std::size_t>> row_ones;

    Eigen::MatrixXi to_dense() const;
    /// Space-separated 0/1 rows, one line per leaf.
    std::string to_text() const;
};

/// The complete binary tree of height h with breadth-first node numbering:
/// column(s, l) = 2^s - 1 + (l - 1), so the root is column 0 and leaf j is
/// column 2^h - 2 + j. Leaves are numbered 1..2^h.
class TreeShape {
  public:
    explicit TreeShape(int height);

    int height() const { return height_; }
    std::size_t num_leaves() const { return std::size_t{1} << height_; }
    std::size_t num_nodes() const { return (std::size_t{1} << (height_ + 1)) - 1; }
    std::size_t num_internal() const { return num_leaves() - 1; }

    bool contains(NodeId node) const;
    std::size_t column(NodeId node) const;
    NodeId node_at(std::size_t column) const;
    NodeId leaf(int j) const;
    bool is_leaf(NodeId node) const { return node.depth == height_; }

    std::array<NodeId, 2> children(NodeId node) const;

    /// Root-to-leaf path (0,1), ..., (h, j).
    std::vector<NodeId> path_set(int j) const;
    /// Leaves under a node, ascending.
    std::vector<int> descendant_set(NodeId node) const;
    /// First and last leaf (inclusive) under a node.
    std::pair<int, int> leaf_range(NodeId node) const;

    DesignMatrix design_matrix() const;

    /// beta = D gamma.
    Eigen::VectorXd expand(const Eigen::VectorXd& gamma) const;
    /// D^T v: per-node sums of leaf values over descendant sets.
    Eigen::VectorXd aggregate(const Eigen::VectorXd& leaf_values) const;

  private:
    int height_;
};

}  // namespace spinlets
