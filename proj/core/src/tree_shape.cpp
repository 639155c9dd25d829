#include "spinlets/tree_shape.hpp"

#include "spinlets/error.hpp"

namespace spinlets {

std::string to_string(NodeId node) {
    return "(" + std::to_string(node.depth) + "," + std::to_string(node.index) + ")";
}

Eigen::MatrixXi DesignMatrix::to_dense() const {
    Eigen::MatrixXi d = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(rows),
                                              static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
        for (auto c : row_ones[r]) d(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = 1;
    return d;
}

std::string DesignMatrix::to_text() const {
    const auto dense = to_dense();
    std::string out;
    for (Eigen::Index r = 0; r < dense.rows(); ++r) {
        for (Eigen::Index c = 0; c < dense.cols(); ++c) {
            if (c > 0) out += ' ';
            out += dense(r, c) ? '1' : '0';
        }
        out += '\n';
    }
    return out;
}

TreeShape::TreeShape(int height) : height_(height) {
    if (height < 1 || height > 24) throw ArgumentError("tree height must lie in [1, 24]");
}

bool TreeShape::contains(NodeId node) const {
    return node.depth >= 0 && node.depth <= height_ && node.index >= 1 &&
           node.index <= (1 << node.depth);
}

std::size_t TreeShape::column(NodeId node) const {
    if (!contains(node)) throw ArgumentError("invalid tree node " + to_string(node));
    return (std::size_t{1} << node.depth) - 1 + static_cast<std::size_t>(node.index - 1);
}

NodeId TreeShape::node_at(std::size_t column) const {
    if (column >= num_nodes()) throw ArgumentError("node column out of range");
    int depth = 0;
    while ((std::size_t{2} << depth) - 1 <= column) ++depth;
    return {depth, static_cast<int>(column - ((std::size_t{1} << depth) - 1)) + 1};
}

NodeId TreeShape::leaf(int j) const {
    if (j < 1 || static_cast<std::size_t>(j) > num_leaves())
        throw ArgumentError("leaf index " + std::to_string(j) + " out of range");
    return {height_, j};
}

std::array<NodeId, 2> TreeShape::children(NodeId node) const {
    if (!contains(node) || is_leaf(node))
        throw ArgumentError("node " + to_string(node) + " has no children");
    return {NodeId{node.depth + 1, 2 * node.index - 1}, NodeId{node.depth + 1, 2 * node.index}};
}

std::vector<NodeId> TreeShape::path_set(int j) const {
    const NodeId bottom = leaf(j);
    std::vector<NodeId> path(static_cast<std::size_t>(height_) + 1);
    int index = bottom.index;
    for (int s = height_; s >= 0; --s) {
        path[static_cast<std::size_t>(s)] = {s, index};
        index = (index + 1) / 2;
    }
    return path;
}

std::pair<int, int> TreeShape::leaf_range(NodeId node) const {
    if (!contains(node)) throw ArgumentError("invalid tree node " + to_string(node));
    const int span = 1 << (height_ - node.depth);
    return {(node.index - 1) * span + 1, node.index * span};
}

std::vector<int> TreeShape::descendant_set(NodeId node) const {
    const auto [first, last] = leaf_range(node);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(last - first + 1));
    for (int j = first; j <= last; ++j) out.push_back(j);
    return out;
}

DesignMatrix TreeShape::design_matrix() const {
    DesignMatrix d;
    d.rows = num_leaves();
    d.cols = num_nodes();
    d.row_ones.resize(d.rows);
    for (std::size_t j = 1; j <= d.rows; ++j)
        for (const auto& node : path_set(static_cast<int>(j))) d.row_ones[j - 1].push_back(column(node));
    return d;
}

Eigen::VectorXd TreeShape::expand(const Eigen::VectorXd& gamma) const {
    if (static_cast<std::size_t>(gamma.size()) != num_nodes())
        throw InternalError("expand: gamma has the wrong length");
    // Accumulate top-down: each node's value is its parent's plus its own gamma.
    Eigen::VectorXd acc = gamma;
    for (std::size_t c = 1; c < num_nodes(); ++c) acc[c] += acc[(c - 1) / 2];
    return acc.tail(static_cast<Eigen::Index>(num_leaves()));
}

Eigen::VectorXd TreeShape::aggregate(const Eigen::VectorXd& leaf_values) const {
    if (static_cast<std::size_t>(leaf_values.size()) != num_leaves())
        throw InternalError("aggregate: wrong number of leaf values");
    Eigen::VectorXd z = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_nodes()));
    z.tail(static_cast<Eigen::Index>(num_leaves())) = leaf_values;
    for (std::size_t c = num_nodes() - 1; c > 0; --c) z[(c - 1) / 2] += z[c];
    return z;
}

}  // namespace spinlets
