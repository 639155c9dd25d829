#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinlets/ingest.hpp"
#include "spinlets/knn_graph.hpp"
#include "spinlets/tree_shape.hpp"

namespace spinlets {

/// Full binary partition of the POs: every PO carries one leaf index in [1, 2^h].
struct PartitionTree {
    TreeShape shape{1};
    std::vector<int> leaf_assignment;
    std::vector<std::string> warnings;

    int height() const { return shape.height(); }
    std::size_t num_leaves() const { return shape.num_leaves(); }
    std::size_t num_nodes() const { return shape.num_nodes(); }

    /// Number of POs under each node, in breadth-first column order.
    std::vector<std::int64_t> node_sizes() const;
};

struct BisectionOptions {
    double balance_tol = 1.03;
    int coarsen_to = 64;
    int refine_passes = 2;
    int initial_trials = 8;
};

/// Recursive multilevel bisection of the similarity graph into 2^h leaves.
PartitionTree recursive_bisect(const KnnGraph& graph, int height, std::uint64_t seed,
                               double balance_tol = 1.03);
PartitionTree recursive_bisect(const KnnGraph& graph, int height, std::uint64_t seed,
                               const BisectionOptions& options);

/// Total weight of edges joining different leaves.
std::int64_t leaf_cut(const KnnGraph& graph, const PartitionTree& tree);

std::vector<NodeId> path_set(const PartitionTree& tree, int j);
std::vector<int> descendant_set(const PartitionTree& tree, int s, int l);
DesignMatrix design_matrix(const PartitionTree& tree);

/// Leaf counts X (n x m) and node counts Z (n x L).
struct CountMatrices {
    Eigen::MatrixXi X;
    Eigen::MatrixXi Z;
};

CountMatrices aggregate_counts(const PartitionTree& tree, const SpinDataset& dataset);

std::string tree_to_json(const PartitionTree& tree);
PartitionTree tree_from_json(const std::string& text);

}  // namespace spinlets
