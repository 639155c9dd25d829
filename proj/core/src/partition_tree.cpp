#include "spinlets/partition_tree.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <mutex>
#include <utility>

#include <nlohmann/json.hpp>

#include "bisection.hpp"
#include "spinlets/error.hpp"
#include "spinlets/parallel.hpp"
#include "spinlets/random.hpp"

namespace spinlets {

namespace {

using detail::CsrGraph;
using detail::GraphRef;

class Bisector {
  public:
    Bisector(const TreeShape& shape, std::uint64_t seed, const BisectionOptions& options,
             std::vector<int>& leaf)
        : shape_(shape), seed_(seed), options_(options), leaf_(leaf) {}

    void split(GraphRef<std::int32_t> g, std::vector<std::int32_t> global, NodeId node,
               CsrGraph<std::int32_t>* owned) {
        if (shape_.is_leaf(node)) {
            for (auto v : global) leaf_[static_cast<std::size_t>(v)] = node.index;
            return;
        }
        const auto size = static_cast<std::int64_t>(g.size());
        const int remaining = shape_.height() - node.depth;
        const std::int64_t even = (size + 1) / 2;
        const auto by_tol = static_cast<std::int64_t>(
            std::floor(options_.balance_tol * static_cast<double>(even) + 1e-9));
        detail::BisectLimits limits;
        limits.max_part = std::min(by_tol, size - (std::int64_t{1} << (remaining - 1)));
        limits.coarsen_to = options_.coarsen_to;
        limits.refine_passes = options_.refine_passes;
        limits.initial_trials = options_.initial_trials;

        Rng rng = make_rng(seed_, "bisect", shape_.column(node));
        auto outcome = detail::bisect_graph(g, limits, rng);
        if (outcome.disconnected) {
            std::lock_guard lock(mutex_);
            warnings_.emplace_back(shape_.column(node),
                                   "node " + to_string(node) +
                                       ": subgraph is disconnected; components distributed by size");
        }

        std::array<CsrGraph<std::int32_t>, 2> sub;
        std::array<std::vector<std::int32_t>, 2> sub_global;
        for (std::uint8_t which = 0; which < 2; ++which) {
            std::vector<std::int32_t> local_to_parent;
            sub[which] = detail::induced_subgraph(g, std::span<const std::uint8_t>(outcome.side), which,
                                                  local_to_parent);
            sub_global[which].reserve(local_to_parent.size());
            for (auto p : local_to_parent) sub_global[which].push_back(global[static_cast<std::size_t>(p)]);
        }
        outcome = {};
        global = {};
        if (owned) *owned = CsrGraph<std::int32_t>{};

        const auto kids = shape_.children(node);
        const bool spawn = thread_limit() > 1 && node.depth < 4 && size > 20000;
        if (spawn) {
            auto left = std::async(std::launch::async, [&] {
                split(sub[0].ref(), std::move(sub_global[0]), kids[0], &sub[0]);
            });
            split(sub[1].ref(), std::move(sub_global[1]), kids[1], &sub[1]);
            left.get();
        } else {
            split(sub[0].ref(), std::move(sub_global[0]), kids[0], &sub[0]);
            split(sub[1].ref(), std::move(sub_global[1]), kids[1], &sub[1]);
        }
    }

    std::vector<std::string> take_warnings() {
        std::sort(warnings_.begin(), warnings_.end());
        std::vector<std::string> out;
        for (auto& w : warnings_) out.push_back(std::move(w.second));
        return out;
    }

  private:
    const TreeShape& shape_;
    std::uint64_t seed_;
    BisectionOptions options_;
    std::vector<int>& leaf_;
    std::mutex mutex_;
    std::vector<std::pair<std::size_t, std::string>> warnings_;
};

}  // namespace

std::vector<std::int64_t> PartitionTree::node_sizes() const {
    std::vector<std::int64_t> sizes(num_nodes(), 0);
    const std::size_t first_leaf = num_leaves() - 1;
    for (int j : leaf_assignment) ++sizes[first_leaf + static_cast<std::size_t>(j - 1)];
    for (std::size_t c = num_nodes() - 1; c > 0; --c) sizes[(c - 1) / 2] += sizes[c];
    return sizes;
}

PartitionTree recursive_bisect(const KnnGraph& graph, int height, std::uint64_t seed, double balance_tol) {
    BisectionOptions options;
    options.balance_tol = balance_tol;
    return recursive_bisect(graph, height, seed, options);
}

PartitionTree recursive_bisect(const KnnGraph& graph, int height, std::uint64_t seed,
                               const BisectionOptions& options) {
    if (height < 1) throw ArgumentError("tree height must be at least 1");
    if (height > 30 || (std::size_t{1} << height) > graph.num_vertices)
        throw ArgumentError("2^h = 2^" + std::to_string(height) + " exceeds the number of vertices (" +
                            std::to_string(graph.num_vertices) + ")");
    if (!(options.balance_tol >= 1.0)) throw ArgumentError("balance tolerance must be at least 1");
    if (graph.offsets.size() != graph.num_vertices + 1)
        throw InternalError("similarity graph offsets are inconsistent");

    PartitionTree tree;
    tree.shape = TreeShape(height);
    tree.leaf_assignment.assign(graph.num_vertices, 0);
    tree.warnings = graph.warnings;

    GraphRef<std::int32_t> root{graph.offsets, graph.neighbors, graph.weights, {}};
    std::vector<std::int32_t> ids(graph.num_vertices);
    for (std::size_t v = 0; v < ids.size(); ++v) ids[v] = static_cast<std::int32_t>(v);
    Bisector bisector(tree.shape, seed, options, tree.leaf_assignment);
    bisector.split(root, std::move(ids), NodeId{0, 1}, nullptr);
    for (auto& w : bisector.take_warnings()) tree.warnings.push_back(std::move(w));
    return tree;
}

std::int64_t leaf_cut(const KnnGraph& graph, const PartitionTree& tree) {
    if (tree.leaf_assignment.size() != graph.num_vertices)
        throw ArgumentError("tree and graph sizes differ");
    std::int64_t cut = 0;
    for (std::size_t v = 0; v < graph.num_vertices; ++v) {
        const auto nb = graph.adjacent(v);
        const auto w = graph.adjacent_weights(v);
        for (std::size_t e = 0; e < nb.size(); ++e) {
            const auto u = static_cast<std::size_t>(nb[e]);
            if (u > v && tree.leaf_assignment[u] != tree.leaf_assignment[v]) cut += w[e];
        }
    }
    return cut;
}

std::vector<NodeId> path_set(const PartitionTree& tree, int j) { return tree.shape.path_set(j); }

std::vector<int> descendant_set(const PartitionTree& tree, int s, int l) {
    return tree.shape.descendant_set(NodeId{s, l});
}

DesignMatrix design_matrix(const PartitionTree& tree) { return tree.shape.design_matrix(); }

CountMatrices aggregate_counts(const PartitionTree& tree, const SpinDataset& dataset) {
    if (tree.leaf_assignment.size() != dataset.num_pos())
        throw ArgumentError("tree covers " + std::to_string(tree.leaf_assignment.size()) +
                            " POs but the dataset has " + std::to_string(dataset.num_pos()));
    const auto n = static_cast<Eigen::Index>(dataset.num_replicates());
    const auto m = static_cast<Eigen::Index>(tree.num_leaves());
    const auto L = static_cast<Eigen::Index>(tree.num_nodes());
    CountMatrices counts;
    counts.X = Eigen::MatrixXi::Zero(n, m);
    for (std::size_t p = 0; p < dataset.num_pos(); ++p) {
        const int j = tree.leaf_assignment[p];
        if (j < 1 || j > m) throw ArgumentError("leaf assignment out of range");
        ++counts.X(static_cast<Eigen::Index>(dataset.pos[p].replicate_index), j - 1);
    }
    counts.Z = Eigen::MatrixXi::Zero(n, L);
    counts.Z.rightCols(m) = counts.X;
    for (Eigen::Index c = L - 1; c > 0; --c) counts.Z.col((c - 1) / 2) += counts.Z.col(c);
    return counts;
}

std::string tree_to_json(const PartitionTree& tree) {
    nlohmann::json doc;
    doc["height"] = tree.height();
    doc["leaf_assignment"] = tree.leaf_assignment;
    return doc.dump();
}

PartitionTree tree_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("height") || !doc.contains("leaf_assignment"))
        throw SchemaError("tree JSON needs 'height' and 'leaf_assignment'");
    PartitionTree tree;
    try {
        tree.shape = TreeShape(doc.at("height").get<int>());
        tree.leaf_assignment = doc.at("leaf_assignment").get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    } catch (const ArgumentError& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    }
    const int m = static_cast<int>(tree.num_leaves());
    for (int j : tree.leaf_assignment)
        if (j < 1 || j > m) throw ParseError("tree JSON: leaf index " + std::to_string(j) + " out of range");
    return tree;
}

}  // namespace spinlets
