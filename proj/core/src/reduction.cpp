#include "spinlets/reduction.hpp"

#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

#include "spinlets/error.hpp"

namespace spinlets {

std::size_t ReducedRepresentation::num_active() const {
    std::size_t k = 0;
    for (const auto& g : groups) k += g.deleted ? 0 : 1;
    return k;
}

ReducedRepresentation extract_reduction(const Eigen::VectorXd& beta_hat, const TreeShape& tree, double threshold) {
    if (!(threshold >= 0.0)) throw ArgumentError("threshold must be non-negative");
    if (static_cast<std::size_t>(beta_hat.size()) != tree.num_leaves())
        throw ArgumentError("coefficient vector does not match the tree's leaves");
    const std::size_t L = tree.num_nodes();
    const std::size_t first_leaf = tree.num_leaves() - 1;
    std::vector<double> lo(L), hi(L), sum(L);
    for (std::size_t c = L; c-- > 0;) {
        if (c >= first_leaf) {
            lo[c] = hi[c] = sum[c] = beta_hat[static_cast<Eigen::Index>(c - first_leaf)];
        } else {
            lo[c] = std::min(lo[2 * c + 1], lo[2 * c + 2]);
            hi[c] = std::max(hi[2 * c + 1], hi[2 * c + 2]);
            sum[c] = sum[2 * c + 1] + sum[2 * c + 2];
        }
    }
    ReducedRepresentation out;
    out.height = tree.height();
    out.threshold = threshold;
    const std::function<void(std::size_t)> visit = [&](std::size_t c) {
        if (hi[c] - lo[c] <= threshold) {
            LeafGroup g;
            g.node = tree.node_at(c);
            g.member_leaves = tree.descendant_set(g.node);
            g.fused_beta = sum[c] / static_cast<double>(g.member_leaves.size());
            g.deleted = std::abs(g.fused_beta) <= threshold;
            out.groups.push_back(std::move(g));
            return;
        }
        visit(2 * c + 1);
        visit(2 * c + 2);
    };
    visit(0);
    return out;
}

Eigen::VectorXd score_replicates(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_hat) {
    if (X.cols() != beta_hat.size()) throw ArgumentError("count matrix columns do not match the coefficients");
    return X * beta_hat;
}

std::string reduction_to_json(const ReducedRepresentation& r) {
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : r.groups)
        groups.push_back({{"depth", g.node.depth},
                          {"index", g.node.index},
                          {"member_leaves", g.member_leaves},
                          {"fused_beta", g.fused_beta},
                          {"deleted", g.deleted}});
    return nlohmann::json{{"height", r.height}, {"threshold", r.threshold}, {"groups", groups}}.dump(1);
}

ReducedRepresentation reduction_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        ReducedRepresentation r;
        r.height = doc.at("height").get<int>();
        r.threshold = doc.at("threshold").get<double>();
        for (const auto& g : doc.at("groups")) {
            LeafGroup lg;
            lg.node = {g.at("depth").get<int>(), g.at("index").get<int>()};
            lg.member_leaves = g.at("member_leaves").get<std::vector<int>>();
            lg.fused_beta = g.at("fused_beta").get<double>();
            lg.deleted = g.at("deleted").get<bool>();
            r.groups.push_back(std::move(lg));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("reduction JSON: ") + e.what());
    }
}

std::vector<GroupGeometry> group_geometry(const ReducedRepresentation& reduction, const SpinDataset& dataset,
                                          const PartitionTree& tree, std::optional<std::size_t> replicate) {
    if (tree.leaf_assignment.size() != dataset.num_pos())
        throw ArgumentError("tree and dataset cover different POs");
    if (replicate && *replicate >= dataset.num_replicates()) throw ArgumentError("replicate index out of range");
    const auto m = static_cast<int>(tree.num_leaves());
    std::vector<int> group_of_leaf(static_cast<std::size_t>(m) + 1, -1);
    for (std::size_t g = 0; g < reduction.groups.size(); ++g)
        for (int j : reduction.groups[g].member_leaves) {
            if (j < 1 || j > m) throw ArgumentError("reduction does not match the tree");
            group_of_leaf[static_cast<std::size_t>(j)] = static_cast<int>(g);
        }

    std::vector<std::vector<Point2>> origins(reduction.groups.size()), dests(reduction.groups.size());
    for (std::size_t p = 0; p < dataset.num_pos(); ++p) {
        const auto& po = dataset.pos[p];
        if (replicate && po.replicate_index != *replicate) continue;
        const int g = group_of_leaf[static_cast<std::size_t>(tree.leaf_assignment[p])];
        if (g < 0) throw ArgumentError("reduction does not cover every leaf");
        origins[static_cast<std::size_t>(g)].push_back(po.origin);
        dests[static_cast<std::size_t>(g)].push_back(po.destination);
    }

    const auto centroid = [](const std::vector<Point2>& pts) {
        Point2 c;
        for (const auto& p : pts) c.x += p.x, c.y += p.y;
        c.x /= static_cast<double>(pts.size());
        c.y /= static_cast<double>(pts.size());
        return c;
    };
    std::vector<GroupGeometry> out;
    for (std::size_t g = 0; g < reduction.groups.size(); ++g) {
        const auto& group = reduction.groups[g];
        if (group.deleted || origins[g].empty()) continue;
        GroupGeometry geo;
        geo.node = group.node;
        geo.fused_beta = group.fused_beta;
        geo.count = origins[g].size();
        geo.origin_centroid = centroid(origins[g]);
        geo.dest_centroid = centroid(dests[g]);
        geo.origin_hull = convex_hull(origins[g]);
        geo.dest_hull = convex_hull(dests[g]);
        geo.degenerate = geo.origin_hull.size() < 3 || geo.dest_hull.size() < 3;
        out.push_back(std::move(geo));
    }
    return out;
}

}  // namespace spinlets
