#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "spinlets/ingest.hpp"
#include "spinlets/partition_tree.hpp"
#include "spinlets/tree_shape.hpp"

namespace spinlets {

/// A maximal subtree whose leaf effects agree within the threshold.
struct LeafGroup {
    NodeId node;
    std::vector<int> member_leaves;
    double fused_beta = 0.0;
    bool deleted = false;
};

struct ReducedRepresentation {
    int height = 1;
    double threshold = 0.0;
    std::vector<LeafGroup> groups;  // in leaf order

    std::size_t num_active() const;
};

/// Fuse every maximal subtree with max - min <= threshold into one group (mean effect)
/// and delete groups whose fused effect is within the threshold of zero.
ReducedRepresentation extract_reduction(const Eigen::VectorXd& beta_hat, const TreeShape& tree,
                                        double threshold = 0.005);

/// Row-wise beta^T x_i.
Eigen::VectorXd score_replicates(const Eigen::MatrixXd& X, const Eigen::VectorXd& beta_hat);

std::string reduction_to_json(const ReducedRepresentation& reduction);
ReducedRepresentation reduction_from_json(const std::string& text);

/// Counter-clockwise convex hull without collinear points (Andrew's monotone chain).
/// Fewer than three distinct points give the distinct points themselves.
std::vector<Point2> convex_hull(std::vector<Point2> points);

struct GroupGeometry {
    NodeId node;
    double fused_beta = 0.0;
    std::vector<Point2> origin_hull;
    std::vector<Point2> dest_hull;
    Point2 origin_centroid;
    Point2 dest_centroid;
    std::size_t count = 0;
    bool degenerate = false;  // a hull with fewer than three vertices
};

/// Hulls and centroids of each non-deleted group's POs, optionally restricted to one replicate.
std::vector<GroupGeometry> group_geometry(const ReducedRepresentation& reduction, const SpinDataset& dataset,
                                          const PartitionTree& tree,
                                          std::optional<std::size_t> replicate = std::nullopt);

/// Pitch of 120 x 80 with translucent hulls and arrows between centroids.
std::string render_svg(const std::vector<GroupGeometry>& groups, const std::string& title);

/// One row per hull vertex: group,node,endpoint,vertex,x,y.
void write_hull_csv(const std::vector<GroupGeometry>& groups, std::ostream& out);

}  // namespace spinlets
