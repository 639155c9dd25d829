#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinlets {

using Point4 = std::array<double, 4>;

/// Flattened K-nearest-neighbour lists: row q holds the K neighbours of point q in
/// increasing (distance, index) order.
struct KnnResult {
    std::size_t num_points = 0;
    std::size_t k = 0;
    std::vector<std::int32_t> index;
    std::vector<float> distance;

    std::span<const std::int32_t> neighbors(std::size_t q) const {
        return {index.data() + q * k, k};
    }
    std::span<const float> distances(std::size_t q) const {
        return {distance.data() + q * k, k};
    }
};

/// Static 4-d tree over a point set for exact K-nearest-neighbour queries.
class KdTree {
  public:
    explicit KdTree(std::span<const Point4> points, std::size_t leaf_size = 16);

    /// The k nearest points to point `query` (itself excluded), ties broken by lower index.
    void query(std::size_t query, std::size_t k, std::vector<std::pair<double, std::int32_t>>& heap) const;

  private:
    struct Node {
        std::uint32_t begin = 0, end = 0;
        std::int32_t left = -1, right = -1;
        int dim = -1;
        double split = 0.0;
    };
    std::int32_t build(std::uint32_t begin, std::uint32_t end);

    std::span<const Point4> points_;
    std::vector<std::int32_t> order_;
    std::vector<Node> nodes_;
    std::size_t leaf_size_;
};

/// Exact Euclidean K-nearest neighbours of every point.
KnnResult knn_search(std::span<const Point4> points, std::size_t k);

/// Squared Euclidean distance in the fixed summation order used everywhere.
inline double squared_distance(const Point4& a, const Point4& b) {
    double s = 0.0;
    for (int d = 0; d < 4; ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

/// Kernel bandwidth: the median kNN distance, or a fixed value.
struct Bandwidth {
    std::optional<double> fixed;
    static Bandwidth median() { return {}; }
    static Bandwidth constant(double sigma) { return {sigma}; }
};

Bandwidth parse_bandwidth(const std::string& text);

/// Symmetric sparse similarity graph in compressed-row form.
struct KnnGraph {
    std::size_t num_vertices = 0;
    std::vector<std::size_t> offsets;      // size num_vertices + 1
    std::vector<std::int32_t> neighbors;   // sorted within each row
    std::vector<std::int32_t> weights;     // parallel to neighbors, all >= 1
    std::size_t total_edges = 0;           // undirected edge count
    double sigma = 0.0;
    std::vector<std::string> warnings;

    std::span<const std::int32_t> adjacent(std::size_t v) const {
        return {neighbors.data() + offsets[v], offsets[v + 1] - offsets[v]};
    }
    std::span<const std::int32_t> adjacent_weights(std::size_t v) const {
        return {weights.data() + offsets[v], offsets[v + 1] - offsets[v]};
    }

    /// Build from an explicit undirected edge list (u, v, w); duplicates keep the largest weight.
    static KnnGraph from_edges(std::size_t num_vertices,
                               const std::vector<std::array<std::int64_t, 3>>& edges);
};

/// Gaussian-kernel weight scaled to integers: max(1, round(1000 exp(-d^2 / (2 sigma^2)))).
std::int32_t kernel_weight(double distance, double sigma);

/// Union-symmetrised kNN graph with kernel weights.
KnnGraph build_similarity_graph(const KnnResult& knn, Bandwidth bandwidth = Bandwidth::median());

/// Default neighbourhood size for Q points: min(1500, Q - 1).
std::size_t default_k(std::size_t num_points);

/// One `u v w` line per undirected edge with u < v.
void write_edge_list(const KnnGraph& graph, std::ostream& out);

}  // namespace spinlets
