#include "spinlets/knn_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "spinlets/error.hpp"
#include "spinlets/parallel.hpp"

namespace spinlets {

KdTree::KdTree(std::span<const Point4> points, std::size_t leaf_size)
    : points_(points), order_(points.size()), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
    std::iota(order_.begin(), order_.end(), 0);
    if (!points.empty()) {
        nodes_.reserve(2 * points.size() / leaf_size_ + 2);
        build(0, static_cast<std::uint32_t>(points.size()));
    }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{begin, end});
    if (end - begin <= leaf_size_) return id;

    std::array<double, 4> lo, hi;
    lo.fill(std::numeric_limits<double>::infinity());
    hi.fill(-std::numeric_limits<double>::infinity());
    for (auto i = begin; i < end; ++i) {
        const auto& p = points_[order_[i]];
        for (int d = 0; d < 4; ++d) {
            lo[d] = std::min(lo[d], p[d]);
            hi[d] = std::max(hi[d], p[d]);
        }
    }
    int dim = 0;
    for (int d = 1; d < 4; ++d)
        if (hi[d] - lo[d] > hi[dim] - lo[dim]) dim = d;
    if (hi[dim] - lo[dim] <= 0.0) return id;  // all points identical

    const auto mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::int32_t a, std::int32_t b) { return points_[a][dim] < points_[b][dim]; });
    const double split = points_[order_[mid]][dim];
    const auto left = build(begin, mid);
    const auto right = build(mid, end);
    auto& node = nodes_[id];
    node.dim = dim;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
}

void KdTree::query(std::size_t q, std::size_t k,
                   std::vector<std::pair<double, std::int32_t>>& heap) const {
    heap.clear();
    if (nodes_.empty() || k == 0) return;
    const Point4& target = points_[q];
    std::array<double, 4> offset{};

    auto visit = [&](auto&& self, std::int32_t id, double bound) -> void {
        const Node& node = nodes_[id];
        if (node.dim < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::int32_t cand = order_[i];
                if (static_cast<std::size_t>(cand) == q) continue;
                const std::pair<double, std::int32_t> entry{squared_distance(target, points_[cand]), cand};
                if (heap.size() < k) {
                    heap.push_back(entry);
                    std::push_heap(heap.begin(), heap.end());
                } else if (entry < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = entry;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const double diff = target[node.dim] - node.split;
        const std::int32_t near = diff < 0.0 ? node.left : node.right;
        const std::int32_t far = diff < 0.0 ? node.right : node.left;
        self(self, near, bound);
        const double old = offset[node.dim];
        const double far_bound = bound - old * old + diff * diff;
        // Equal bounds may still hide lower-index ties, so prune only on strict excess.
        if (heap.size() < k || far_bound <= heap.front().first) {
            offset[node.dim] = diff;
            self(self, far, far_bound);
            offset[node.dim] = old;
        }
    };
    visit(visit, 0, 0.0);
    std::sort_heap(heap.begin(), heap.end());
}

KnnResult knn_search(std::span<const Point4> points, std::size_t k) {
    const std::size_t n = points.size();
    if (k < 1 || n < 2 || k > n - 1)
        throw ArgumentError("K must satisfy 1 <= K <= Q-1 (K=" + std::to_string(k) +
                            ", Q=" + std::to_string(n) + ")");
    if (n > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max()))
        throw ArgumentError("too many points for 32-bit vertex indices");
    for (const auto& p : points)
        for (double c : p)
            if (!std::isfinite(c)) throw ArgumentError("non-finite coordinate in kNN input");

    KdTree tree(points);
    KnnResult out;
    out.num_points = n;
    out.k = k;
    out.index.resize(n * k);
    out.distance.resize(n * k);

    const std::size_t block = 256;
    const std::size_t blocks = (n + block - 1) / block;
    parallel_for(blocks, [&](std::size_t b) {
        std::vector<std::pair<double, std::int32_t>> heap;
        heap.reserve(k + 1);
        for (std::size_t q = b * block; q < std::min(n, (b + 1) * block); ++q) {
            tree.query(q, k, heap);
            for (std::size_t r = 0; r < k; ++r) {
                out.index[q * k + r] = heap[r].second;
                out.distance[q * k + r] = static_cast<float>(std::sqrt(heap[r].first));
            }
        }
    });
    return out;
}

std::size_t default_k(std::size_t num_points) {
    if (num_points < 2) return 0;
    return std::min<std::size_t>(1500, num_points - 1);
}

Bandwidth parse_bandwidth(const std::string& text) {
    if (text == "median") return Bandwidth::median();
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used == text.size() && v > 0.0 && std::isfinite(v)) return Bandwidth::constant(v);
    } catch (const std::exception&) {
    }
    throw ArgumentError("bandwidth must be 'median' or a positive number, got '" + text + "'");
}

std::int32_t kernel_weight(double distance, double sigma) {
    const double w = std::round(1000.0 * std::exp(-distance * distance / (2.0 * sigma * sigma)));
    return std::max<std::int32_t>(1, static_cast<std::int32_t>(w));
}

KnnGraph build_similarity_graph(const KnnResult& knn, Bandwidth bandwidth) {
    KnnGraph g;
    const std::size_t n = knn.num_points;
    g.num_vertices = n;

    double sigma = 0.0;
    if (bandwidth.fixed) {
        sigma = *bandwidth.fixed;
        if (!(sigma > 0.0)) throw ArgumentError("bandwidth must be positive");
    } else if (!knn.distance.empty()) {
        std::vector<float> d(knn.distance);
        const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
        std::nth_element(d.begin(), mid, d.end());
        sigma = *mid;
        if (d.size() % 2 == 0) {
            const float below = *std::max_element(d.begin(), mid);
            sigma = 0.5 * (static_cast<double>(below) + sigma);
        }
    }
    if (!(sigma > 0.0)) {
        g.warnings.push_back("all kNN distances are zero; kernel bandwidth set to 1");
        sigma = 1.0;
    }
    g.sigma = sigma;

    std::vector<std::size_t> degree(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) {
        for (auto v : knn.neighbors(u)) {
            if (static_cast<std::size_t>(v) == u) continue;
            ++degree[u];
            ++degree[static_cast<std::size_t>(v)];
        }
    }
    g.offsets.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u) g.offsets[u + 1] = g.offsets[u] + degree[u];
    g.neighbors.resize(g.offsets[n]);
    g.weights.resize(g.offsets[n]);
    std::vector<std::size_t> fill(g.offsets.begin(), g.offsets.end() - 1);
    for (std::size_t u = 0; u < n; ++u) {
        const auto nb = knn.neighbors(u);
        const auto ds = knn.distances(u);
        for (std::size_t r = 0; r < nb.size(); ++r) {
            const auto v = static_cast<std::size_t>(nb[r]);
            if (v == u) continue;
            const std::int32_t w = kernel_weight(ds[r], sigma);
            g.neighbors[fill[u]] = static_cast<std::int32_t>(v);
            g.weights[fill[u]++] = w;
            g.neighbors[fill[v]] = static_cast<std::int32_t>(u);
            g.weights[fill[v]++] = w;
        }
    }
    degree.clear();
    degree.shrink_to_fit();

    // Sort each row and drop duplicates from mutual pairs, compacting in place.
    std::vector<std::pair<std::int32_t, std::int32_t>> row;
    std::size_t write = 0;
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t lo = g.offsets[u], hi = g.offsets[u + 1];
        row.clear();
        for (std::size_t e = lo; e < hi; ++e) row.emplace_back(g.neighbors[e], g.weights[e]);
        std::sort(row.begin(), row.end());
        g.offsets[u] = write;
        for (std::size_t r = 0; r < row.size(); ++r) {
            if (r > 0 && row[r].first == row[r - 1].first) {
                g.weights[write - 1] = std::max(g.weights[write - 1], row[r].second);
                continue;
            }
            g.neighbors[write] = row[r].first;
            g.weights[write++] = row[r].second;
        }
    }
    g.offsets[n] = write;
    g.neighbors.resize(write);
    g.weights.resize(write);
    g.neighbors.shrink_to_fit();
    g.weights.shrink_to_fit();
    g.total_edges = write / 2;
    return g;
}

KnnGraph KnnGraph::from_edges(std::size_t num_vertices,
                              const std::vector<std::array<std::int64_t, 3>>& edges) {
    std::vector<std::vector<std::pair<std::int32_t, std::int32_t>>> rows(num_vertices);
    for (const auto& [u, v, w] : edges) {
        if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= num_vertices ||
            static_cast<std::size_t>(v) >= num_vertices)
            throw ArgumentError("edge endpoint out of range");
        if (u == v) throw ArgumentError("self-loops are not allowed");
        if (w < 1) throw ArgumentError("edge weights must be >= 1");
        rows[u].emplace_back(static_cast<std::int32_t>(v), static_cast<std::int32_t>(w));
        rows[v].emplace_back(static_cast<std::int32_t>(u), static_cast<std::int32_t>(w));
    }
    KnnGraph g;
    g.num_vertices = num_vertices;
    g.offsets.push_back(0);
    for (auto& row : rows) {
        std::sort(row.begin(), row.end());
        for (std::size_t r = 0; r < row.size(); ++r) {
            if (r > 0 && row[r].first == row[r - 1].first) {
                g.weights.back() = std::max(g.weights.back(), row[r].second);
                continue;
            }
            g.neighbors.push_back(row[r].first);
            g.weights.push_back(row[r].second);
        }
        g.offsets.push_back(g.neighbors.size());
    }
    g.total_edges = g.neighbors.size() / 2;
    return g;
}

void write_edge_list(const KnnGraph& graph, std::ostream& out) {
    for (std::size_t u = 0; u < graph.num_vertices; ++u) {
        const auto nb = graph.adjacent(u);
        const auto w = graph.adjacent_weights(u);
        for (std::size_t e = 0; e < nb.size(); ++e)
            if (static_cast<std::size_t>(nb[e]) > u) out << u << ' ' << nb[e] << ' ' << w[e] << '\n';
    }
}

}  // namespace spinlets
