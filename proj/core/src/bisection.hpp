#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spinlets/random.hpp"

namespace spinlets::detail {

/// Non-owning compressed-row graph. Empty vertex weights mean unit weights.
template <class EW>
struct GraphRef {
    std::span<const std::size_t> xadj;
    std::span<const std::int32_t> adj;
    std::span<const EW> ew;
    std::span<const std::int64_t> vw;

    std::size_t size() const { return xadj.empty() ? 0 : xadj.size() - 1; }
    std::int64_t vweight(std::size_t v) const { return vw.empty() ? 1 : vw[v]; }
    std::int64_t total_weight() const;
};

template <class EW>
struct CsrGraph {
    std::vector<std::size_t> xadj{0};
    std::vector<std::int32_t> adj;
    std::vector<EW> ew;
    std::vector<std::int64_t> vw;

    GraphRef<EW> ref() const { return {xadj, adj, ew, vw}; }
};

struct BisectLimits {
    std::int64_t max_part = 0;  // upper bound on the weight of either side
    int coarsen_to = 64;
    int refine_passes = 2;
    int initial_trials = 8;
};

struct BisectOutcome {
    std::vector<std::uint8_t> side;
    std::int64_t cut = 0;
    bool disconnected = false;
};

template <class EW>
BisectOutcome bisect_graph(GraphRef<EW> graph, const BisectLimits& limits, Rng& rng);

template <class EW>
std::int64_t cut_weight(GraphRef<EW> graph, std::span<const std::uint8_t> side);

/// Induced subgraph on the vertices with side[v] == which (unit vertex weights).
/// `local_to_parent` receives the parent index of each new vertex.
template <class EW>
CsrGraph<std::int32_t> induced_subgraph(GraphRef<EW> graph, std::span<const std::uint8_t> side,
                                        std::uint8_t which, std::vector<std::int32_t>& local_to_parent);

}  // namespace spinlets::detail
