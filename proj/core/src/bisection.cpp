#include "bisection.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <utility>

#include "spinlets/error.hpp"

namespace spinlets::detail {

template <class EW>
std::int64_t GraphRef<EW>::total_weight() const {
    if (vw.empty()) return static_cast<std::int64_t>(size());
    return std::accumulate(vw.begin(), vw.end(), std::int64_t{0});
}

namespace {

// Max-heap keyed on (gain, -vertex): largest gain first, then lowest index.
using GainHeap = std::priority_queue<std::pair<std::int64_t, std::int32_t>>;

std::uint64_t draw_below(Rng& rng, std::uint64_t bound) { return rng() % bound; }

template <class EW>
std::vector<std::int32_t> connected_components(GraphRef<EW> g, std::int32_t& count) {
    const std::size_t n = g.size();
    std::vector<std::int32_t> label(n, -1);
    std::vector<std::int32_t> queue;
    queue.reserve(n);
    count = 0;
    for (std::size_t s = 0; s < n; ++s) {
        if (label[s] >= 0) continue;
        queue.clear();
        queue.push_back(static_cast<std::int32_t>(s));
        label[s] = count;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const auto v = static_cast<std::size_t>(queue[head]);
            for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
                const auto u = g.adj[e];
                if (label[static_cast<std::size_t>(u)] < 0) {
                    label[static_cast<std::size_t>(u)] = count;
                    queue.push_back(u);
                }
            }
        }
        ++count;
    }
    return label;
}

template <class EW>
std::vector<std::int64_t> weighted_degrees(GraphRef<EW> g) {
    std::vector<std::int64_t> deg(g.size(), 0);
    for (std::size_t v = 0; v < g.size(); ++v)
        for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) deg[v] += g.ew[e];
    return deg;
}

struct Partition {
    std::vector<std::uint8_t> side;
    std::int64_t weight[2] = {0, 0};
    std::int64_t cut = 0;
};

template <class EW>
Partition make_partition(GraphRef<EW> g, std::vector<std::uint8_t> side) {
    Partition p;
    p.side = std::move(side);
    for (std::size_t v = 0; v < g.size(); ++v) p.weight[p.side[v]] += g.vweight(v);
    p.cut = cut_weight(g, std::span<const std::uint8_t>(p.side));
    return p;
}

template <class EW>
void internal_external(GraphRef<EW> g, const std::vector<std::uint8_t>& side,
                       std::vector<std::int64_t>& id, std::vector<std::int64_t>& ed) {
    const std::size_t n = g.size();
    id.assign(n, 0);
    ed.assign(n, 0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
            if (side[static_cast<std::size_t>(g.adj[e])] == side[v])
                id[v] += g.ew[e];
            else
                ed[v] += g.ew[e];
        }
}

// Moves vertices off an overweight side, best gain first, until both sides fit.
template <class EW>
void enforce_balance(GraphRef<EW> g, Partition& p, std::int64_t max_part) {
    for (std::uint8_t heavy = 0; heavy < 2; ++heavy) {
        if (p.weight[heavy] <= max_part) continue;
        const std::uint8_t light = 1 - heavy;
        std::vector<std::int64_t> id, ed;
        internal_external(g, p.side, id, ed);
        GainHeap heap;
        for (std::size_t v = 0; v < g.size(); ++v)
            if (p.side[v] == heavy) heap.emplace(ed[v] - id[v], -static_cast<std::int32_t>(v));
        while (p.weight[heavy] > max_part && !heap.empty()) {
            const auto [gain, neg] = heap.top();
            heap.pop();
            const auto v = static_cast<std::size_t>(-neg);
            if (p.side[v] != heavy || ed[v] - id[v] != gain) continue;
            if (p.weight[light] + g.vweight(v) > max_part) continue;
            p.side[v] = light;
            p.weight[heavy] -= g.vweight(v);
            p.weight[light] += g.vweight(v);
            p.cut -= gain;
            std::swap(id[v], ed[v]);
            for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
                const auto u = static_cast<std::size_t>(g.adj[e]);
                if (p.side[u] == heavy) {
                    id[u] -= g.ew[e];
                    ed[u] += g.ew[e];
                    heap.emplace(ed[u] - id[u], -static_cast<std::int32_t>(u));
                } else {
                    id[u] += g.ew[e];
                    ed[u] -= g.ew[e];
                }
            }
        }
    }
}

// Boundary Fiduccia-Mattheyses passes with rollback to the best balanced prefix.
// A move may overshoot the bound by one vertex weight, so that pairs of moves act
// as a swap; only balanced states are kept.
template <class EW>
void refine(GraphRef<EW> g, Partition& p, std::int64_t max_part, int passes) {
    const std::size_t n = g.size();
    if (n < 2) return;
    std::int64_t slack = 1;
    if (!g.vw.empty()) slack = *std::max_element(g.vw.begin(), g.vw.end());
    const auto balanced = [&] { return p.weight[0] <= max_part && p.weight[1] <= max_part; };
    if (!balanced()) return;
    const std::size_t stall_limit = std::clamp<std::size_t>(n / 100, 15, 100);

    std::vector<std::int64_t> id, ed;
    std::vector<std::uint8_t> locked(n);
    std::vector<std::int32_t> moves;
    for (int pass = 0; pass < passes; ++pass) {
        internal_external(g, p.side, id, ed);
        std::fill(locked.begin(), locked.end(), 0);
        moves.clear();
        GainHeap heap[2];
        for (std::size_t v = 0; v < n; ++v)
            if (ed[v] > 0) heap[p.side[v]].emplace(ed[v] - id[v], -static_cast<std::int32_t>(v));

        std::int64_t best_cut = p.cut;
        std::int64_t best_imbalance = std::abs(p.weight[0] - p.weight[1]);
        std::size_t best_len = 0;
        std::size_t stall = 0;

        const auto clean_top = [&](int s) {
            while (!heap[s].empty()) {
                const auto [gain, neg] = heap[s].top();
                const auto v = static_cast<std::size_t>(-neg);
                if (!locked[v] && p.side[v] == s && ed[v] > 0 && ed[v] - id[v] == gain) return true;
                heap[s].pop();
            }
            return false;
        };
        const auto can_move = [&](int from) {
            const auto v = static_cast<std::size_t>(-heap[from].top().second);
            return p.weight[1 - from] + g.vweight(v) <= max_part + slack;
        };

        while (true) {
            const bool has[2] = {clean_top(0), clean_top(1)};
            int from = -1;
            if (p.weight[0] > max_part) {
                if (has[0] && can_move(0)) from = 0;
            } else if (p.weight[1] > max_part) {
                if (has[1] && can_move(1)) from = 1;
            } else {
                int order[2] = {0, 1};
                if (has[0] && has[1]) {
                    const auto g0 = heap[0].top().first, g1 = heap[1].top().first;
                    if (g1 > g0 || (g1 == g0 && p.weight[1] > p.weight[0])) std::swap(order[0], order[1]);
                } else if (has[1]) {
                    std::swap(order[0], order[1]);
                }
                for (int s : order)
                    if (has[s] && can_move(s)) {
                        from = s;
                        break;
                    }
            }
            if (from < 0) break;

            const auto [gain, neg] = heap[from].top();
            heap[from].pop();
            const auto v = static_cast<std::size_t>(-neg);
            const int to = 1 - from;
            p.side[v] = static_cast<std::uint8_t>(to);
            p.weight[from] -= g.vweight(v);
            p.weight[to] += g.vweight(v);
            p.cut -= gain;
            locked[v] = 1;
            moves.push_back(static_cast<std::int32_t>(v));
            std::swap(id[v], ed[v]);
            for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
                const auto u = static_cast<std::size_t>(g.adj[e]);
                if (p.side[u] == to) {
                    id[u] += g.ew[e];
                    ed[u] -= g.ew[e];
                } else {
                    id[u] -= g.ew[e];
                    ed[u] += g.ew[e];
                }
                if (!locked[u] && ed[u] > 0) heap[p.side[u]].emplace(ed[u] - id[u], -static_cast<std::int32_t>(u));
            }

            const std::int64_t imbalance = std::abs(p.weight[0] - p.weight[1]);
            if (balanced() && (p.cut < best_cut || (p.cut == best_cut && imbalance < best_imbalance))) {
                best_cut = p.cut;
                best_imbalance = imbalance;
                best_len = moves.size();
                stall = 0;
            } else if (++stall > stall_limit) {
                break;
            }
        }

        for (std::size_t k = moves.size(); k > best_len; --k) {
            const auto v = static_cast<std::size_t>(moves[k - 1]);
            const int from = p.side[v];
            p.side[v] = static_cast<std::uint8_t>(1 - from);
            p.weight[from] -= g.vweight(v);
            p.weight[1 - from] += g.vweight(v);
        }
        p.cut = best_cut;
        if (best_len == 0) break;
    }
}

template <class EW>
std::int32_t farthest_vertex(GraphRef<EW> g, std::int32_t start) {
    std::vector<std::uint8_t> seen(g.size(), 0);
    std::vector<std::int32_t> queue{start};
    seen[static_cast<std::size_t>(start)] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const auto v = static_cast<std::size_t>(queue[head]);
        for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
            const auto u = static_cast<std::size_t>(g.adj[e]);
            if (!seen[u]) {
                seen[u] = 1;
                queue.push_back(g.adj[e]);
            }
        }
    }
    return queue.back();
}

// Greedy graph growing: absorb the frontier vertex that most reduces the cut
// until side 0 holds half the weight.
template <class EW>
std::vector<std::uint8_t> grow_region(GraphRef<EW> g, const std::vector<std::int64_t>& degree,
                                      std::int32_t start, std::int64_t max_part) {
    const std::size_t n = g.size();
    const std::int64_t total = g.total_weight();
    std::vector<std::uint8_t> side(n, 1);
    std::vector<std::int64_t> conn(n, 0);
    std::int64_t grown = 0;
    GainHeap heap;
    std::size_t next_unassigned = 0;

    const auto absorb = [&](std::size_t v) {
        side[v] = 0;
        grown += g.vweight(v);
        for (std::size_t e = g.xadj[v]; e < g.xadj[v + 1]; ++e) {
            const auto u = static_cast<std::size_t>(g.adj[e]);
            if (side[u] == 0) continue;
            conn[u] += g.ew[e];
            heap.emplace(2 * conn[u] - degree[u], -static_cast<std::int32_t>(u));
        }
    };
    absorb(static_cast<std::size_t>(start));
    while (2 * grown < total) {
        std::int64_t pick = -1;
        while (!heap.empty()) {
            const auto [gain, neg] = heap.top();
            heap.pop();
            const auto v = static_cast<std::size_t>(-neg);
            if (side[v] == 0 || 2 * conn[v] - degree[v] != gain) continue;
            if (grown + g.vweight(v) > max_part) continue;
            pick = static_cast<std::int64_t>(v);
            break;
        }
        if (pick < 0) {
            while (next_unassigned < n &&
                   (side[next_unassigned] == 0 || grown + g.vweight(next_unassigned) > max_part))
                ++next_unassigned;
            if (next_unassigned == n) break;
            pick = static_cast<std::int64_t>(next_unassigned);
        }
        absorb(static_cast<std::size_t>(pick));
    }
    return side;
}

template <class EW>
Partition initial_partition(GraphRef<EW> g, const BisectLimits& limits, Rng& rng) {
    const std::size_t n = g.size();
    const auto degree = weighted_degrees(g);
    std::vector<std::int32_t> starts;
    const auto first = static_cast<std::int32_t>(draw_below(rng, n));
    starts.push_back(farthest_vertex(g, farthest_vertex(g, first)));
    for (int t = 1; t < limits.initial_trials; ++t)
        starts.push_back(static_cast<std::int32_t>(draw_below(rng, n)));

    Partition best;
    bool have_best = false;
    for (auto s : starts) {
        Partition p = make_partition(g, grow_region(g, degree, s, limits.max_part));
        enforce_balance(g, p, limits.max_part);
        refine(g, p, limits.max_part, limits.refine_passes);
        const bool ok = p.weight[0] <= limits.max_part && p.weight[1] <= limits.max_part;
        const bool best_ok =
            have_best && best.weight[0] <= limits.max_part && best.weight[1] <= limits.max_part;
        if (!have_best || (ok && !best_ok) || (ok == best_ok && p.cut < best.cut)) {
            best = std::move(p);
            have_best = true;
        }
    }
    return best;
}

// One round of heavy-edge matching. Returns false when the graph barely shrinks.
template <class EW>
bool coarsen_once(GraphRef<EW> g, std::int64_t max_vertex_weight, Rng& rng,
                  CsrGraph<std::int64_t>& out, std::vector<std::int32_t>& cmap) {
    const std::size_t n = g.size();
    std::vector<std::int32_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[draw_below(rng, i)]);

    std::vector<std::int32_t> match(n, -1);
    for (auto uu : order) {
        const auto u = static_cast<std::size_t>(uu);
        if (match[u] >= 0) continue;
        std::int32_t best = -1;
        std::int64_t best_w = -1;
        for (std::size_t e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
            const auto v = g.adj[e];
            const auto vs = static_cast<std::size_t>(v);
            if (vs == u || match[vs] >= 0) continue;
            if (g.vweight(u) + g.vweight(vs) > max_vertex_weight) continue;
            const std::int64_t w = g.ew[e];
            if (w > best_w || (w == best_w && v < best)) {
                best = v;
                best_w = w;
            }
        }
        if (best < 0) {
            match[u] = uu;
        } else {
            match[u] = best;
            match[static_cast<std::size_t>(best)] = uu;
        }
    }

    cmap.assign(n, -1);
    std::vector<std::int32_t> representative;
    for (std::size_t u = 0; u < n; ++u) {
        if (cmap[u] >= 0) continue;
        const auto c = static_cast<std::int32_t>(representative.size());
        cmap[u] = c;
        cmap[static_cast<std::size_t>(match[u])] = c;
        representative.push_back(static_cast<std::int32_t>(u));
    }
    const std::size_t nc = representative.size();
    if (static_cast<double>(nc) > 0.95 * static_cast<double>(n)) return false;

    out = CsrGraph<std::int64_t>{};
    out.xadj.reserve(nc + 1);
    out.vw.resize(nc);
    std::vector<std::int64_t> slot(nc, -1);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto u = static_cast<std::size_t>(representative[c]);
        const auto v = static_cast<std::size_t>(match[u]);
        const auto row_start = static_cast<std::int64_t>(out.adj.size());
        for (std::size_t x : {u, v}) {
            for (std::size_t e = g.xadj[x]; e < g.xadj[x + 1]; ++e) {
                const auto cv = static_cast<std::size_t>(cmap[static_cast<std::size_t>(g.adj[e])]);
                if (cv == c) continue;
                if (slot[cv] >= row_start) {
                    out.ew[static_cast<std::size_t>(slot[cv])] += g.ew[e];
                } else {
                    slot[cv] = static_cast<std::int64_t>(out.adj.size());
                    out.adj.push_back(static_cast<std::int32_t>(cv));
                    out.ew.push_back(g.ew[e]);
                }
            }
            if (v == u) break;
        }
        out.xadj.push_back(out.adj.size());
        out.vw[c] = g.vweight(u) + (v != u ? g.vweight(v) : 0);
    }
    return true;
}

template <class EW>
void refine_level(GraphRef<EW> g, Partition& p, const BisectLimits& limits) {
    enforce_balance(g, p, limits.max_part);
    refine(g, p, limits.max_part, limits.refine_passes);
}

}  // namespace

template <class EW>
std::int64_t cut_weight(GraphRef<EW> graph, std::span<const std::uint8_t> side) {
    std::int64_t cut = 0;
    for (std::size_t v = 0; v < graph.size(); ++v)
        for (std::size_t e = graph.xadj[v]; e < graph.xadj[v + 1]; ++e)
            if (side[static_cast<std::size_t>(graph.adj[e])] != side[v]) cut += graph.ew[e];
    return cut / 2;
}

template <class EW>
BisectOutcome bisect_graph(GraphRef<EW> g, const BisectLimits& limits, Rng& rng) {
    const std::size_t n = g.size();
    BisectOutcome outcome;
    if (n == 0) return outcome;
    if (n == 1) {
        outcome.side.assign(1, 0);
        return outcome;
    }
    const std::int64_t total = g.total_weight();

    std::int32_t num_components = 0;
    const auto component = connected_components(g, num_components);
    if (num_components > 1) {
        outcome.disconnected = true;
        std::vector<std::int64_t> comp_weight(static_cast<std::size_t>(num_components), 0);
        for (std::size_t v = 0; v < n; ++v) comp_weight[static_cast<std::size_t>(component[v])] += g.vweight(v);
        std::vector<std::int32_t> by_size(static_cast<std::size_t>(num_components));
        std::iota(by_size.begin(), by_size.end(), 0);
        std::stable_sort(by_size.begin(), by_size.end(), [&](std::int32_t a, std::int32_t b) {
            return comp_weight[static_cast<std::size_t>(a)] > comp_weight[static_cast<std::size_t>(b)];
        });
        std::vector<std::uint8_t> comp_side(static_cast<std::size_t>(num_components));
        std::int64_t w[2] = {0, 0};
        for (auto c : by_size) {
            const std::uint8_t s = w[1] < w[0] ? 1 : 0;
            comp_side[static_cast<std::size_t>(c)] = s;
            w[s] += comp_weight[static_cast<std::size_t>(c)];
        }
        if (w[0] <= limits.max_part && w[1] <= limits.max_part) {
            outcome.side.resize(n);
            for (std::size_t v = 0; v < n; ++v) outcome.side[v] = comp_side[static_cast<std::size_t>(component[v])];
            outcome.cut = 0;
            return outcome;
        }
    }

    std::vector<CsrGraph<std::int64_t>> levels;
    std::vector<std::vector<std::int32_t>> maps;
    const std::int64_t max_vertex_weight =
        std::max<std::int64_t>(1, (3 * total) / (2 * std::max(1, limits.coarsen_to)));
    while (true) {
        const std::size_t current = levels.empty() ? n : levels.back().ref().size();
        if (current <= static_cast<std::size_t>(limits.coarsen_to)) break;
        CsrGraph<std::int64_t> next;
        std::vector<std::int32_t> cmap;
        const bool shrunk = levels.empty()
                                ? coarsen_once(g, max_vertex_weight, rng, next, cmap)
                                : coarsen_once(levels.back().ref(), max_vertex_weight, rng, next, cmap);
        if (!shrunk) break;
        levels.push_back(std::move(next));
        maps.push_back(std::move(cmap));
    }

    Partition p = levels.empty() ? initial_partition(g, limits, rng)
                                 : initial_partition(levels.back().ref(), limits, rng);
    for (std::size_t lvl = levels.size(); lvl-- > 0;) {
        const auto& cmap = maps[lvl];
        std::vector<std::uint8_t> fine(cmap.size());
        for (std::size_t u = 0; u < cmap.size(); ++u) fine[u] = p.side[static_cast<std::size_t>(cmap[u])];
        levels[lvl] = CsrGraph<std::int64_t>{};
        maps[lvl] = {};
        if (lvl == 0) {
            p = make_partition(g, std::move(fine));
            refine_level(g, p, limits);
        } else {
            p = make_partition(levels[lvl - 1].ref(), std::move(fine));
            refine_level(levels[lvl - 1].ref(), p, limits);
        }
    }
    enforce_balance(g, p, limits.max_part);
    if (p.weight[0] > limits.max_part || p.weight[1] > limits.max_part)
        throw InternalError("bisection could not satisfy the balance constraint");
    outcome.side = std::move(p.side);
    outcome.cut = p.cut;
    return outcome;
}

template <class EW>
CsrGraph<std::int32_t> induced_subgraph(GraphRef<EW> graph, std::span<const std::uint8_t> side,
                                        std::uint8_t which, std::vector<std::int32_t>& local_to_parent) {
    const std::size_t n = graph.size();
    std::vector<std::int32_t> local(n, -1);
    local_to_parent.clear();
    for (std::size_t v = 0; v < n; ++v)
        if (side[v] == which) {
            local[v] = static_cast<std::int32_t>(local_to_parent.size());
            local_to_parent.push_back(static_cast<std::int32_t>(v));
        }
    CsrGraph<std::int32_t> sub;
    sub.xadj.reserve(local_to_parent.size() + 1);
    std::size_t edges = 0;
    for (auto v : local_to_parent)
        edges += graph.xadj[static_cast<std::size_t>(v) + 1] - graph.xadj[static_cast<std::size_t>(v)];
    sub.adj.reserve(edges);
    sub.ew.reserve(edges);
    for (auto vv : local_to_parent) {
        const auto v = static_cast<std::size_t>(vv);
        for (std::size_t e = graph.xadj[v]; e < graph.xadj[v + 1]; ++e) {
            const auto u = static_cast<std::size_t>(graph.adj[e]);
            if (local[u] < 0) continue;
            sub.adj.push_back(local[u]);
            sub.ew.push_back(static_cast<std::int32_t>(graph.ew[e]));
        }
        sub.xadj.push_back(sub.adj.size());
    }
    sub.adj.shrink_to_fit();
    sub.ew.shrink_to_fit();
    return sub;
}

template struct GraphRef<std::int32_t>;
template struct GraphRef<std::int64_t>;
template BisectOutcome bisect_graph(GraphRef<std::int32_t>, const BisectLimits&, Rng&);
template BisectOutcome bisect_graph(GraphRef<std::int64_t>, const BisectLimits&, Rng&);
template std::int64_t cut_weight(GraphRef<std::int32_t>, std::span<const std::uint8_t>);
template std::int64_t cut_weight(GraphRef<std::int64_t>, std::span<const std::uint8_t>);
template CsrGraph<std::int32_t> induced_subgraph(GraphRef<std::int32_t>, std::span<const std::uint8_t>,
                                                 std::uint8_t, std::vector<std::int32_t>&);

}  // namespace spinlets::detail
