#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "spinlets/knn_graph.hpp"
#include "spinlets/partition_tree.hpp"
#include "spinlets/random.hpp"

namespace {

std::vector<spinlets::Point4> uniform_points(std::size_t count, std::uint64_t seed) {
    auto rng = spinlets::make_rng(seed, "bench-points");
    std::uniform_real_distribution<double> unit(0.0, 100.0);
    std::vector<spinlets::Point4> points(count);
    for (auto& p : points)
        for (auto& c : p) c = unit(rng);
    return points;
}

void BM_KnnSearch(benchmark::State& state) {
    const auto points = uniform_points(static_cast<std::size_t>(state.range(0)), 1);
    const auto k = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(spinlets::knn_search(points, k));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KnnSearch)->Args({2000, 10})->Args({10000, 50})->Unit(benchmark::kMillisecond);

void BM_RecursiveBisect(benchmark::State& state) {
    const auto points = uniform_points(static_cast<std::size_t>(state.range(0)), 2);
    const auto graph = spinlets::build_similarity_graph(spinlets::knn_search(points, 20));
    const int height = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(spinlets::recursive_bisect(graph, height, 7));
    state.counters["edges"] = static_cast<double>(graph.total_edges);
}
BENCHMARK(BM_RecursiveBisect)->Args({2000, 4})->Args({10000, 6})->Unit(benchmark::kMillisecond);

}  // namespace
