#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "manifest.hpp"

namespace spinlets::cli {

struct GlobalOptions {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::filesystem::path out_dir = ".";
};

struct IngestOptions {
    std::filesystem::path csv;
    std::filesystem::path matches;
    std::filesystem::path events;
    std::string task = "goal_difference";
    int phase_cut = 70;
    std::filesystem::path out = "dataset.csv";
};

struct PartitionOptions {
    std::filesystem::path data;
    int height = 9;
    std::size_t knn = 0;  // 0 selects min(1500, Q - 1)
    std::string bandwidth = "median";
    double balance = 1.03;
    std::filesystem::path out = "tree.json";
    std::filesystem::path edges;
    std::filesystem::path counts;
};

struct FitOptions {
    std::filesystem::path data;
    std::filesystem::path tree;
    std::string prior = "fgdp2";
    std::string prior_params;
    int max_em = 50;
    int max_inner = 1000;
    int inner_per_em = 50;
    double tol = 1e-6;
    double init_scale = 0.1;
    std::filesystem::path out = "model.json";
    std::filesystem::path trace = "trace.csv";
};

struct ReduceOptions {
    std::filesystem::path model;
    double threshold = 0.005;
    std::filesystem::path data;
    std::filesystem::path tree;
    std::filesystem::path out = "reduction.json";
    std::filesystem::path scores = "scores.csv";
};

struct SimulateOptions {
    std::vector<std::string> configs{"a"};
    std::vector<int> sizes{200};
    std::vector<std::string> priors{"fgdp2"};
    std::string prior_params;
    int reps = 50;
    int height = 5;
    int max_em = 50;
    int multi_start = 0;
    std::filesystem::path out = "results.csv";
    std::filesystem::path distances = "distances.csv";
};

struct ExportSvgOptions {
    std::filesystem::path reduction;
    std::filesystem::path data;
    std::filesystem::path tree;
    std::string view = "aggregate";
    std::string prefix = "spin";
};

struct BenchOptions {
    bool full = false;
    std::vector<int> only;
    std::filesystem::path golden_design;
    std::size_t scale_points = 50000;
    std::filesystem::path json = "bench_report.json";
    std::filesystem::path text = "bench_report.txt";
};

/// Each command records what it read and wrote into the manifest. Returns the exit code.
int run_ingest(const GlobalOptions& g, const IngestOptions& o, Manifest& manifest);
int run_partition(const GlobalOptions& g, const PartitionOptions& o, Manifest& manifest);
int run_fit(const GlobalOptions& g, const FitOptions& o, Manifest& manifest);
int run_reduce(const GlobalOptions& g, const ReduceOptions& o, Manifest& manifest);
int run_simulate(const GlobalOptions& g, const SimulateOptions& o, Manifest& manifest);
int run_export_svg(const GlobalOptions& g, const ExportSvgOptions& o, Manifest& manifest);
int run_bench(const GlobalOptions& g, const BenchOptions& o, Manifest& manifest);

}  // namespace spinlets::cli
