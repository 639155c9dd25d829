#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "acceptance.hpp"
#include "spinlets/em.hpp"
#include "spinlets/error.hpp"
#include "spinlets/ingest.hpp"
#include "spinlets/knn_graph.hpp"
#include "spinlets/model.hpp"
#include "spinlets/partition_tree.hpp"
#include "spinlets/priors.hpp"
#include "spinlets/reduction.hpp"
#include "spinlets/simulate.hpp"

namespace spinlets::cli {

namespace fs = std::filesystem;

namespace {

fs::path output_path(const GlobalOptions& g, const fs::path& p) {
    return p.is_absolute() ? p : g.out_dir / p;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_output(const fs::path& path, Manifest& manifest) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    manifest.outputs.push_back(path);
    return out;
}

std::string number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void warn_all(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

PartitionTree load_tree(const fs::path& path, Manifest& manifest) {
    manifest.inputs.push_back(path);
    return tree_from_json(read_text(path));
}

SpinDataset load_data(const fs::path& path, Manifest& manifest) {
    manifest.inputs.push_back(path);
    return parse_spin_csv(path);
}

void check_tree_matches(const PartitionTree& tree, const SpinDataset& data) {
    if (tree.leaf_assignment.size() != data.num_pos())
        throw ArgumentError("tree assigns " + std::to_string(tree.leaf_assignment.size()) + " POs but the dataset has " +
                            std::to_string(data.num_pos()));
}

PriorSpec select_prior(const std::string& name, const std::string& params) {
    return params.empty() ? named_prior(name) : parse_prior_params(params);
}

int height_for_leaves(Eigen::Index leaves) {
    int h = 0;
    while ((Eigen::Index{1} << h) < leaves) ++h;
    if ((Eigen::Index{1} << h) != leaves || h < 1)
        throw ArgumentError("model has " + std::to_string(leaves) + " leaf effects, not a power of two");
    return h;
}

std::string file_safe(const std::string& id) {
    std::string out;
    for (char c : id) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_') ? c : '_';
    return out.empty() ? "replicate" : out;
}

}  // namespace

int run_ingest(const GlobalOptions& g, const IngestOptions& o, Manifest& manifest) {
    if (o.csv.empty() == o.matches.empty())
        throw ArgumentError("ingest needs exactly one of --csv or --matches");
    SpinDataset data;
    if (!o.csv.empty()) {
        data = load_data(o.csv, manifest);
    } else {
        if (o.events.empty()) throw ArgumentError("--matches needs --events");
        const Task task = parse_task(o.task);
        manifest.inputs.push_back(o.matches);
        manifest.inputs.push_back(o.events);
        std::vector<std::string> warnings;
        const auto matches = load_match_corpus(o.matches, o.events, &warnings);
        warn_all(warnings);
        data = build_task_replicates(matches, task, o.phase_cut);
    }
    data.validate();
    const fs::path out = output_path(g, o.out);
    auto stream = open_output(out, manifest);
    write_spin_csv(data, stream);
    std::cout << "ingest: " << data.num_pos() << " POs in " << data.num_replicates() << " replicates -> "
              << out.generic_string() << "\n";
    return 0;
}

int run_partition(const GlobalOptions& g, const PartitionOptions& o, Manifest& manifest) {
    const SpinDataset data = load_data(o.data, manifest);
    const auto points = data.feature_points();
    const std::size_t k = o.knn ? o.knn : default_k(points.size());
    if (k >= points.size())
        throw ArgumentError("--knn must be below the number of POs (" + std::to_string(points.size()) + ")");
    KnnGraph graph = build_similarity_graph(knn_search(points, k), parse_bandwidth(o.bandwidth));
    warn_all(graph.warnings);
    if (!o.edges.empty()) {
        auto stream = open_output(output_path(g, o.edges), manifest);
        write_edge_list(graph, stream);
    }
    BisectionOptions bisect;
    bisect.balance_tol = o.balance;
    const PartitionTree tree = recursive_bisect(graph, o.height, g.seed, bisect);
    warn_all(tree.warnings);

    const fs::path out = output_path(g, o.out);
    open_output(out, manifest) << tree_to_json(tree);
    if (!o.counts.empty()) {
        const CountMatrices counts = aggregate_counts(tree, data);
        auto stream = open_output(output_path(g, o.counts), manifest);
        stream << "replicate_id";
        for (Eigen::Index j = 0; j < counts.X.cols(); ++j) stream << ",leaf_" << j + 1;
        stream << "\n";
        for (Eigen::Index i = 0; i < counts.X.rows(); ++i) {
            stream << data.replicates[static_cast<std::size_t>(i)].id;
            for (Eigen::Index j = 0; j < counts.X.cols(); ++j) stream << ',' << counts.X(i, j);
            stream << "\n";
        }
    }
    std::cout << "partition: " << points.size() << " POs, K=" << k << ", " << graph.total_edges
              << " edges, sigma=" << number(graph.sigma) << ", " << tree.num_leaves()
              << " leaves, leaf cut=" << leaf_cut(graph, tree) << " -> " << out.generic_string() << "\n";
    return 0;
}

int run_fit(const GlobalOptions& g, const FitOptions& o, Manifest& manifest) {
    const PriorSpec prior = select_prior(o.prior, o.prior_params);
    const SpinDataset data = load_data(o.data, manifest);
    const PartitionTree tree = load_tree(o.tree, manifest);
    check_tree_matches(tree, data);
    const CountMatrices counts = aggregate_counts(tree, data);
    ModelInputs inputs = ModelInputs::from_counts(counts.X, data, tree.shape);
    if (!prior.uses_tree()) inputs.tree.reset();

    EmConfig config;
    config.max_em_iters = o.max_em;
    config.max_inner_iters = o.max_inner;
    config.inner_iters_per_em = o.inner_per_em;
    config.conv_tol = o.tol;
    config.init_scale = o.init_scale;
    config.seed = g.seed;
    const FitResult result = fit(inputs, prior, config);
    warn_all(result.warnings);

    const fs::path out = output_path(g, o.out);
    open_output(out, manifest) << fit_result_to_json(result) << "\n";
    if (!o.trace.empty()) {
        auto stream = open_output(output_path(g, o.trace), manifest);
        stream << "iteration,objective,delta_beta,inner_iterations\n";
        stream << "0," << number(result.initial_objective) << ",,0\n";
        for (std::size_t k = 0; k < result.trace.size(); ++k) {
            const auto& t = result.trace[k];
            stream << k + 1 << ',' << number(t.objective) << ',' << number(t.delta_beta) << ',' << t.inner_iterations
                   << "\n";
        }
    }
    std::cout << "fit: prior " << prior.name << ", " << (result.converged ? "converged" : "stopped") << " after "
              << result.iterations << " EM iterations (" << result.inner_iterations
              << " quasi-Newton steps), objective " << number(result.trace.empty() ? result.initial_objective
                                                                                    : result.trace.back().objective)
              << " -> " << out.generic_string() << "\n";
    return 0;
}

int run_reduce(const GlobalOptions& g, const ReduceOptions& o, Manifest& manifest) {
    manifest.inputs.push_back(o.model);
    const FitResult model = fit_result_from_json(read_text(o.model));
    const TreeShape shape(height_for_leaves(model.beta_hat.size()));
    const ReducedRepresentation reduction = extract_reduction(model.beta_hat, shape, o.threshold);
    const fs::path out = output_path(g, o.out);
    open_output(out, manifest) << reduction_to_json(reduction) << "\n";

    if (o.data.empty() != o.tree.empty()) throw ArgumentError("--data and --tree must be given together");
    if (!o.data.empty()) {
        const SpinDataset data = load_data(o.data, manifest);
        const PartitionTree tree = load_tree(o.tree, manifest);
        check_tree_matches(tree, data);
        if (tree.num_leaves() != static_cast<std::size_t>(model.beta_hat.size()))
            throw ArgumentError("tree and model disagree on the number of leaves");
        const CountMatrices counts = aggregate_counts(tree, data);
        const Eigen::VectorXd scores = score_replicates(counts.X.cast<double>(), model.beta_hat);
        auto stream = open_output(output_path(g, o.scores), manifest);
        stream << "replicate_id,y,score\n";
        for (std::size_t i = 0; i < data.num_replicates(); ++i)
            stream << data.replicates[i].id << ',' << number(data.replicates[i].response) << ','
                   << number(scores[static_cast<Eigen::Index>(i)]) << "\n";
    }
    std::cout << "reduce: " << reduction.groups.size() << " groups, " << reduction.num_active()
              << " active after deletion -> " << out.generic_string() << "\n";
    return 0;
}

int run_simulate(const GlobalOptions& g, const SimulateOptions& o, Manifest& manifest) {
    std::vector<PriorSpec> priors;
    if (!o.prior_params.empty()) {
        priors.push_back(parse_prior_params(o.prior_params));
    } else {
        for (const auto& name : o.priors) priors.push_back(named_prior(name));
    }
    std::vector<Scenario> scenarios;
    for (const auto& c : o.configs) scenarios.push_back(parse_scenario(c));

    if (o.multi_start > 0) {
        if (scenarios.size() != 1 || o.sizes.size() != 1 || priors.size() != 1)
            throw ArgumentError("--multi-start needs a single --config, --n and --prior");
        SimConfig cfg;
        cfg.scenario = scenarios[0];
        cfg.n = o.sizes[0];
        cfg.h = o.height;
        cfg.seed = g.seed;
        SimData data = generate(cfg);
        if (!priors[0].uses_tree()) data.inputs.tree.reset();
        EmConfig em;
        em.max_em_iters = o.max_em;
        const MultiStartResult ms = multi_start(data.inputs, priors[0], em, o.multi_start, g.seed);
        auto stream = open_output(output_path(g, o.distances), manifest);
        stream << "start_a,start_b,beta_distance,gamma_distance\n";
        std::size_t at = 0;
        for (int a = 0; a < o.multi_start; ++a)
            for (int b = a + 1; b < o.multi_start; ++b, ++at)
                stream << a + 1 << ',' << b + 1 << ',' << number(ms.beta_distances[at]) << ','
                       << number(ms.gamma_distances[at]) << "\n";
        std::cout << "simulate: " << o.multi_start << " starts, median beta distance "
                  << number(median(ms.beta_distances)) << ", median gamma distance "
                  << number(median(ms.gamma_distances)) << "\n";
        return 0;
    }

    StudyOptions study;
    study.scenarios = scenarios;
    study.sizes = o.sizes;
    study.priors = priors;
    study.replications = o.reps;
    study.seed = g.seed;
    study.h = o.height;
    study.em.max_em_iters = o.max_em;
    std::mutex lock;
    const auto rows = run_study(study, [&](const StudyRow& row) {
        if (row.metrics) return;
        std::lock_guard<std::mutex> guard(lock);
        std::cerr << "warning: fit failed for config " << to_string(row.scenario) << ", n=" << row.n << ", prior "
                  << row.prior << ", rep " << row.rep << ": " << row.error << "\n";
    });
    const fs::path out = output_path(g, o.out);
    auto stream = open_output(out, manifest);
    write_study_csv(rows, stream);
    std::size_t failed = 0;
    for (const auto& r : rows) failed += r.metrics ? 0 : 1;
    std::cout << "simulate: " << rows.size() << " rows (" << failed << " failed fits) -> " << out.generic_string()
              << "\n";
    return 0;
}

int run_export_svg(const GlobalOptions& g, const ExportSvgOptions& o, Manifest& manifest) {
    if (o.view != "aggregate" && o.view != "replicates" && o.view != "all")
        throw ArgumentError("--view must be aggregate, replicates or all");
    manifest.inputs.push_back(o.reduction);
    const ReducedRepresentation reduction = reduction_from_json(read_text(o.reduction));
    const SpinDataset data = load_data(o.data, manifest);
    const PartitionTree tree = load_tree(o.tree, manifest);
    check_tree_matches(tree, data);
    if (tree.height() != reduction.height) throw ArgumentError("tree and reduction heights differ");

    std::size_t written = 0;
    const auto emit = [&](const std::vector<GroupGeometry>& groups, const std::string& suffix,
                          const std::string& title) {
        open_output(output_path(g, o.prefix + "_" + suffix + ".svg"), manifest) << render_svg(groups, title);
        auto csv = open_output(output_path(g, o.prefix + "_" + suffix + "_hulls.csv"), manifest);
        write_hull_csv(groups, csv);
        ++written;
    };
    if (o.view != "replicates") emit(group_geometry(reduction, data, tree), "aggregate", "all replicates");
    if (o.view != "aggregate")
        for (std::size_t r = 0; r < data.num_replicates(); ++r)
            emit(group_geometry(reduction, data, tree, r), file_safe(data.replicates[r].id),
                 "replicate " + data.replicates[r].id);
    std::cout << "export-svg: " << written << " views written\n";
    return 0;
}

int run_bench(const GlobalOptions& g, const BenchOptions& o, Manifest& manifest) {
    acceptance::Options options;
    options.full = o.full;
    options.seed = g.seed;
    options.scale_points = o.scale_points;
    options.only = std::set<int>(o.only.begin(), o.only.end());
    if (!o.golden_design.empty()) {
        options.golden_design = o.golden_design;
        manifest.inputs.push_back(o.golden_design);
    }
    options.on_result = [](const acceptance::CriterionResult& r) {
        std::cout << acceptance::to_string(r.status) << " " << r.id << " " << r.name;
        if (!r.measured.empty()) std::cout << ": " << r.measured;
        std::cout << std::endl;
    };
    options.on_progress = [](const std::string& line) { std::cerr << "  " << line << std::endl; };
    const acceptance::BenchReport report = acceptance::run_acceptance(options);
    open_output(output_path(g, o.json), manifest) << acceptance::report_to_json(report);
    const std::string table = acceptance::render_table(report);
    open_output(output_path(g, o.text), manifest) << table;
    std::cout << "\n" << table;
    return report.failed() == 0 ? 0 : 1;
}

}  // namespace spinlets::cli
