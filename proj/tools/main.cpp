#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "spinlets/error.hpp"
#include "spinlets/parallel.hpp"

namespace {

using namespace spinlets::cli;

std::string option_value(const CLI::Option* opt) {
    if (opt->count() == 0) return opt->get_default_str();
    std::string joined;
    for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
    if (joined.empty() && opt->get_expected_max() == 0) return "true";
    return joined;
}

void collect_flags(const CLI::App* app, const std::string& scope, std::map<std::string, std::string>& flags) {
    for (const CLI::Option* opt : app->get_options()) {
        const std::string name = opt->get_single_name();
        if (name.empty() || name == "help" || name == "config") continue;
        flags[scope + name] = option_value(opt);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale reduction of spatial interaction networks", "spinlets"};
    app.set_version_flag("--version", SPINLETS_VERSION);
    app.option_defaults()->always_capture_default();
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--seed", global.seed, "Seed for every random stream");
    app.add_option("--threads", global.threads, "Worker threads (0 = all cores)");
    app.add_option("--out-dir", global.out_dir, "Directory for outputs and manifest.json");

    IngestOptions ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Build the replicate dataset (canonical CSV)");
    c_ingest->add_option("--csv", ingest.csv, "Canonical CSV input")->check(CLI::ExistingFile);
    c_ingest->add_option("--matches", ingest.matches, "Match list JSON")->check(CLI::ExistingFile);
    c_ingest->add_option("--events", ingest.events, "Directory of <match_id>.json event files")
        ->check(CLI::ExistingDirectory);
    c_ingest->add_option("--task", ingest.task, "goal_difference or game_phase");
    c_ingest->add_option("--phase-cut", ingest.phase_cut, "Minute splitting the two game phases");
    c_ingest->add_option("--out", ingest.out, "Output CSV");

    PartitionOptions part;
    auto* c_part = app.add_subcommand("partition", "k-NN graph and recursive bisection into 2^h leaves");
    c_part->add_option("--data", part.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    c_part->add_option("--height,-H", part.height, "Tree height h");
    c_part->add_option("--knn", part.knn, "Neighbours per PO (0 = min(1500, Q-1))");
    c_part->add_option("--bandwidth", part.bandwidth, "Kernel bandwidth: median or a positive number");
    c_part->add_option("--balance", part.balance, "Balance tolerance of each split");
    c_part->add_option("--out", part.out, "Tree JSON");
    c_part->add_option("--edges", part.edges, "Optional edge list output");
    c_part->add_option("--counts", part.counts, "Optional leaf count matrix output");

    FitOptions fitopt;
    auto* c_fit = app.add_subcommand("fit", "Variational EM fit of the count model");
    c_fit->add_option("--data", fitopt.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    c_fit->add_option("--tree", fitopt.tree, "Tree JSON")->required()->check(CLI::ExistingFile);
    auto* prior_opt = c_fit->add_option("--prior", fitopt.prior, "Named prior");
    c_fit->add_option("--prior-params", fitopt.prior_params, "kind,a1,e1,a2,e2[,theta]")->excludes(prior_opt);
    c_fit->add_option("--max-em", fitopt.max_em, "EM iteration limit");
    c_fit->add_option("--max-inner", fitopt.max_inner, "Total quasi-Newton iteration limit");
    c_fit->add_option("--inner-per-em", fitopt.inner_per_em, "Quasi-Newton iterations per EM iteration");
    c_fit->add_option("--tol", fitopt.tol, "Convergence tolerance on the coefficient change");
    c_fit->add_option("--init-scale", fitopt.init_scale, "Standard deviation of the random initialization");
    c_fit->add_option("--out", fitopt.out, "Model JSON");
    c_fit->add_option("--trace", fitopt.trace, "Objective trace CSV");

    ReduceOptions red;
    auto* c_reduce = app.add_subcommand("reduce", "Fusion and deletion groups from a fitted model");
    c_reduce->add_option("--model", red.model, "Model JSON")->required()->check(CLI::ExistingFile);
    c_reduce->add_option("--threshold", red.threshold, "Equality and deletion threshold");
    c_reduce->add_option("--data", red.data, "Dataset CSV for replicate scores")->check(CLI::ExistingFile);
    c_reduce->add_option("--tree", red.tree, "Tree JSON for replicate scores")->check(CLI::ExistingFile);
    c_reduce->add_option("--out", red.out, "Reduction JSON");
    c_reduce->add_option("--scores", red.scores, "Replicate score CSV");

    SimulateOptions sim;
    auto* c_sim = app.add_subcommand("simulate", "Simulation study on the multiscale scenarios");
    auto* sim_prior = c_sim->add_option("--prior", sim.priors, "Named priors")->delimiter(',');
    c_sim->add_option("--config", sim.configs, "Scenarios among a, b, c, d")->delimiter(',');
    c_sim->add_option("--n", sim.sizes, "Replicate counts")->delimiter(',');
    c_sim->add_option("--prior-params", sim.prior_params, "kind,a1,e1,a2,e2[,theta]")->excludes(sim_prior);
    c_sim->add_option("--reps", sim.reps, "Replications per scenario");
    c_sim->add_option("--height", sim.height, "Tree height");
    c_sim->add_option("--max-em", sim.max_em, "EM iteration limit");
    c_sim->add_option("--multi-start", sim.multi_start, "Random initializations for a stability study (0 = off)");
    c_sim->add_option("--out", sim.out, "Results CSV");
    c_sim->add_option("--distances", sim.distances, "Pairwise distance CSV of a multi-start study");

    ExportSvgOptions svg;
    auto* c_svg = app.add_subcommand("export-svg", "Hull and arrow figures of the reduced groups");
    c_svg->add_option("--reduction", svg.reduction, "Reduction JSON")->required()->check(CLI::ExistingFile);
    c_svg->add_option("--data", svg.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
    c_svg->add_option("--tree", svg.tree, "Tree JSON")->required()->check(CLI::ExistingFile);
    c_svg->add_option("--view", svg.view, "aggregate, replicates or all");
    c_svg->add_option("--prefix", svg.prefix, "File name prefix");

    BenchOptions bench;
    auto* c_bench = app.add_subcommand("bench", "Benchmarks and acceptance checks");
    c_bench->require_subcommand(1);
    auto* c_bench_run = c_bench->add_subcommand("run", "Run every acceptance criterion and write a report");
    c_bench_run->add_flag("--full", bench.full, "Fifty replications per scenario instead of ten");
    c_bench_run->add_option("--only", bench.only, "Criterion ids to run")->delimiter(',');
    c_bench_run->add_option("--golden-design", bench.golden_design, "Replacement reference design matrix text");
    c_bench_run->add_option("--scale-points", bench.scale_points, "Corpus size of the scale check");
    c_bench_run->add_option("--json", bench.json, "Report JSON");
    c_bench_run->add_option("--text", bench.text, "Report text table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        std::cerr << "run with --help for usage\n";
        return 2;
    }

    spinlets::set_thread_limit(global.threads);
    Manifest manifest;
    manifest.seed = global.seed;
    manifest.threads = spinlets::thread_limit();
    collect_flags(&app, "", manifest.flags);
    const CLI::App* chosen = app.get_subcommands().front();
    manifest.subcommand = chosen->get_name();
    collect_flags(chosen, manifest.subcommand + ".", manifest.flags);
    if (chosen == c_bench) {
        manifest.subcommand = "bench run";
        collect_flags(c_bench_run, "bench.run.", manifest.flags);
    }

    int code = 1;
    try {
        if (chosen == c_ingest) code = run_ingest(global, ingest, manifest);
        else if (chosen == c_part) code = run_partition(global, part, manifest);
        else if (chosen == c_fit) code = run_fit(global, fitopt, manifest);
        else if (chosen == c_reduce) code = run_reduce(global, red, manifest);
        else if (chosen == c_sim) code = run_simulate(global, sim, manifest);
        else if (chosen == c_svg) code = run_export_svg(global, svg, manifest);
        else code = run_bench(global, bench, manifest);
        if (code != 0) manifest.status = "failed";
    } catch (const spinlets::ArgumentError& e) {
        std::cerr << "error: " << e.what() << "\n";
        manifest.status = "argument-error";
        manifest.error = e.what();
        code = 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        manifest.status = "error";
        manifest.error = e.what();
        code = 1;
    }
    try {
        manifest.write(global.out_dir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return code == 0 ? 1 : code;
    }
    return code;
}
